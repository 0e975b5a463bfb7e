#include "qauto/spdc.hpp"

#include "qauto/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qauto::spdc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

Eigen::Matrix2cd hwp_matrix(double hwp_deg) {
  const double c = std::cos(2.0 * hwp_deg * kDegToRad);
  const double s = std::sin(2.0 * hwp_deg * kDegToRad);
  Eigen::Matrix2cd w;
  w << c, s, s, -c;
  return w;
}

Port port_of(bool reflect) { return reflect ? Port::Reflect : Port::Transmit; }

void check_sorted(std::span<const double> t, const char* which) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] < t[i - 1]) {
      throw Error(ErrorCode::UnsortedStream,
                  std::string(which) + " stream decreases at index " + std::to_string(i));
    }
  }
}

std::vector<double> timestamps(std::span<const DetectionEvent> events) {
  std::vector<double> t;
  t.reserve(events.size());
  for (const auto& e : events) t.push_back(e.timestamp);
  return t;
}

}  // namespace

std::string_view to_string(BellState s) {
  switch (s) {
    case BellState::PsiPlus: return "psi+";
    case BellState::PsiMinus: return "psi-";
    case BellState::PhiPlus: return "phi+";
    case BellState::PhiMinus: return "phi-";
  }
  return "?";
}

BellState parse_bell_state(std::string_view name) {
  for (auto s : {BellState::PsiPlus, BellState::PsiMinus, BellState::PhiPlus,
                 BellState::PhiMinus}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown state '" + std::string(name) + "' (psi+, psi-, phi+, phi-)");
}

TwoPhotonState::TwoPhotonState(const Vec4c& amplitudes) : a_(amplitudes) {
  if (!a_.allFinite() || std::abs(a_.norm() - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "two-photon state must have unit norm");
  }
}

TwoPhotonState TwoPhotonState::bell(BellState s) {
  const double r = std::numbers::sqrt2 / 2.0;
  switch (s) {
    case BellState::PsiPlus: return TwoPhotonState(Vec4c(0, r, r, 0));
    case BellState::PsiMinus: return TwoPhotonState(Vec4c(0, r, -r, 0));
    case BellState::PhiPlus: return TwoPhotonState(Vec4c(r, 0, 0, r));
    case BellState::PhiMinus: return TwoPhotonState(Vec4c(r, 0, 0, -r));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown Bell state");
}

TwoPhotonState TwoPhotonState::product(const qubit::Qubit& alice, const qubit::Qubit& bob) {
  Vec4c v;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) v(2 * a + b) = alice.vector()(a) * bob.vector()(b);
  }
  return TwoPhotonState(v / v.norm());
}

std::vector<EmittedPair> generate_pairs(double rate, double duration, RngStream& rng,
                                        const TwoPhotonState& state) {
  if (!(rate > 0.0) || !(duration >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need rate > 0 and duration >= 0");
  }
  std::vector<EmittedPair> out;
  for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
    out.push_back({t, state});
  }
  return out;
}

std::vector<EmittedPair> generate_pair_count(std::size_t n, double rate, RngStream& rng,
                                             const TwoPhotonState& state) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "need rate > 0");
  std::vector<EmittedPair> out;
  out.reserve(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.exponential(rate);
    out.push_back({t, state});
  }
  return out;
}

TwoPhotonState apply_waveplate(const TwoPhotonState& state, Arm arm, double hwp_deg) {
  const Eigen::Matrix2cd w = hwp_matrix(hwp_deg);
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd& left = arm == Arm::Alice ? w : id;
  const Eigen::Matrix2cd& right = arm == Arm::Alice ? id : w;
  Eigen::Matrix4cd op;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) op.block<2, 2>(2 * i, 2 * j) = left(i, j) * right;
  }
  return TwoPhotonState(op * state.amplitudes());
}

JointProbabilities joint_probabilities(const TwoPhotonState& state, double alpha_deg,
                                       double beta_deg) {
  const double a = alpha_deg * kDegToRad;
  const double b = beta_deg * kDegToRad;
  const Eigen::Vector2d ta(std::cos(a), std::sin(a)), ra(-std::sin(a), std::cos(a));
  const Eigen::Vector2d tb(std::cos(b), std::sin(b)), rb(-std::sin(b), std::cos(b));
  const auto prob = [&](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    Complex amp = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) amp += u(i) * v(j) * state.amplitude(i, j);
    }
    return std::norm(amp);
  };
  return {prob(ta, tb), prob(ta, rb), prob(ra, tb), prob(ra, rb)};
}

std::pair<Port, Port> sample_outcome(const JointProbabilities& p, RngStream& rng) {
  const double u = rng.uniform() * p.sum();
  if (u < p.tt) return {Port::Transmit, Port::Transmit};
  if (u < p.tt + p.tr) return {Port::Transmit, Port::Reflect};
  if (u < p.tt + p.tr + p.rt) return {Port::Reflect, Port::Transmit};
  return {Port::Reflect, Port::Reflect};
}

std::vector<AnalyzedPair> analyze_pairs(std::span<const EmittedPair> pairs, double alpha_deg,
                                        double beta_deg, RngStream& rng) {
  std::vector<AnalyzedPair> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto [pa, pb] = sample_outcome(joint_probabilities(pair.state, alpha_deg, beta_deg), rng);
    out.push_back({pair.time, pa, pb, 0, 0});
  }
  return out;
}

std::vector<AnalyzedPair> analyze_pairs_random(std::span<const EmittedPair> pairs,
                                               const std::array<double, 2>& alpha_deg,
                                               const std::array<double, 2>& beta_deg,
                                               RngStream& rng) {
  std::vector<AnalyzedPair> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const std::uint8_t sa = rng.bernoulli(0.5) ? 1 : 0;
    const std::uint8_t sb = rng.bernoulli(0.5) ? 1 : 0;
    const auto [pa, pb] =
        sample_outcome(joint_probabilities(pair.state, alpha_deg[sa], beta_deg[sb]), rng);
    out.push_back({pair.time, pa, pb, sa, sb});
  }
  return out;
}

void DetectorModel::validate() const {
  if (!is_probability(efficiency) || !(dark_rate >= 0.0) || !(jitter_sigma >= 0.0) ||
      !(dead_time >= 0.0) || !std::isfinite(dark_rate) || !std::isfinite(jitter_sigma) ||
      !std::isfinite(dead_time)) {
    throw Error(ErrorCode::InvalidArgument,
                "detector needs efficiency in [0,1] and non-negative rates and times");
  }
}

namespace {

void add_darks(std::vector<DetectionEvent>& events, Arm arm, const DetectorModel& det,
               double duration, RngStream& rng) {
  if (det.dark_rate <= 0.0) return;
  for (double t = rng.exponential(det.dark_rate); t < duration;
       t += rng.exponential(det.dark_rate)) {
    DetectionEvent e;
    e.arm = arm;
    e.timestamp = t;
    e.port = port_of(rng.bernoulli(0.5));
    e.setting = rng.bernoulli(0.5) ? 1 : 0;
    e.dark = true;
    events.push_back(e);
  }
}

void sort_and_apply_dead_time(std::vector<DetectionEvent>& events, double dead_time) {
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; });
  if (dead_time <= 0.0) return;
  double last[2] = {-INFINITY, -INFINITY};
  std::vector<DetectionEvent> kept;
  kept.reserve(events.size());
  for (const auto& e : events) {
    double& l = last[static_cast<int>(e.port)];
    if (e.timestamp - l < dead_time) continue;
    l = e.timestamp;
    kept.push_back(e);
  }
  events = std::move(kept);
}

}  // namespace

DetectionStreams detect(std::span<const AnalyzedPair> pairs, const DetectorModel& det_a,
                        const DetectorModel& det_b, double duration, RngStream& rng) {
  det_a.validate();
  det_b.validate();
  DetectionStreams out;
  const auto register_photon = [&](std::vector<DetectionEvent>& events, Arm arm,
                                   const DetectorModel& det, double t, Port port,
                                   std::uint8_t setting) {
    if (det.efficiency < 1.0 && !rng.bernoulli(det.efficiency)) return;
    const double jitter = det.jitter_sigma > 0.0 ? det.jitter_sigma * rng.normal() : 0.0;
    events.push_back({arm, t + jitter, port, setting, false});
  };
  for (const auto& p : pairs) {
    register_photon(out.alice, Arm::Alice, det_a, p.time, p.alice, p.alice_setting);
    register_photon(out.bob, Arm::Bob, det_b, p.time, p.bob, p.bob_setting);
  }
  add_darks(out.alice, Arm::Alice, det_a, duration, rng);
  add_darks(out.bob, Arm::Bob, det_b, duration, rng);
  sort_and_apply_dead_time(out.alice, det_a.dead_time);
  sort_and_apply_dead_time(out.bob, det_b.dead_time);
  return out;
}

void CoincidenceConfig::validate() const {
  if (!(window > 0.0) || !std::isfinite(window) || !std::isfinite(clock_skew)) {
    throw Error(ErrorCode::InvalidArgument, "coincidence window must be positive");
  }
}

CoincidenceResult count_coincidences(std::span<const double> times_a,
                                     std::span<const double> times_b,
                                     const CoincidenceConfig& cfg) {
  cfg.validate();
  check_sorted(times_a, "first");
  check_sorted(times_b, "second");
  CoincidenceResult out;
  std::size_t i = 0, j = 0;
  while (i < times_a.size() && j < times_b.size()) {
    const double diff = times_a[i] - times_b[j] - cfg.clock_skew;
    if (diff < -cfg.window) {
      ++i;
    } else if (diff > cfg.window) {
      ++j;
    } else {
      out.matches.emplace_back(i, j);
      ++i;
      ++j;
    }
  }
  out.count = out.matches.size();
  return out;
}

CoincidenceResult count_coincidences(std::span<const DetectionEvent> events_a,
                                     std::span<const DetectionEvent> events_b,
                                     const CoincidenceConfig& cfg) {
  const auto ta = timestamps(events_a);
  const auto tb = timestamps(events_b);
  return count_coincidences(std::span<const double>(ta), std::span<const double>(tb), cfg);
}

void SettingCounts::add(Port a, Port b) {
  if (a == Port::Transmit) {
    ++(b == Port::Transmit ? tt : tr);
  } else {
    ++(b == Port::Transmit ? rt : rr);
  }
}

double correlation(const SettingCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::NoCounts, "no coincidences for this setting");
  return (static_cast<double>(c.tt + c.rr) - static_cast<double>(c.tr + c.rt)) /
         static_cast<double>(c.total());
}

double chsh(double e_ab, double e_abp, double e_apb, double e_apbp) {
  return std::abs(e_ab - e_abp + e_apb + e_apbp);
}

std::vector<TriggerEdge> entanglement_trigger(std::span<const double> times, double min_rate,
                                              double window, double t0) {
  if (!(min_rate > 0.0) || !(window > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need min_rate > 0 and window > 0");
  }
  check_sorted(times, "coincidence");
  const double start = t0 + window;
  // the windowed count only changes when an event enters (t) or leaves (t + window)
  std::vector<double> points{start};
  for (double t : times) {
    if (t >= start) points.push_back(t);
    if (t + window >= start) points.push_back(t + window);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<TriggerEdge> edges;
  bool active = false;
  for (double t : points) {
    const auto hi = std::upper_bound(times.begin(), times.end(), t);
    const auto lo = std::upper_bound(times.begin(), times.end(), t - window);
    const double rate = static_cast<double>(hi - lo) / window;
    const bool now = rate > min_rate;
    if (now != active) {
      edges.push_back({t, now});
      active = now;
    }
  }
  return edges;
}

std::vector<std::pair<double, double>> trigger_intervals(std::span<const TriggerEdge> edges,
                                                         double end_time) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  double rise = 0.0;
  for (const auto& e : edges) {
    if (e.rising && !open) {
      open = true;
      rise = e.time;
    } else if (!e.rising && open) {
      out.emplace_back(rise, e.time);
      open = false;
    }
  }
  if (open && rise < end_time) out.emplace_back(rise, end_time);
  return out;
}

BellTestResult run_bell_test(const BellTestConfig& config, std::uint64_t seed) {
  config.coincidence.validate();
  RngStream source = derive_stream(seed, "spdc.source");
  RngStream analyzer = derive_stream(seed, "spdc.analyzer");
  RngStream detector = derive_stream(seed, "spdc.detector");

  const auto pairs = generate_pair_count(config.pairs, config.pair_rate, source, config.state);
  const auto analyzed = analyze_pairs_random(pairs, config.alpha, config.beta, analyzer);

  BellTestResult r;
  r.duration = (pairs.empty() ? 0.0 : pairs.back().time) + 1.0 / config.pair_rate;
  const auto streams = detect(analyzed, config.det_a, config.det_b, r.duration, detector);
  r.singles_a = streams.alice.size();
  r.singles_b = streams.bob.size();

  const auto co = count_coincidences(std::span<const DetectionEvent>(streams.alice),
                                     std::span<const DetectionEvent>(streams.bob),
                                     config.coincidence);
  r.coincidence_times.reserve(co.count);
  for (const auto& [i, j] : co.matches) {
    const auto& ea = streams.alice[i];
    const auto& eb = streams.bob[j];
    r.counts[ea.setting][eb.setting].add(ea.port, eb.port);
    r.coincidence_times.push_back(ea.timestamp);
  }

  double var = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double e = correlation(r.counts[a][b]);
      r.e[a][b] = e;
      r.e_sigma[a][b] =
          std::sqrt(std::max(0.0, 1.0 - e * e) / static_cast<double>(r.counts[a][b].total()));
      var += r.e_sigma[a][b] * r.e_sigma[a][b];
    }
  }
  r.s = chsh(r.e[0][0], r.e[0][1], r.e[1][0], r.e[1][1]);
  r.s_sigma = std::sqrt(var);
  return r;
}

EntanglementKeyRecords entanglement_key_records(const TwoPhotonState& state, std::size_t pairs,
                                                double pair_rate, const DetectorModel& det_a,
                                                const DetectorModel& det_b,
                                                const CoincidenceConfig& cfg,
                                                std::uint64_t seed) {
  RngStream source = derive_stream(seed, "spdc.key.source");
  RngStream analyzer = derive_stream(seed, "spdc.key.analyzer");
  RngStream detector = derive_stream(seed, "spdc.key.detector");

  using bb84::Basis;
  const std::array<double, 2> angles{bb84::analyzer_angle(Basis::Rectilinear),
                                     bb84::analyzer_angle(Basis::Diagonal)};
  bool flip[2];
  for (int b = 0; b < 2; ++b) {
    const auto p = joint_probabilities(state, angles[b], angles[b]);
    flip[b] = p.tt + p.rr < 0.5;
  }

  const auto emitted = generate_pair_count(pairs, pair_rate, source, state);
  const auto analyzed = analyze_pairs_random(emitted, angles, angles, analyzer);
  const double duration = (emitted.empty() ? 0.0 : emitted.back().time) + 1.0 / pair_rate;
  const auto streams = detect(analyzed, det_a, det_b, duration, detector);
  const auto co = count_coincidences(std::span<const DetectionEvent>(streams.alice),
                                     std::span<const DetectionEvent>(streams.bob), cfg);

  EntanglementKeyRecords out;
  out.alice.reserve(co.count);
  out.bob.reserve(co.count);
  for (std::size_t k = 0; k < co.matches.size(); ++k) {
    const auto& ea = streams.alice[co.matches[k].first];
    const auto& eb = streams.bob[co.matches[k].second];
    bb84::PhotonRecord a;
    a.index = k;
    a.basis = ea.setting == 0 ? Basis::Rectilinear : Basis::Diagonal;
    a.bit = ea.port == Port::Reflect ? 1 : 0;
    a.pol_angle = bb84::polarization_angle(a.basis, a.bit);
    a.timestamp = ea.timestamp;
    bb84::MeasurementOutcome b;
    b.index = k;
    b.basis = eb.setting == 0 ? Basis::Rectilinear : Basis::Diagonal;
    b.detected = true;
    b.bit = static_cast<std::uint8_t>((eb.port == Port::Reflect ? 1 : 0) ^ (flip[eb.setting] ? 1 : 0));
    out.alice.push_back(a);
    out.bob.push_back(b);
  }
  return out;
}

}  // namespace qauto::spdc
