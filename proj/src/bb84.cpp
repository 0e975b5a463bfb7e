#include "qauto/bb84.hpp"

#include "qauto/error.hpp"
#include "qauto/qubit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

namespace qauto::bb84 {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

Basis random_basis(RngStream& rng) {
  return rng.bernoulli(0.5) ? Basis::Diagonal : Basis::Rectilinear;
}

// Born-rule bit for a photon at `angle` measured with the analyzer of
// `basis`: 0 when it exits the transmitting port.
std::uint8_t measure_bit(double angle, Basis basis, RngStream& rng) {
  const auto state = qubit::Qubit::linear_polarization(angle * kDegToRad);
  const auto analyzer = qubit::MeasurementBasis::angle(analyzer_angle(basis) * kDegToRad);
  return qubit::measure(state, analyzer, rng).outcome == qubit::Outcome::Plus ? 0 : 1;
}

std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes) {
  std::uint32_t h = 0x811C9DC5U;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x01000193U;
  }
  return h;
}

void check_aligned(const SiftedKey& a, const SiftedKey& b) {
  if (a.bits.size() != b.bits.size() || a.source_indices != b.source_indices) {
    throw Error(ErrorCode::MisalignedStreams, "sifted keys are not index-aligned");
  }
}

}  // namespace

std::string_view to_string(Basis basis) {
  return basis == Basis::Rectilinear ? "plus" : "cross";
}

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::Clean ? "clean" : "compromised";
}

double polarization_angle(Basis basis, std::uint8_t bit) {
  if (basis == Basis::Rectilinear) return bit == 0 ? 0.0 : 90.0;
  return bit == 0 ? 45.0 : -45.0;
}

double analyzer_angle(Basis basis) { return basis == Basis::Rectilinear ? 0.0 : 45.0; }

void ChannelModel::validate() const {
  if (!is_probability(transmittance) || !is_probability(depolarization_prob) ||
      !is_probability(detector_efficiency) || (eve && !is_probability(eve->fraction))) {
    throw Error(ErrorCode::InvalidArgument, "channel probabilities must lie in [0, 1]");
  }
}

std::vector<PhotonRecord> alice_prepare(std::size_t n, RngStream& rng, double pulse_period) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one photon");
  std::vector<PhotonRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PhotonRecord r;
    r.index = i;
    r.bit = rng.bernoulli(0.5) ? 1 : 0;
    r.basis = random_basis(rng);
    r.pol_angle = polarization_angle(r.basis, r.bit);
    r.timestamp = static_cast<double>(i) * pulse_period;
    out.push_back(r);
  }
  return out;
}

std::vector<ArrivingPhoton> transmit(std::span<const PhotonRecord> records,
                                     const ChannelModel& channel, RngStream& rng) {
  channel.validate();
  std::vector<ArrivingPhoton> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    ArrivingPhoton a;
    a.index = r.index;
    a.angle = r.pol_angle;
    if (channel.eve && rng.bernoulli(channel.eve->fraction)) {
      a.intercepted = true;
      a.eve_basis = random_basis(rng);
      a.eve_bit = measure_bit(a.angle, a.eve_basis, rng);
      a.angle = polarization_angle(a.eve_basis, a.eve_bit);
    }
    if (channel.depolarization_prob > 0.0 && rng.bernoulli(channel.depolarization_prob)) {
      a.depolarized = true;
      a.angle = 180.0 * rng.uniform() - 90.0;
    }
    if (channel.transmittance < 1.0 && !rng.bernoulli(channel.transmittance)) a.lost = true;
    out.push_back(a);
  }
  return out;
}

std::vector<MeasurementOutcome> bob_measure_with_bases(std::span<const ArrivingPhoton> arrivals,
                                                       std::span<const Basis> bases,
                                                       const ChannelModel& channel,
                                                       RngStream& rng) {
  channel.validate();
  if (bases.size() != arrivals.size()) {
    throw Error(ErrorCode::MisalignedStreams, "one basis per arriving photon required");
  }
  std::vector<MeasurementOutcome> out;
  out.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const auto& a = arrivals[i];
    MeasurementOutcome m;
    m.index = a.index;
    m.basis = bases[i];
    if (!a.lost) {
      m.bit = measure_bit(a.angle, m.basis, rng);
      m.detected = channel.detector_efficiency >= 1.0 || rng.bernoulli(channel.detector_efficiency);
      if (!m.detected) m.bit = 0;
    }
    out.push_back(m);
  }
  return out;
}

std::vector<MeasurementOutcome> bob_measure(std::span<const ArrivingPhoton> arrivals,
                                            const ChannelModel& channel, RngStream& rng) {
  std::vector<Basis> bases;
  bases.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) bases.push_back(random_basis(rng));
  return bob_measure_with_bases(arrivals, bases, channel, rng);
}

SiftResult sift(std::span<const PhotonRecord> alice_records,
                std::span<const MeasurementOutcome> bob_outcomes) {
  if (alice_records.size() != bob_outcomes.size()) {
    throw Error(ErrorCode::MisalignedStreams, "record and outcome streams differ in length");
  }
  SiftResult out;
  for (std::size_t i = 0; i < alice_records.size(); ++i) {
    const auto& a = alice_records[i];
    const auto& b = bob_outcomes[i];
    if (a.index != b.index) {
      throw Error(ErrorCode::MisalignedStreams,
                  "index mismatch at position " + std::to_string(i));
    }
    if (!b.detected || a.basis != b.basis) continue;
    out.alice.bits.push_back(a.bit);
    out.alice.source_indices.push_back(a.index);
    out.bob.bits.push_back(b.bit);
    out.bob.source_indices.push_back(b.index);
  }
  return out;
}

QberEstimate estimate_qber(const SiftedKey& alice_key, const SiftedKey& bob_key,
                           double sample_fraction, RngStream& rng) {
  check_aligned(alice_key, bob_key);
  const std::size_t n = alice_key.bits.size();
  if (n == 0) throw Error(ErrorCode::EmptyKey, "cannot estimate QBER on an empty key");
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample_fraction must lie in (0, 1)");
  }
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(sample_fraction * static_cast<double>(n))), 1, n);

  // partial Fisher-Yates: the first k slots become the disclosed positions
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> disclosed(n, false);
  for (std::size_t i = 0; i < k; ++i) disclosed[order[i]] = true;

  QberEstimate out;
  out.sample_size = k;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t source = alice_key.source_indices[pos];
    if (disclosed[pos]) {
      if (alice_key.bits[pos] != bob_key.bits[pos]) ++out.mismatches;
      out.alice.qber_sample_indices.push_back(source);
      out.bob.qber_sample_indices.push_back(source);
    } else {
      out.alice.bits.push_back(alice_key.bits[pos]);
      out.alice.source_indices.push_back(source);
      out.bob.bits.push_back(bob_key.bits[pos]);
      out.bob.source_indices.push_back(source);
    }
  }
  out.qber = static_cast<double>(out.mismatches) / static_cast<double>(k);
  return out;
}

Verdict detect_eve(double qber, double threshold) {
  if (!(threshold > 0.0 && threshold <= 0.25)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 0.25]");
  }
  return qber > threshold ? Verdict::Compromised : Verdict::Clean;
}

std::vector<std::uint8_t> otp_apply(std::span<const std::uint8_t> message,
                                    std::span<const std::uint8_t> key_bits) {
  if (key_bits.size() < 8 * message.size()) {
    throw Error(ErrorCode::KeyExhausted, "key has " + std::to_string(key_bits.size()) +
                                             " bits, message needs " +
                                             std::to_string(8 * message.size()));
  }
  std::vector<std::uint8_t> out(message.begin(), message.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint8_t pad = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      pad = static_cast<std::uint8_t>((pad << 1) | (key_bits[8 * i + b] & 1U));
    }
    out[i] ^= pad;
  }
  return out;
}

OneTimePad::OneTimePad(std::vector<std::uint8_t> key_bits) : bits_(std::move(key_bits)) {}

std::vector<std::uint8_t> OneTimePad::apply(std::span<const std::uint8_t> message) {
  return apply_at(message, cursor_);
}

std::vector<std::uint8_t> OneTimePad::apply_at(std::span<const std::uint8_t> message,
                                               std::size_t offset) {
  if (offset < cursor_) {
    throw Error(ErrorCode::KeyReuse, "key bits before offset " + std::to_string(cursor_) +
                                         " were already consumed");
  }
  const std::size_t need = 8 * message.size();
  if (offset > bits_.size() || bits_.size() - offset < need) {
    throw Error(ErrorCode::KeyExhausted, "one-time pad has too few unused bits");
  }
  auto out = otp_apply(message, std::span<const std::uint8_t>(bits_).subspan(offset, need));
  cursor_ = offset + need;
  return out;
}

std::vector<std::uint8_t> frame_command(std::uint16_t sequence,
                                        std::span<const std::uint8_t> payload) {
  if (payload.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "payload too large");
  std::vector<std::uint8_t> f{'Q', 'C'};
  f.push_back(static_cast<std::uint8_t>(sequence & 0xFF));
  f.push_back(static_cast<std::uint8_t>(sequence >> 8));
  f.push_back(static_cast<std::uint8_t>(payload.size() & 0xFF));
  f.push_back(static_cast<std::uint8_t>(payload.size() >> 8));
  f.insert(f.end(), payload.begin(), payload.end());
  const std::uint32_t sum = fnv1a32(f);
  for (int k = 0; k < 4; ++k) f.push_back(static_cast<std::uint8_t>(sum >> (8 * k)));
  return f;
}

std::optional<std::vector<std::uint8_t>> unframe_command(std::span<const std::uint8_t> f,
                                                         std::optional<std::uint16_t> sequence) {
  if (f.size() < 10 || f[0] != 'Q' || f[1] != 'C') return std::nullopt;
  const auto seq = static_cast<std::uint16_t>(f[2] | (f[3] << 8));
  const std::size_t len = static_cast<std::size_t>(f[4] | (f[5] << 8));
  if (f.size() != 10 + len) return std::nullopt;
  std::uint32_t sum = 0;
  for (int k = 0; k < 4; ++k) sum |= static_cast<std::uint32_t>(f[6 + len + k]) << (8 * k);
  if (sum != fnv1a32(f.first(6 + len))) return std::nullopt;
  if (sequence && *sequence != seq) return std::nullopt;
  return std::vector<std::uint8_t>(f.begin() + 6, f.begin() + 6 + static_cast<long>(len));
}

std::vector<std::uint8_t> seal_command(std::uint16_t sequence,
                                       std::span<const std::uint8_t> payload, OneTimePad& pad) {
  return pad.apply(frame_command(sequence, payload));
}

std::optional<std::vector<std::uint8_t>> open_command(std::span<const std::uint8_t> ciphertext,
                                                      OneTimePad& pad,
                                                      std::optional<std::uint16_t> sequence) {
  const auto plain = pad.apply(ciphertext);
  return unframe_command(plain, sequence);
}

std::vector<std::uint8_t> encode_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(8 * values.size());
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return out;
}

std::optional<std::vector<double>> decode_doubles(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 8 != 0) return std::nullopt;
  std::vector<double> out;
  for (std::size_t i = 0; i < bytes.size(); i += 8) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[i + k]) << (8 * k);
    out.push_back(std::bit_cast<double>(bits));
  }
  return out;
}

double Session::sift_fraction() const {
  return prepared.empty() ? 0.0
                          : static_cast<double>(sifted.alice.bits.size()) /
                                static_cast<double>(prepared.size());
}

Session run_session(const SessionConfig& config, std::uint64_t seed) {
  config.channel.validate();
  RngStream prepare_rng = derive_stream(seed, "bb84.prepare");
  RngStream channel_rng = derive_stream(seed, "bb84.channel");
  RngStream bob_rng = derive_stream(seed, "bb84.bob");
  RngStream qber_rng = derive_stream(seed, "bb84.qber");

  Session s;
  s.prepared = alice_prepare(config.n, prepare_rng, config.pulse_period);
  s.arrivals = transmit(s.prepared, config.channel, channel_rng);
  s.outcomes = bob_measure(s.arrivals, config.channel, bob_rng);
  s.sifted = sift(s.prepared, s.outcomes);
  if (s.sifted.alice.bits.empty()) {
    // nothing to disclose: treat the link as unusable
    s.estimate = {};
    s.estimate.qber = 1.0;
    s.verdict = Verdict::Compromised;
    return s;
  }
  s.estimate = estimate_qber(s.sifted.alice, s.sifted.bob, config.sample_fraction, qber_rng);
  s.verdict = detect_eve(s.estimate.qber, config.threshold);
  return s;
}

}  // namespace qauto::bb84
