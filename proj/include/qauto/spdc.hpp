#pragma once

// Entangled photon pairs from a down-conversion source: per-arm optics,
// photon counters, coincidence matching, Bell correlations and the digital
// trigger derived from the coincidence rate.

#include "qauto/bb84.hpp"
#include "qauto/qubit.hpp"
#include "qauto/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qauto::spdc {

using Complex = std::complex<double>;
using Vec4c = Eigen::Vector4cd;

enum class Arm { Alice, Bob };
enum class Port : std::uint8_t { Transmit, Reflect };

enum class BellState { PsiPlus, PsiMinus, PhiPlus, PhiMinus };
std::string_view to_string(BellState s);
/// "psi+", "psi-", "phi+", "phi-". Throws InvalidArgument.
BellState parse_bell_state(std::string_view name);

/// Amplitudes over HH, HV, VH, VV (Alice's photon first).
class TwoPhotonState {
 public:
  /// Throws InvalidArgument unless the norm is 1 within 1e-12.
  explicit TwoPhotonState(const Vec4c& amplitudes);

  static TwoPhotonState bell(BellState s);
  static TwoPhotonState product(const qubit::Qubit& alice, const qubit::Qubit& bob);

  const Vec4c& amplitudes() const { return a_; }
  Complex amplitude(int alice, int bob) const { return a_(2 * alice + bob); }

 private:
  Vec4c a_;
};

struct EmittedPair {
  double time = 0.0;
  TwoPhotonState state;
};

/// Poisson emission times on [0, duration), every pair in `state`.
std::vector<EmittedPair> generate_pairs(double rate, double duration, RngStream& rng,
                                        const TwoPhotonState& state);

/// Exactly n pairs with exponential spacing at `rate`.
std::vector<EmittedPair> generate_pair_count(std::size_t n, double rate, RngStream& rng,
                                             const TwoPhotonState& state);

/// Half-wave plate with fast axis at hwp_deg on one arm:
/// H -> cos2t H + sin2t V, V -> sin2t H - cos2t V.
TwoPhotonState apply_waveplate(const TwoPhotonState& state, Arm arm, double hwp_deg);

struct JointProbabilities {
  double tt = 0.0, tr = 0.0, rt = 0.0, rr = 0.0;

  double sum() const { return tt + tr + rt + rr; }
  double correlation() const { return tt + rr - tr - rt; }
  /// Bob's probability of the transmit port, summed over Alice's outcomes.
  double bob_transmit() const { return tt + rt; }
  double alice_transmit() const { return tt + tr; }
};

/// Linear-polarization analyzers at alpha (Alice) and beta (Bob), degrees.
/// Transmit projects onto (cos a, sin a), reflect onto (-sin a, cos a).
JointProbabilities joint_probabilities(const TwoPhotonState& state, double alpha_deg,
                                       double beta_deg);

struct AnalyzedPair {
  double time = 0.0;
  Port alice = Port::Transmit;
  Port bob = Port::Transmit;
  std::uint8_t alice_setting = 0;
  std::uint8_t bob_setting = 0;
};

/// One joint outcome drawn from joint_probabilities (a single uniform).
std::pair<Port, Port> sample_outcome(const JointProbabilities& p, RngStream& rng);

/// Fixed analyzer angles for every pair.
std::vector<AnalyzedPair> analyze_pairs(std::span<const EmittedPair> pairs, double alpha_deg,
                                        double beta_deg, RngStream& rng);

/// Each side picks one of two settings uniformly per pair.
std::vector<AnalyzedPair> analyze_pairs_random(std::span<const EmittedPair> pairs,
                                               const std::array<double, 2>& alpha_deg,
                                               const std::array<double, 2>& beta_deg,
                                               RngStream& rng);

struct DetectorModel {
  double efficiency = 0.35;
  double dark_rate = 0.0;     // Hz, per detector (both ports together)
  double jitter_sigma = 0.0;  // seconds
  double dead_time = 0.0;     // seconds, per port

  static DetectorModel ideal() { return {1.0, 0.0, 0.0, 0.0}; }
  /// Throws InvalidArgument.
  void validate() const;
};

struct DetectionEvent {
  Arm arm = Arm::Alice;
  double timestamp = 0.0;
  Port port = Port::Transmit;
  std::uint8_t setting = 0;
  bool dark = false;
};

struct DetectionStreams {
  std::vector<DetectionEvent> alice;
  std::vector<DetectionEvent> bob;
};

/// Efficiency thinning, Gaussian jitter, Poisson dark counts over
/// [0, duration) on a random port (and random setting slot), then
/// per-port dead-time suppression. Streams come back time-sorted.
DetectionStreams detect(std::span<const AnalyzedPair> pairs, const DetectorModel& det_a,
                        const DetectorModel& det_b, double duration, RngStream& rng);

struct CoincidenceConfig {
  double window = 25e-9;
  double clock_skew = 0.0;

  void validate() const;
};

struct CoincidenceResult {
  std::size_t count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (alice idx, bob idx)
};

/// Greedy earliest-first two-pointer sweep pairing events with
/// |tA - tB - skew| <= window. Throws UnsortedStream.
CoincidenceResult count_coincidences(std::span<const double> times_a,
                                     std::span<const double> times_b,
                                     const CoincidenceConfig& cfg);
CoincidenceResult count_coincidences(std::span<const DetectionEvent> events_a,
                                     std::span<const DetectionEvent> events_b,
                                     const CoincidenceConfig& cfg);

struct SettingCounts {
  std::size_t tt = 0, tr = 0, rt = 0, rr = 0;

  std::size_t total() const { return tt + tr + rt + rr; }
  void add(Port a, Port b);
};

/// (N_TT + N_RR - N_TR - N_RT) / N. Throws NoCounts.
double correlation(const SettingCounts& counts);

/// |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
double chsh(double e_ab, double e_abp, double e_apb, double e_apbp);

struct TriggerEdge {
  double time = 0.0;
  bool rising = true;
};

/// Edges of the predicate "coincidences in (t - window, t] / window >
/// min_rate", evaluated from t0 + window onward. `times` must be sorted.
std::vector<TriggerEdge> entanglement_trigger(std::span<const double> times, double min_rate,
                                              double window, double t0 = 0.0);

/// Active intervals [rise, fall); an unmatched rise extends to end_time.
std::vector<std::pair<double, double>> trigger_intervals(std::span<const TriggerEdge> edges,
                                                         double end_time);

struct BellTestConfig {
  TwoPhotonState state = TwoPhotonState::bell(BellState::PhiPlus);
  std::array<double, 2> alpha{0.0, 45.0};
  std::array<double, 2> beta{22.5, 67.5};
  std::size_t pairs = 100000;
  double pair_rate = 1e4;  // Hz
  DetectorModel det_a = DetectorModel::ideal();
  DetectorModel det_b = DetectorModel::ideal();
  CoincidenceConfig coincidence;
};

struct BellTestResult {
  std::array<std::array<SettingCounts, 2>, 2> counts{};  // [alice setting][bob setting]
  std::array<std::array<double, 2>, 2> e{};
  std::array<std::array<double, 2>, 2> e_sigma{};
  double s = 0.0;
  double s_sigma = 0.0;
  double duration = 0.0;
  std::size_t singles_a = 0;
  std::size_t singles_b = 0;
  std::vector<double> coincidence_times;  // Alice-side timestamps, sorted
};

/// Random-setting CHSH run through source, analyzers, detectors and the
/// coincidence counter. Uses the streams "spdc.source", "spdc.analyzer"
/// and "spdc.detector" derived from seed.
BellTestResult run_bell_test(const BellTestConfig& config, std::uint64_t seed);

/// Entanglement-based key: each side measures in a random BB84 basis and
/// the coincidences are turned into records that bb84::sift accepts. Bob's
/// bit is flipped in any basis where the state is anticorrelated.
struct EntanglementKeyRecords {
  std::vector<bb84::PhotonRecord> alice;
  std::vector<bb84::MeasurementOutcome> bob;
};
EntanglementKeyRecords entanglement_key_records(const TwoPhotonState& state, std::size_t pairs,
                                                double pair_rate, const DetectorModel& det_a,
                                                const DetectorModel& det_b,
                                                const CoincidenceConfig& cfg, std::uint64_t seed);

}  // namespace qauto::spdc
