#pragma once

// Prepare-and-measure key distribution over polarized single photons with
// an optional intercept-resend eavesdropper, public basis sifting, QBER
// estimation and one-time-pad protection of command frames.

#include "qauto/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qauto::bb84 {

enum class Basis : std::uint8_t {
  Rectilinear,  // "+": 0 deg / 90 deg
  Diagonal,     // "x": +45 deg / -45 deg
};

std::string_view to_string(Basis basis);

/// Polarization angle in degrees for a (basis, bit) pair:
/// +/0 -> 0, +/1 -> 90, x/0 -> 45, x/1 -> -45.
double polarization_angle(Basis basis, std::uint8_t bit);

/// Analyzer angle of a measurement basis in degrees (0 or 45).
double analyzer_angle(Basis basis);

struct PhotonRecord {
  std::size_t index = 0;
  std::uint8_t bit = 0;
  Basis basis = Basis::Rectilinear;
  double pol_angle = 0.0;  // degrees
  double timestamp = 0.0;  // seconds
};

struct InterceptResend {
  double fraction = 1.0;  // probability Eve attacks a given photon
};

struct ChannelModel {
  double transmittance = 1.0;
  double depolarization_prob = 0.0;
  double detector_efficiency = 1.0;
  std::optional<InterceptResend> eve;

  /// Throws InvalidArgument for probabilities outside [0, 1].
  void validate() const;
};

/// What reaches Bob's station for one prepared photon.
struct ArrivingPhoton {
  std::size_t index = 0;
  bool lost = false;
  double angle = 0.0;  // polarization on arrival, degrees
  bool intercepted = false;
  Basis eve_basis = Basis::Rectilinear;
  std::uint8_t eve_bit = 0;
  bool depolarized = false;
};

struct MeasurementOutcome {
  std::size_t index = 0;
  Basis basis = Basis::Rectilinear;
  bool detected = false;
  std::uint8_t bit = 0;  // meaningful only when detected
};

struct SiftedKey {
  std::vector<std::uint8_t> bits;
  std::vector<std::size_t> source_indices;
  std::vector<std::size_t> qber_sample_indices;  // disclosed, not in bits
};

/// Pulse period of the preparation clock, seconds.
inline constexpr double kDefaultPulsePeriod = 1e-6;

/// n photons with i.i.d. uniform bits and bases.
std::vector<PhotonRecord> alice_prepare(std::size_t n, RngStream& rng,
                                        double pulse_period = kDefaultPulsePeriod);

/// Loss, intercept-resend and depolarization applied per photon.
std::vector<ArrivingPhoton> transmit(std::span<const PhotonRecord> records,
                                     const ChannelModel& channel, RngStream& rng);

/// Uniform basis choice, Born-rule outcome and detector efficiency.
std::vector<MeasurementOutcome> bob_measure(std::span<const ArrivingPhoton> arrivals,
                                            const ChannelModel& channel, RngStream& rng);

/// Same, with Bob's bases fixed by the caller (one per arrival).
std::vector<MeasurementOutcome> bob_measure_with_bases(std::span<const ArrivingPhoton> arrivals,
                                                       std::span<const Basis> bases,
                                                       const ChannelModel& channel,
                                                       RngStream& rng);

struct SiftResult {
  SiftedKey alice;
  SiftedKey bob;
};

/// Keeps indices where Bob detected and the bases agree. Throws
/// MisalignedStreams.
SiftResult sift(std::span<const PhotonRecord> alice_records,
                std::span<const MeasurementOutcome> bob_outcomes);

struct QberEstimate {
  double qber = 0.0;
  std::size_t sample_size = 0;
  std::size_t mismatches = 0;
  SiftedKey alice;  // remaining key after disclosure
  SiftedKey bob;
};

/// Default disclosed fraction of the sifted key.
inline constexpr double kDefaultSampleFraction = 0.2;

/// Discloses max(1, round(fraction * n)) random positions. Throws EmptyKey
/// and MisalignedStreams.
QberEstimate estimate_qber(const SiftedKey& alice_key, const SiftedKey& bob_key,
                           double sample_fraction, RngStream& rng);

enum class Verdict { Clean, Compromised };
std::string_view to_string(Verdict verdict);

inline constexpr double kDefaultQberThreshold = 0.11;

/// Compromised iff qber > threshold. Threshold must lie in (0, 0.25].
Verdict detect_eve(double qber, double threshold = kDefaultQberThreshold);

/// Bitwise XOR of message with key bits (MSB-first within each byte).
/// Throws KeyExhausted when key_bits.size() < 8 * message.size().
std::vector<std::uint8_t> otp_apply(std::span<const std::uint8_t> message,
                                    std::span<const std::uint8_t> key_bits);

/// A key with a consumption cursor: every bit is used at most once.
class OneTimePad {
 public:
  OneTimePad() = default;
  explicit OneTimePad(std::vector<std::uint8_t> key_bits);

  /// Encrypts/decrypts with the next 8 * message.size() bits.
  std::vector<std::uint8_t> apply(std::span<const std::uint8_t> message);
  /// Uses bits starting at an explicit offset, which must not lie before
  /// the cursor (KeyReuse). The cursor moves past the used bits.
  std::vector<std::uint8_t> apply_at(std::span<const std::uint8_t> message, std::size_t offset);

  std::size_t cursor() const { return cursor_; }
  std::size_t remaining_bits() const { return bits_.size() - cursor_; }
  std::size_t size() const { return bits_.size(); }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t cursor_ = 0;
};

/// Framed command: "QC" magic, sequence number, payload length, payload,
/// FNV-1a-32 checksum. The checksum detects garbled decryption; it is not
/// a MAC.
std::vector<std::uint8_t> frame_command(std::uint16_t sequence,
                                        std::span<const std::uint8_t> payload);

/// Payload of a well-formed frame, or nullopt.
std::optional<std::vector<std::uint8_t>> unframe_command(std::span<const std::uint8_t> frame,
                                                         std::optional<std::uint16_t> sequence =
                                                             std::nullopt);

/// Frame then encrypt with the pad.
std::vector<std::uint8_t> seal_command(std::uint16_t sequence,
                                       std::span<const std::uint8_t> payload, OneTimePad& pad);

/// Decrypt with the pad (always consuming frame-length bits) then check the
/// frame.
std::optional<std::vector<std::uint8_t>> open_command(std::span<const std::uint8_t> ciphertext,
                                                      OneTimePad& pad,
                                                      std::optional<std::uint16_t> sequence =
                                                          std::nullopt);

/// Little-endian encoding helpers for command payloads.
std::vector<std::uint8_t> encode_doubles(std::span<const double> values);
std::optional<std::vector<double>> decode_doubles(std::span<const std::uint8_t> bytes);

struct SessionConfig {
  std::size_t n = 100000;
  ChannelModel channel;
  double sample_fraction = kDefaultSampleFraction;
  double threshold = kDefaultQberThreshold;
  double pulse_period = kDefaultPulsePeriod;
};

/// Full protocol run: prepare, transmit, measure, sift, estimate, decide.
struct Session {
  std::vector<PhotonRecord> prepared;
  std::vector<ArrivingPhoton> arrivals;
  std::vector<MeasurementOutcome> outcomes;
  SiftResult sifted;
  QberEstimate estimate;
  Verdict verdict = Verdict::Clean;

  double sift_fraction() const;
};

/// Uses the streams "bb84.prepare", "bb84.channel", "bb84.bob" and
/// "bb84.qber" derived from seed.
Session run_session(const SessionConfig& config, std::uint64_t seed);

}  // namespace qauto::bb84
