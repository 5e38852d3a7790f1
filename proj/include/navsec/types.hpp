#pragma once

// Domain primitives shared by every module: positions in a local flat
// Cartesian frame, integer-nanosecond simulation time, clock models,
// node identifiers and antenna directions.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace navsec {

// Propagation speed is fixed; there is no atmospheric model.
inline constexpr double kSpeedOfLightMps = 299'792'458.0;
inline constexpr double kMetersPerNs = kSpeedOfLightMps * 1e-9;  // ~0.2998 m

inline constexpr int64_t kMicrosecondNs = 1'000;
inline constexpr int64_t kMillisecondNs = 1'000'000;
inline constexpr int64_t kSecondNs = 1'000'000'000;

// ---------------------------------------------------------------------------
// Errors

enum class Errc {
  // codec / crypto
  MalformedMessage,
  IntegrityFailure,
  BadSignature,
  // certificates
  Expired,
  Revoked,
  NoTrustPath,
  NoPositionAssertion,
  // protocol gates
  StaleTimestamp,
  FutureTimestamp,
  UnknownCommitment,
  ReplayedReveal,
  BadCommitSignature,
  NonceMismatch,
  Timeout,
  // geometry / numerics
  DegenerateGeometry,
  SingularGeometry,
  NoConvergence,
  // runner
  ScenarioInvalid,
  IoError,
};

const char* errc_name(Errc c);

struct Error {
  Errc code;
  std::string detail;
};

// Minimal value-or-error carrier. std::expected is not available on the
// toolchains we target yet.
template <typename T>
class [[nodiscard]] Expected {
 public:
  Expected(T value) : v_(std::move(value)) {}
  Expected(Error err) : v_(std::move(err)) {}
  Expected(Errc code, std::string detail = {}) : v_(Error{code, std::move(detail)}) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() { return std::get<T>(v_); }
  const T& value() const { return std::get<T>(v_); }
  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

  const Error& error() const { return std::get<Error>(v_); }
  Errc code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Expected<void> {
 public:
  Expected() = default;
  Expected(Error err) : err_(std::move(err)) {}
  Expected(Errc code, std::string detail = {}) : err_(Error{code, std::move(detail)}) {}

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return *err_; }
  Errc code() const { return err_->code; }

 private:
  std::optional<Error> err_;
};

// ---------------------------------------------------------------------------
// Time

// Nanoseconds since scenario epoch. Integer base so event ordering never
// suffers float drift; 1 ns corresponds to ~0.3 m of light travel, which is
// the spatial resolution floor of the simulation.
struct SimTime {
  int64_t ns = 0;
  auto operator<=>(const SimTime&) const = default;
};

constexpr SimTime operator+(SimTime t, int64_t d) { return {t.ns + d}; }
constexpr SimTime operator-(SimTime t, int64_t d) { return {t.ns - d}; }
constexpr int64_t operator-(SimTime a, SimTime b) { return a.ns - b.ns; }

// ---------------------------------------------------------------------------
// Space

struct Position {
  double x = 0, y = 0, z = 0;
  bool operator==(const Position&) const = default;
};

constexpr Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr Position operator*(Position p, double s) { return {p.x * s, p.y * s, p.z * s}; }

double norm(const Position& p);
double distance(const Position& a, const Position& b);

// One-way time of flight, rounded to the nanosecond grid.
int64_t tof_ns(const Position& a, const Position& b);

// Antenna pointing: azimuth in [0, 2pi), elevation in [-pi/2, pi/2].
struct Direction {
  double azimuth = 0;
  double elevation = 0;
  bool operator==(const Direction&) const = default;

  Position unit_vector() const;
  static Direction normalized(double az, double el);
};

// ---------------------------------------------------------------------------
// Clocks

// reading = floor((true_t * (1 + drift) + bias) / quantization) * quantization
// Readings are monotone non-decreasing for drift > -1.
struct ClockModel {
  int64_t bias_ns = 0;
  double drift = 0.0;            // dimensionless rate error, e.g. 1e-6 = 1 ppm
  int64_t quantization_ns = 1;   // readout granularity, >= 1

  SimTime read(SimTime true_t) const;
};

// ---------------------------------------------------------------------------
// Identity

// 8-byte opaque identifier, unique per scenario.
struct NodeId {
  std::array<uint8_t, 8> bytes{};
  auto operator<=>(const NodeId&) const = default;

  // Short printable labels ("N1", "client-a") map onto the id bytes
  // zero-padded; anything else is rejected at scenario validation.
  static std::optional<NodeId> from_label(const std::string& label);
  std::string to_string() const;
};

}  // namespace navsec
