#include "navsec/types.hpp"

#include <cctype>

namespace navsec {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::BadSignature: return "BadSignature";
    case Errc::Expired: return "Expired";
    case Errc::Revoked: return "Revoked";
    case Errc::NoTrustPath: return "NoTrustPath";
    case Errc::NoPositionAssertion: return "NoPositionAssertion";
    case Errc::StaleTimestamp: return "StaleTimestamp";
    case Errc::FutureTimestamp: return "FutureTimestamp";
    case Errc::UnknownCommitment: return "UnknownCommitment";
    case Errc::ReplayedReveal: return "ReplayedReveal";
    case Errc::BadCommitSignature: return "BadCommitSignature";
    case Errc::NonceMismatch: return "NonceMismatch";
    case Errc::Timeout: return "Timeout";
    case Errc::DegenerateGeometry: return "DegenerateGeometry";
    case Errc::SingularGeometry: return "SingularGeometry";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

double norm(const Position& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }

double distance(const Position& a, const Position& b) { return norm(a - b); }

int64_t tof_ns(const Position& a, const Position& b) {
  return std::llround(distance(a, b) / kMetersPerNs);
}

Position Direction::unit_vector() const {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

Direction Direction::normalized(double az, double el) {
  const double two_pi = 2.0 * M_PI;
  az = std::fmod(az, two_pi);
  if (az < 0) az += two_pi;
  if (el > M_PI / 2) el = M_PI / 2;
  if (el < -M_PI / 2) el = -M_PI / 2;
  return {az, el};
}

SimTime ClockModel::read(SimTime true_t) const {
  // long double keeps the full int64 range exact on x86 (64-bit mantissa).
  const long double q = static_cast<long double>(quantization_ns);
  const long double raw =
      static_cast<long double>(true_t.ns) * (1.0L + static_cast<long double>(drift)) +
      static_cast<long double>(bias_ns);
  const long double quantized = std::floor(raw / q) * q;
  return SimTime{static_cast<int64_t>(quantized)};
}

std::optional<NodeId> NodeId::from_label(const std::string& label) {
  if (label.empty() || label.size() > 8) return std::nullopt;
  NodeId id;
  for (size_t i = 0; i < label.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(label[i]);
    if (!std::isprint(c)) return std::nullopt;
    id.bytes[i] = c;
  }
  return id;
}

std::string NodeId::to_string() const {
  // Render as the original label when the padding pattern allows, otherwise hex.
  size_t len = 8;
  while (len > 0 && bytes[len - 1] == 0) --len;
  bool printable = len > 0;
  for (size_t i = 0; i < len; ++i) {
    if (!std::isprint(bytes[i])) printable = false;
  }
  if (printable) return std::string(bytes.begin(), bytes.begin() + len);
  static const char* hexd = "0123456789abcdef";
  std::string out = "0x";
  for (uint8_t b : bytes) {
    out.push_back(hexd[b >> 4]);
    out.push_back(hexd[b & 0xF]);
  }
  return out;
}

}  // namespace navsec
