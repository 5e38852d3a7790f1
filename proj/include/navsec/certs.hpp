#pragma once

// Modular certificates: small assertion bundles with a validity window, a
// subject id, the certifier's public key and a signature over the hash of
// the canonical encoding. A TrustPolicy drives chain resolution from root
// keys to a subject's delegated key.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "navsec/bytes.hpp"
#include "navsec/crypto.hpp"
#include "navsec/types.hpp"

namespace navsec::certs {

enum class AssertionKind : uint8_t {
  PositionFunction = 0x01,
  AntennaDirection = 0x02,
  TailNumber = 0x03,
  PlatformType = 0x04,
  PublicKeyDelegation = 0x05,
  CryptoSecurityType = 0x06,
  PhysicalSecurityLevel = 0x07,
  Owner = 0x08,
  OwnerType = 0x09,
  ReceiverSensitivity = 0x0A,
  TransmitPower = 0x0B,
  // Extension: certified fixed turnaround delay of an active responder, in
  // nanoseconds. Ranging clients subtract exactly this value.
  ProcessingDelay = 0x40,
};

const char* assertion_kind_name(AssertionKind k);

// Unknown kinds decode fine and re-encode byte-identically.
struct Assertion {
  uint8_t kind = 0;
  Bytes value;
  bool operator==(const Assertion&) const = default;
};

// Position as a function of time: constant, or linear p0 + v * (t - t0).
struct PositionFunction {
  Position p0;
  Position velocity;
  SimTime t0;
  bool linear = false;

  Position at(SimTime t) const {
    if (!linear) return p0;
    const double dt_s = static_cast<double>(t - t0) * 1e-9;
    return p0 + velocity * dt_s;
  }
};

// Antenna direction as a function of time: fixed, or azimuth spinning at a
// constant rate from az0 at t0.
struct DirectionSchedule {
  double az0 = 0;
  double elevation = 0;
  double spin_rate = 0;  // rad/s
  SimTime t0;
  bool spinning = false;

  Direction at(SimTime t) const {
    if (!spinning) return Direction::normalized(az0, elevation);
    const double dt_s = static_cast<double>(t - t0) * 1e-9;
    return Direction::normalized(az0 + spin_rate * dt_s, elevation);
  }
};

Assertion make_position_assertion(const PositionFunction& f);
Assertion make_direction_assertion(const DirectionSchedule& s);
Assertion make_delegation_assertion(const crypto::PublicKey& k);
Assertion make_level_assertion(AssertionKind kind, uint8_t level);  // crypto/physical security, platform, owner type
Assertion make_string_assertion(AssertionKind kind, const std::string& s);
Assertion make_processing_delay_assertion(int64_t delay_ns);

struct Certificate {
  std::vector<Assertion> assertions;
  SimTime valid_from;
  SimTime valid_to;
  NodeId subject;
  crypto::PublicKey certifier;
  crypto::Signature signature;

  bool operator==(const Certificate&) const = default;

  // Everything the signature covers, deterministically encoded.
  Bytes canonical_prefix() const;
  // Full wire form (type 0x08), byte-stable across decode/encode cycles.
  Bytes encode() const;
  static Expected<Certificate> decode(ConstBytes buf);

  crypto::Digest digest() const;  // hash of encode(), used for revocation

  std::optional<PositionFunction> position_function() const;
  std::optional<DirectionSchedule> direction_schedule() const;
  std::optional<crypto::PublicKey> delegated_key() const;
  std::optional<uint8_t> level(AssertionKind kind) const;
  std::optional<int64_t> processing_delay_ns() const;
};

struct TrustPolicy {
  std::vector<crypto::PublicKey> roots;
  // Minimum security levels a certificate must assert before an assertion of
  // the keyed kind is trusted from it. Missing entry = no requirement;
  // missing assertion on the certificate = level 0.
  std::map<AssertionKind, uint8_t> min_crypto_security;
  std::map<AssertionKind, uint8_t> min_physical_security;
  std::set<crypto::Digest> revoked;
  int max_depth = 8;
};

Certificate issue(const crypto::PrivateKey& certifier_priv, NodeId subject,
                  std::vector<Assertion> assertions, SimTime valid_from, SimTime valid_to);

// signature valid AND now inside [valid_from, valid_to] AND not revoked.
// Errors are distinct: BadSignature, Expired, Revoked.
Expected<void> verify(const Certificate& c, SimTime now, const TrustPolicy& policy);
Expected<void> verify(const Certificate& c, SimTime now);

Expected<void> meets_policy(const Certificate& c, AssertionKind consumed_kind,
                            const TrustPolicy& policy);

// Walks delegation links from a policy root to `id`; every link must verify
// at `now` and meet the policy minimums for PublicKeyDelegation.
Expected<crypto::PublicKey> resolve_key(const NodeId& id, std::span<const Certificate> chain,
                                        const TrustPolicy& policy, SimTime now);

Expected<Position> navaid_position_at(const Certificate& c, SimTime t);

}  // namespace navsec::certs
