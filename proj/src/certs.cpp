#include "navsec/certs.hpp"

#include <algorithm>

#include "navsec/wire.hpp"

namespace navsec::certs {

namespace {

Bytes encode_prefix(const Certificate& c) {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(wire::MsgType::Cert));
  w.u8(wire::kVersion);
  w.raw(c.subject.bytes);
  w.u64(static_cast<uint64_t>(c.valid_from.ns));
  w.u64(static_cast<uint64_t>(c.valid_to.ns));
  w.u8(static_cast<uint8_t>(c.certifier.algo));
  w.var(c.certifier.bytes);
  w.u16(static_cast<uint16_t>(c.assertions.size()));
  for (const Assertion& a : c.assertions) {
    w.u8(a.kind);
    w.var(a.value);
  }
  return w.take();
}

}  // namespace

const char* assertion_kind_name(AssertionKind k) {
  switch (k) {
    case AssertionKind::PositionFunction: return "position_function";
    case AssertionKind::AntennaDirection: return "antenna_direction";
    case AssertionKind::TailNumber: return "tail_number";
    case AssertionKind::PlatformType: return "platform_type";
    case AssertionKind::PublicKeyDelegation: return "public_key_delegation";
    case AssertionKind::CryptoSecurityType: return "crypto_security_type";
    case AssertionKind::PhysicalSecurityLevel: return "physical_security_level";
    case AssertionKind::Owner: return "owner";
    case AssertionKind::OwnerType: return "owner_type";
    case AssertionKind::ReceiverSensitivity: return "receiver_sensitivity";
    case AssertionKind::TransmitPower: return "transmit_power";
    case AssertionKind::ProcessingDelay: return "processing_delay";
  }
  return "unknown";
}

Assertion make_position_assertion(const PositionFunction& f) {
  ByteWriter w;
  w.u8(f.linear ? 1 : 0);
  w.f64(f.p0.x);
  w.f64(f.p0.y);
  w.f64(f.p0.z);
  if (f.linear) {
    w.f64(f.velocity.x);
    w.f64(f.velocity.y);
    w.f64(f.velocity.z);
    w.u64(static_cast<uint64_t>(f.t0.ns));
  }
  return {static_cast<uint8_t>(AssertionKind::PositionFunction), w.take()};
}

Assertion make_direction_assertion(const DirectionSchedule& s) {
  ByteWriter w;
  w.u8(s.spinning ? 1 : 0);
  w.f64(s.az0);
  w.f64(s.elevation);
  if (s.spinning) {
    w.f64(s.spin_rate);
    w.u64(static_cast<uint64_t>(s.t0.ns));
  }
  return {static_cast<uint8_t>(AssertionKind::AntennaDirection), w.take()};
}

Assertion make_delegation_assertion(const crypto::PublicKey& k) {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(k.algo));
  w.var(k.bytes);
  return {static_cast<uint8_t>(AssertionKind::PublicKeyDelegation), w.take()};
}

Assertion make_level_assertion(AssertionKind kind, uint8_t level) {
  return {static_cast<uint8_t>(kind), Bytes{level}};
}

Assertion make_string_assertion(AssertionKind kind, const std::string& s) {
  return {static_cast<uint8_t>(kind), Bytes(s.begin(), s.end())};
}

Assertion make_processing_delay_assertion(int64_t delay_ns) {
  ByteWriter w;
  w.u64(static_cast<uint64_t>(delay_ns));
  return {static_cast<uint8_t>(AssertionKind::ProcessingDelay), w.take()};
}

Bytes Certificate::canonical_prefix() const { return encode_prefix(*this); }

Bytes Certificate::encode() const {
  ByteWriter w;
  Bytes prefix = encode_prefix(*this);
  w.raw(prefix);
  w.u8(static_cast<uint8_t>(signature.algo));
  w.var(signature.bytes);
  return w.take();
}

Expected<Certificate> Certificate::decode(ConstBytes buf) {
  ByteReader r(buf);
  if (r.u8() != static_cast<uint8_t>(wire::MsgType::Cert))
    return Error{Errc::MalformedMessage, "not a certificate"};
  if (r.u8() != wire::kVersion) return Error{Errc::MalformedMessage, "unsupported version"};
  Certificate c;
  c.subject.bytes = r.fixed<8>();
  c.valid_from = SimTime{static_cast<int64_t>(r.u64())};
  c.valid_to = SimTime{static_cast<int64_t>(r.u64())};
  c.certifier.algo = static_cast<crypto::Algo>(r.u8());
  c.certifier.bytes = r.var();
  const uint16_t n = r.u16();
  for (uint16_t i = 0; i < n && !r.failed(); ++i) {
    Assertion a;
    a.kind = r.u8();
    a.value = r.var();
    c.assertions.push_back(std::move(a));
  }
  c.signature.algo = static_cast<crypto::Algo>(r.u8());
  c.signature.bytes = r.var();
  if (r.failed()) return Error{Errc::MalformedMessage, "truncated certificate"};
  if (r.remaining() != 0) return Error{Errc::MalformedMessage, "trailing bytes"};
  if (c.valid_from > c.valid_to)
    return Error{Errc::MalformedMessage, "validity window reversed"};
  return c;
}

crypto::Digest Certificate::digest() const {
  return crypto::backend(certifier.algo).hash(encode());
}

std::optional<PositionFunction> Certificate::position_function() const {
  for (const Assertion& a : assertions) {
    if (a.kind != static_cast<uint8_t>(AssertionKind::PositionFunction)) continue;
    ByteReader r(a.value);
    PositionFunction f;
    f.linear = r.u8() != 0;
    f.p0.x = r.f64();
    f.p0.y = r.f64();
    f.p0.z = r.f64();
    if (f.linear) {
      f.velocity.x = r.f64();
      f.velocity.y = r.f64();
      f.velocity.z = r.f64();
      f.t0 = SimTime{static_cast<int64_t>(r.u64())};
    }
    if (r.failed() || r.remaining() != 0) return std::nullopt;
    return f;
  }
  return std::nullopt;
}

std::optional<DirectionSchedule> Certificate::direction_schedule() const {
  for (const Assertion& a : assertions) {
    if (a.kind != static_cast<uint8_t>(AssertionKind::AntennaDirection)) continue;
    ByteReader r(a.value);
    DirectionSchedule s;
    s.spinning = r.u8() != 0;
    s.az0 = r.f64();
    s.elevation = r.f64();
    if (s.spinning) {
      s.spin_rate = r.f64();
      s.t0 = SimTime{static_cast<int64_t>(r.u64())};
    }
    if (r.failed() || r.remaining() != 0) return std::nullopt;
    return s;
  }
  return std::nullopt;
}

std::optional<crypto::PublicKey> Certificate::delegated_key() const {
  for (const Assertion& a : assertions) {
    if (a.kind != static_cast<uint8_t>(AssertionKind::PublicKeyDelegation)) continue;
    ByteReader r(a.value);
    crypto::PublicKey k;
    k.algo = static_cast<crypto::Algo>(r.u8());
    k.bytes = r.var();
    if (r.failed() || r.remaining() != 0) return std::nullopt;
    return k;
  }
  return std::nullopt;
}

std::optional<uint8_t> Certificate::level(AssertionKind kind) const {
  for (const Assertion& a : assertions) {
    if (a.kind == static_cast<uint8_t>(kind) && a.value.size() == 1) return a.value[0];
  }
  return std::nullopt;
}

std::optional<int64_t> Certificate::processing_delay_ns() const {
  for (const Assertion& a : assertions) {
    if (a.kind != static_cast<uint8_t>(AssertionKind::ProcessingDelay)) continue;
    if (a.value.size() != 8) return std::nullopt;
    ByteReader r(a.value);
    return static_cast<int64_t>(r.u64());
  }
  return std::nullopt;
}

Certificate issue(const crypto::PrivateKey& certifier_priv, NodeId subject,
                  std::vector<Assertion> assertions, SimTime valid_from, SimTime valid_to) {
  const crypto::Backend& b = crypto::backend(certifier_priv.algo);
  Certificate c;
  c.assertions = std::move(assertions);
  c.valid_from = valid_from;
  c.valid_to = valid_to;
  c.subject = subject;
  c.certifier = b.derive_public(certifier_priv);
  const crypto::Digest h = b.hash(c.canonical_prefix());
  c.signature = b.sign(certifier_priv, h.bytes);
  return c;
}

Expected<void> verify(const Certificate& c, SimTime now, const TrustPolicy& policy) {
  if (policy.revoked.count(c.digest()) > 0) return Error{Errc::Revoked, "certificate revoked"};
  return verify(c, now);
}

Expected<void> verify(const Certificate& c, SimTime now) {
  const crypto::Backend& b = crypto::backend(c.certifier.algo);
  const crypto::Digest h = b.hash(c.canonical_prefix());
  if (!b.verify(c.certifier, h.bytes, c.signature))
    return Error{Errc::BadSignature, "certificate signature invalid"};
  if (now < c.valid_from || now > c.valid_to)
    return Error{Errc::Expired, "outside validity window"};
  return {};
}

Expected<void> meets_policy(const Certificate& c, AssertionKind consumed_kind,
                            const TrustPolicy& policy) {
  if (auto it = policy.min_crypto_security.find(consumed_kind);
      it != policy.min_crypto_security.end()) {
    const uint8_t have = c.level(AssertionKind::CryptoSecurityType).value_or(0);
    if (have < it->second)
      return Error{Errc::NoTrustPath, "crypto security level below policy minimum"};
  }
  if (auto it = policy.min_physical_security.find(consumed_kind);
      it != policy.min_physical_security.end()) {
    const uint8_t have = c.level(AssertionKind::PhysicalSecurityLevel).value_or(0);
    if (have < it->second)
      return Error{Errc::NoTrustPath, "physical security level below policy minimum"};
  }
  return {};
}

Expected<crypto::PublicKey> resolve_key(const NodeId& id, std::span<const Certificate> chain,
                                        const TrustPolicy& policy, SimTime now) {
  if (chain.empty()) return Error{Errc::NoTrustPath, "empty chain"};

  std::string first_failure;
  auto note = [&first_failure](const std::string& why) {
    if (first_failure.empty()) first_failure = why;
  };

  // Depth-first over delegation links. Link k+1 must be signed by the key
  // delegated in link k; the walk starts from certs signed by a root key.
  struct Frame {
    crypto::PublicKey signer;
    int depth;
  };
  std::vector<Frame> stack;
  for (const crypto::PublicKey& root : policy.roots) stack.push_back({root, 0});

  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth >= policy.max_depth) {
      note("chain depth limit reached");
      continue;
    }
    for (const Certificate& c : chain) {
      if (!(c.certifier == f.signer)) continue;
      if (auto v = verify(c, now, policy); !v.ok()) {
        note(std::string(errc_name(v.code())) + " at " + c.subject.to_string());
        continue;
      }
      if (auto p = meets_policy(c, AssertionKind::PublicKeyDelegation, policy); !p.ok()) {
        note(p.error().detail + " at " + c.subject.to_string());
        continue;
      }
      auto key = c.delegated_key();
      if (!key) {
        note("no delegated key at " + c.subject.to_string());
        continue;
      }
      if (c.subject == id) return *key;
      stack.push_back({*key, f.depth + 1});
    }
  }
  return Error{Errc::NoTrustPath,
               first_failure.empty() ? "no delegation path to subject" : first_failure};
}

Expected<Position> navaid_position_at(const Certificate& c, SimTime t) {
  auto f = c.position_function();
  if (!f) return Error{Errc::NoPositionAssertion, "certificate has no position assertion"};
  return f->at(t);
}

}  // namespace navsec::certs
