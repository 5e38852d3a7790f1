#pragma once

// Shared test utilities: seeded generators for wire messages and geometry.

#include <random>

#include "navsec/crypto.hpp"
#include "navsec/types.hpp"
#include "navsec/wire.hpp"

namespace navsec::testing {

using Rng = std::mt19937_64;

inline double finite_double(Rng& rng, double lo = -1e6, double hi = 1e6) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Bytes random_bytes(Rng& rng, size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

template <size_t N>
std::array<uint8_t, N> random_array(Rng& rng) {
  std::array<uint8_t, N> out;
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

inline crypto::Seed32 seed_from(uint64_t n) {
  crypto::Seed32 s{};
  for (int i = 0; i < 8; ++i) s[i] = static_cast<uint8_t>(n >> (8 * i));
  return s;
}

inline NodeId node_id(const std::string& label) { return *NodeId::from_label(label); }

inline Position random_position(Rng& rng, double scale = 1e5) {
  return {finite_double(rng, -scale, scale), finite_double(rng, -scale, scale),
          finite_double(rng, -scale, scale)};
}

inline Direction random_direction(Rng& rng) {
  return Direction::normalized(finite_double(rng, 0, 6.28), finite_double(rng, -1.5, 1.5));
}

inline SimTime random_time(Rng& rng) {
  return SimTime{static_cast<int64_t>(rng() % (1ULL << 40))};
}

inline NodeId random_id(Rng& rng) {
  NodeId id;
  id.bytes = random_array<8>(rng);
  return id;
}

// A random structurally-valid message of the given type.
inline wire::Message random_message(Rng& rng, wire::MsgType type) {
  using namespace wire;
  switch (type) {
    case MsgType::Beacon: {
      Beacon m;
      m.p = random_position(rng);
      m.d = random_direction(rng);
      m.t = random_time(rng);
      m.i = random_id(rng);
      m.sig = random_bytes(rng, 32 + rng() % 64);
      return m;
    }
    case MsgType::Commit: {
      Commit m;
      m.commitment = random_array<32>(rng);
      m.t1 = random_time(rng);
      m.i = random_id(rng);
      m.sig = random_bytes(rng, 32 + rng() % 64);
      return m;
    }
    case MsgType::Reveal: {
      Reveal m;
      m.r = random_array<32>(rng);
      m.t2 = random_time(rng);
      m.i = random_id(rng);
      return m;
    }
    case MsgType::Interrogate: {
      Interrogate m;
      m.r_c = random_array<32>(rng);
      m.t = random_time(rng);
      return m;
    }
    case MsgType::Respond: {
      Respond m;
      m.r_c = random_array<32>(rng);
      m.r_n = random_array<32>(rng);
      return m;
    }
    case MsgType::Auth: {
      Auth m;
      m.p = random_position(rng);
      m.d = random_direction(rng);
      m.t = random_time(rng);
      m.i = random_id(rng);
      m.r_c = random_array<32>(rng);
      m.r_n = random_array<32>(rng);
      m.sig = random_bytes(rng, 32 + rng() % 64);
      return m;
    }
    case MsgType::RangeReport: {
      RangeReport m;
      m.range_m = finite_double(rng, 0, 1e7);
      m.t = random_time(rng);
      m.i = random_id(rng);
      m.sig = random_bytes(rng, 32 + rng() % 64);
      return m;
    }
    case MsgType::KeyExchange: {
      KeyExchange m;
      m.client = random_id(rng);
      m.t = random_time(rng);
      m.key_id = random_array<8>(rng);
      m.key = random_array<32>(rng);
      m.sig = random_bytes(rng, 32 + rng() % 64);
      return m;
    }
    case MsgType::SymEnvelope: {
      SymEnvelope m;
      m.algo = rng() % 2 == 0 ? 0x01 : 0x7F;
      m.key_id = random_array<8>(rng);
      m.nonce = random_array<12>(rng);
      m.ct = random_bytes(rng, 16 + rng() % 100);
      return m;
    }
    case MsgType::PkEnvelope: {
      PkEnvelope m;
      m.algo = rng() % 2 == 0 ? 0x01 : 0x7F;
      m.recipient = random_array<8>(rng);
      m.ct = random_bytes(rng, 28 + rng() % 100);
      return m;
    }
    case MsgType::Cert:
      break;  // certificates are generated by the certs tests
  }
  return wire::Respond{};
}

inline const std::vector<wire::MsgType>& fuzzable_types() {
  static const std::vector<wire::MsgType> types = {
      wire::MsgType::Beacon,      wire::MsgType::Commit,      wire::MsgType::Reveal,
      wire::MsgType::Interrogate, wire::MsgType::Respond,     wire::MsgType::Auth,
      wire::MsgType::RangeReport, wire::MsgType::KeyExchange, wire::MsgType::SymEnvelope,
      wire::MsgType::PkEnvelope};
  return types;
}

}  // namespace navsec::testing
