#pragma once

// Byte-exact wire codec for every protocol packet. Layouts are fixed-width
// big-endian with 2-byte length prefixes on variable fields, so signature
// coverage is reproducible down to the bit.

#include <array>
#include <cstdint>
#include <variant>

#include "navsec/bytes.hpp"
#include "navsec/types.hpp"

namespace navsec::wire {

inline constexpr uint8_t kVersion = 1;

enum class MsgType : uint8_t {
  Beacon = 0x01,       // protocols 1 and 2
  Commit = 0x02,       // protocol 3, packet 1
  Reveal = 0x03,       // protocol 3, packet 2
  Interrogate = 0x04,  // protocols 4 and 5
  Respond = 0x05,
  Auth = 0x06,         // protocol 5 post-authentication
  RangeReport = 0x07,  // daisy-chain combiner
  Cert = 0x08,
  KeyExchange = 0x09,  // symmetric key provisioning for protocol 4
  SymEnvelope = 0x10,
  PkEnvelope = 0x11,
};

using Nonce32 = std::array<uint8_t, 32>;
using Nonce12 = std::array<uint8_t, 12>;
using KeyId = std::array<uint8_t, 8>;

struct Beacon {
  Position p;
  Direction d;
  SimTime t;
  NodeId i;
  Bytes sig;
  bool operator==(const Beacon&) const = default;
};

struct Commit {
  std::array<uint8_t, 32> commitment{};  // H(r, t2)
  SimTime t1;
  NodeId i;
  Bytes sig;
  bool operator==(const Commit&) const = default;
};

struct Reveal {
  Nonce32 r{};
  SimTime t2;
  NodeId i;
  bool operator==(const Reveal&) const = default;
};

struct Interrogate {
  Nonce32 r_c{};
  SimTime t;
  bool operator==(const Interrogate&) const = default;
};

struct Respond {
  Nonce32 r_c{};
  Nonce32 r_n{};
  bool operator==(const Respond&) const = default;
};

struct Auth {
  Position p;
  Direction d;
  SimTime t;  // interrogation timestamp, echoed
  NodeId i;
  Nonce32 r_c{};
  Nonce32 r_n{};
  Bytes sig;
  bool operator==(const Auth&) const = default;
};

struct RangeReport {
  double range_m = 0;
  SimTime t;
  NodeId i;
  Bytes sig;
  bool operator==(const RangeReport&) const = default;
};

// Certificates have their own canonical encoding (certs module); on the wire
// the codec validates the framing and carries the bytes through unchanged so
// signatures stay intact.
struct CertMsg {
  Bytes encoded;  // full message bytes including type and version
  bool operator==(const CertMsg&) const = default;
};

struct KeyExchange {
  NodeId client;
  SimTime t;
  KeyId key_id{};
  std::array<uint8_t, 32> key{};
  Bytes sig;
  bool operator==(const KeyExchange&) const = default;
};

struct SymEnvelope {
  uint8_t algo = 0;
  KeyId key_id{};
  Nonce12 nonce{};
  Bytes ct;
  bool operator==(const SymEnvelope&) const = default;
};

struct PkEnvelope {
  uint8_t algo = 0;
  KeyId recipient{};
  Bytes ct;
  bool operator==(const PkEnvelope&) const = default;
};

using Message = std::variant<Beacon, Commit, Reveal, Interrogate, Respond, Auth,
                             RangeReport, CertMsg, KeyExchange, SymEnvelope, PkEnvelope>;

MsgType type_of(const Message& m);
const char* type_name(MsgType t);

Bytes encode(const Message& m);
Expected<Message> decode(ConstBytes buf);

// The bytes covered by a message's embedded signature: the encoded header and
// every field preceding the signature. Only meaningful for signed types.
Bytes signed_prefix(const Message& m);

}  // namespace navsec::wire
