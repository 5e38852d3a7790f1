#pragma once

// Cryptographic primitive families behind one abstraction boundary: hashing,
// public-key signatures, integrity-preserving symmetric and public-key
// encryption. Two interchangeable backends implement the same laws:
//
//   Algo::Real (0x01)  libsodium: SHA-256, Ed25519, ChaCha20-Poly1305,
//                      X25519 sealed boxes. All entropy is caller-supplied,
//                      so runs are reproducible.
//   Algo::Test (0x7F)  hand-rolled toy algorithms with zero security margin,
//                      tiny keys and deterministic everything. Simulation use
//                      only; forgery resistance is enforced structurally by
//                      the simulator (attackers hold no key handles).
//
// Nothing outside this module touches backend internals; an architecture
// test enforces that.

#include <array>
#include <cstdint>
#include <memory>

#include "navsec/bytes.hpp"
#include "navsec/types.hpp"

namespace navsec::crypto {

enum class Algo : uint8_t {
  Real = 0x01,
  Test = 0x7F,
};

const char* algo_name(Algo a);

struct Digest {
  std::array<uint8_t, 32> bytes{};
  auto operator<=>(const Digest&) const = default;
};

struct PublicKey {
  Algo algo = Algo::Test;
  Bytes bytes;
  bool operator==(const PublicKey&) const = default;
};

struct PrivateKey {
  Algo algo = Algo::Test;
  Bytes bytes;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct SymmetricKey {
  Algo algo = Algo::Test;
  std::array<uint8_t, 8> id{};  // unique per scenario
  std::array<uint8_t, 32> bytes{};
};

struct Signature {
  Algo algo = Algo::Test;
  Bytes bytes;
  bool operator==(const Signature&) const = default;
};

struct SymCiphertext {
  Algo algo = Algo::Test;
  std::array<uint8_t, 12> nonce{};
  Bytes bytes;  // ciphertext with trailing authentication tag
};

using Seed32 = std::array<uint8_t, 32>;
using Nonce12 = std::array<uint8_t, 12>;

class Backend {
 public:
  virtual ~Backend() = default;

  virtual Algo algo() const = 0;
  virtual Digest hash(ConstBytes data) const = 0;

  // Key derivation from seed is deterministic; M: Priv -> Pub likewise.
  virtual KeyPair keypair(const Seed32& seed) const = 0;
  virtual PublicKey derive_public(const PrivateKey& priv) const = 0;

  virtual Signature sign(const PrivateKey& k, ConstBytes msg) const = 0;
  virtual bool verify(const PublicKey& k, ConstBytes msg, const Signature& sig) const = 0;

  virtual SymCiphertext sym_encrypt(const SymmetricKey& k, const Nonce12& nonce,
                                    ConstBytes plaintext) const = 0;
  // Fails with IntegrityFailure on any tamper; a wrong key is
  // indistinguishable from a tampered ciphertext.
  virtual Expected<Bytes> sym_decrypt(const SymmetricKey& k, const SymCiphertext& ct) const = 0;

  // Public-key encryption takes explicit entropy for the ephemeral key so
  // identical (scenario, seed) runs produce identical bytes.
  virtual Bytes pk_encrypt(const PublicKey& k, const Seed32& entropy,
                           ConstBytes plaintext) const = 0;
  virtual Expected<Bytes> pk_decrypt(const PrivateKey& k, ConstBytes ct) const = 0;
};

const Backend& backend(Algo a);
Expected<const Backend*> backend_checked(uint8_t wire_tag);

// First 8 bytes of the backend's own hash of the key bytes; used to route
// envelopes without trying every key.
std::array<uint8_t, 8> key_id_of(const PublicKey& k);

}  // namespace navsec::crypto
