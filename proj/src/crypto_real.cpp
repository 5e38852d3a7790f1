// Real backend: SHA-256, Ed25519 signatures, ChaCha20-Poly1305 AEAD and
// X25519 sealed boxes via libsodium. Sealed boxes are built by hand from a
// caller-seeded ephemeral key so that encryption is deterministic; the output
// layout matches crypto_box_seal and is opened with crypto_box_seal_open.

#include <sodium.h>

#include <mutex>

#include "crypto_backends.hpp"

namespace navsec::crypto::detail {

namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  });
}

Error integrity_failure() { return Error{Errc::IntegrityFailure, "decrypt failed"}; }

class RealBackend final : public Backend {
 public:
  RealBackend() { ensure_sodium(); }

  Algo algo() const override { return Algo::Real; }

  Digest hash(ConstBytes data) const override {
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
  }

  KeyPair keypair(const Seed32& seed) const override {
    KeyPair kp;
    kp.pub.algo = Algo::Real;
    kp.priv.algo = Algo::Real;
    kp.pub.bytes.resize(crypto_sign_PUBLICKEYBYTES);
    kp.priv.bytes.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.pub.bytes.data(), kp.priv.bytes.data(), seed.data());
    return kp;
  }

  PublicKey derive_public(const PrivateKey& priv) const override {
    PublicKey pub;
    pub.algo = Algo::Real;
    pub.bytes.resize(crypto_sign_PUBLICKEYBYTES);
    crypto_sign_ed25519_sk_to_pk(pub.bytes.data(), priv.bytes.data());
    return pub;
  }

  Signature sign(const PrivateKey& k, ConstBytes msg) const override {
    Signature sig;
    sig.algo = Algo::Real;
    sig.bytes.resize(crypto_sign_BYTES);
    crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), k.bytes.data());
    return sig;
  }

  bool verify(const PublicKey& k, ConstBytes msg, const Signature& sig) const override {
    if (sig.algo != Algo::Real || k.algo != Algo::Real) return false;
    if (sig.bytes.size() != crypto_sign_BYTES || k.bytes.size() != crypto_sign_PUBLICKEYBYTES)
      return false;
    return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(),
                                       k.bytes.data()) == 0;
  }

  SymCiphertext sym_encrypt(const SymmetricKey& k, const Nonce12& nonce,
                            ConstBytes plaintext) const override {
    SymCiphertext out;
    out.algo = Algo::Real;
    out.nonce = nonce;
    out.bytes.resize(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long clen = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(out.bytes.data(), &clen, plaintext.data(),
                                              plaintext.size(), nullptr, 0, nullptr,
                                              nonce.data(), k.bytes.data());
    out.bytes.resize(clen);
    return out;
  }

  Expected<Bytes> sym_decrypt(const SymmetricKey& k, const SymCiphertext& ct) const override {
    if (ct.algo != Algo::Real) return integrity_failure();
    if (ct.bytes.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) return integrity_failure();
    Bytes out(ct.bytes.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long mlen = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &mlen, nullptr, ct.bytes.data(),
                                                  ct.bytes.size(), nullptr, 0, ct.nonce.data(),
                                                  k.bytes.data()) != 0)
      return integrity_failure();
    out.resize(mlen);
    return out;
  }

  Bytes pk_encrypt(const PublicKey& k, const Seed32& entropy,
                   ConstBytes plaintext) const override {
    // Recipient signing key -> curve25519.
    unsigned char curve_pk[crypto_box_PUBLICKEYBYTES];
    if (k.bytes.size() != crypto_sign_PUBLICKEYBYTES ||
        crypto_sign_ed25519_pk_to_curve25519(curve_pk, k.bytes.data()) != 0)
      return {};

    unsigned char epk[crypto_box_PUBLICKEYBYTES];
    unsigned char esk[crypto_box_SECRETKEYBYTES];
    crypto_box_seed_keypair(epk, esk, entropy.data());

    // Sealed-box nonce convention: blake2b(ephemeral_pk || recipient_pk).
    unsigned char nonce[crypto_box_NONCEBYTES];
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, sizeof nonce);
    crypto_generichash_update(&st, epk, sizeof epk);
    crypto_generichash_update(&st, curve_pk, sizeof curve_pk);
    crypto_generichash_final(&st, nonce, sizeof nonce);

    Bytes out(crypto_box_PUBLICKEYBYTES + plaintext.size() + crypto_box_MACBYTES);
    std::copy(epk, epk + sizeof epk, out.begin());
    crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES, plaintext.data(), plaintext.size(),
                    nonce, curve_pk, esk);
    return out;
  }

  Expected<Bytes> pk_decrypt(const PrivateKey& k, ConstBytes ct) const override {
    if (k.bytes.size() != crypto_sign_SECRETKEYBYTES) return integrity_failure();
    if (ct.size() < crypto_box_SEALBYTES) return integrity_failure();
    unsigned char curve_sk[crypto_box_SECRETKEYBYTES];
    if (crypto_sign_ed25519_sk_to_curve25519(curve_sk, k.bytes.data()) != 0)
      return integrity_failure();
    unsigned char curve_pk[crypto_box_PUBLICKEYBYTES];
    crypto_scalarmult_base(curve_pk, curve_sk);

    Bytes out(ct.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(out.data(), ct.data(), ct.size(), curve_pk, curve_sk) != 0)
      return integrity_failure();
    return out;
  }
};

}  // namespace

const Backend& real_backend() {
  static RealBackend instance;
  return instance;
}

}  // namespace navsec::crypto::detail
