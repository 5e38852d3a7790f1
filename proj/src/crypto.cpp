#include "navsec/crypto.hpp"

#include "crypto_backends.hpp"

namespace navsec::crypto {

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::Real: return "real";
    case Algo::Test: return "test";
  }
  return "unknown";
}

const Backend& backend(Algo a) {
  switch (a) {
    case Algo::Real: return detail::real_backend();
    case Algo::Test: return detail::test_backend();
  }
  return detail::test_backend();
}

Expected<const Backend*> backend_checked(uint8_t wire_tag) {
  switch (wire_tag) {
    case static_cast<uint8_t>(Algo::Real): return &detail::real_backend();
    case static_cast<uint8_t>(Algo::Test): return &detail::test_backend();
    default: return Error{Errc::MalformedMessage, "unknown algorithm tag"};
  }
}

std::array<uint8_t, 8> key_id_of(const PublicKey& k) {
  const Digest d = backend(k.algo).hash(k.bytes);
  std::array<uint8_t, 8> id{};
  std::copy(d.bytes.begin(), d.bytes.begin() + 8, id.begin());
  return id;
}

}  // namespace navsec::crypto
