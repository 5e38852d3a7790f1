#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "navsec/certs.hpp"
#include "navsec/wire.hpp"

using namespace navsec;
using namespace navsec::testing;
using namespace navsec::certs;
using crypto::Algo;

namespace {

struct Fixture {
  const crypto::Backend& b = crypto::backend(Algo::Test);
  crypto::KeyPair root = b.keypair(seed_from(1));
  crypto::KeyPair navaid = b.keypair(seed_from(2));
  NodeId navaid_id = node_id("N1");

  Certificate navaid_cert(SimTime from = SimTime{0}, SimTime to = SimTime{1 * kSecondNs},
                          std::vector<Assertion> extra = {}) const {
    std::vector<Assertion> as = {make_delegation_assertion(navaid.pub)};
    for (auto& a : extra) as.push_back(std::move(a));
    return issue(root.priv, navaid_id, std::move(as), from, to);
  }
};

}  // namespace

TEST_CASE("freshly issued cert verifies inside its window") {
  Fixture f;
  const Certificate c = f.navaid_cert();
  CHECK(verify(c, SimTime{500}).ok());
  CHECK(verify(c, c.valid_from).ok());
  CHECK(verify(c, c.valid_to).ok());
}

TEST_CASE("expiry boundary: valid_to + 1 is Expired") {
  Fixture f;
  const Certificate c = f.navaid_cert();
  CHECK(verify(c, c.valid_to + 1).code() == Errc::Expired);
  CHECK(verify(c, c.valid_from - 1).code() == Errc::Expired);
}

TEST_CASE("any flipped byte is BadSignature") {
  Fixture f;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Certificate c = f.navaid_cert();
    Bytes enc = c.encode();
    // mutate within the signed prefix (everything before the signature)
    const size_t prefix_len = c.canonical_prefix().size();
    enc[rng() % prefix_len] ^= static_cast<uint8_t>(1 + rng() % 255);
    auto back = Certificate::decode(enc);
    if (!back.ok()) continue;  // framing damage is an acceptable outcome
    CHECK(verify(*back, SimTime{500}).code() == Errc::BadSignature);
  }
}

TEST_CASE("revocation dominates") {
  Fixture f;
  const Certificate c = f.navaid_cert();
  TrustPolicy policy;
  policy.roots = {f.root.pub};
  CHECK(verify(c, SimTime{500}, policy).ok());
  policy.revoked.insert(c.digest());
  CHECK(verify(c, SimTime{500}, policy).code() == Errc::Revoked);
  // removing the revocation restores the verdict (monotonicity)
  policy.revoked.clear();
  CHECK(verify(c, SimTime{500}, policy).ok());
}

TEST_CASE("canonical encoding is byte-stable") {
  Fixture f;
  const Certificate c1 = f.navaid_cert();
  const Certificate c2 = f.navaid_cert();
  CHECK(c1.encode() == c2.encode());  // deterministic issue
  auto decoded = Certificate::decode(c1.encode());
  REQUIRE(decoded.ok());
  CHECK(decoded->encode() == c1.encode());  // re-encode identical
}

TEST_CASE("unknown assertion kinds are preserved opaquely") {
  Fixture f;
  Certificate c = f.navaid_cert(SimTime{0}, SimTime{1000},
                                {Assertion{0x77, Bytes{1, 2, 3}}});
  auto back = Certificate::decode(c.encode());
  REQUIRE(back.ok());
  CHECK(back->encode() == c.encode());
  CHECK(verify(*back, SimTime{500}).ok());
}

TEST_CASE("resolve_key: depth-1 chain") {
  Fixture f;
  const Certificate c = f.navaid_cert();
  TrustPolicy policy;
  policy.roots = {f.root.pub};
  auto key = resolve_key(f.navaid_id, std::vector<Certificate>{c}, policy, SimTime{500});
  REQUIRE(key.ok());
  CHECK(key->bytes == f.navaid.pub.bytes);
}

TEST_CASE("resolve_key: depth-3 chain, middle link revoked") {
  Fixture f;
  const crypto::KeyPair mid1 = f.b.keypair(seed_from(10));
  const crypto::KeyPair mid2 = f.b.keypair(seed_from(11));
  const NodeId id1 = node_id("CA1"), id2 = node_id("CA2");

  const Certificate link1 = issue(f.root.priv, id1, {make_delegation_assertion(mid1.pub)},
                                  SimTime{0}, SimTime{1000});
  const Certificate link2 = issue(mid1.priv, id2, {make_delegation_assertion(mid2.pub)},
                                  SimTime{0}, SimTime{1000});
  const Certificate leaf = issue(mid2.priv, f.navaid_id,
                                 {make_delegation_assertion(f.navaid.pub)}, SimTime{0},
                                 SimTime{1000});

  const std::vector<Certificate> chain = {leaf, link2, link1};  // order must not matter
  TrustPolicy policy;
  policy.roots = {f.root.pub};

  auto ok = resolve_key(f.navaid_id, chain, policy, SimTime{500});
  REQUIRE(ok.ok());
  CHECK(ok->bytes == f.navaid.pub.bytes);

  policy.revoked.insert(link2.digest());
  CHECK(resolve_key(f.navaid_id, chain, policy, SimTime{500}).code() == Errc::NoTrustPath);
}

TEST_CASE("resolve_key: expired link breaks the path") {
  Fixture f;
  const Certificate c = f.navaid_cert(SimTime{0}, SimTime{100});
  TrustPolicy policy;
  policy.roots = {f.root.pub};
  CHECK(resolve_key(f.navaid_id, std::vector<Certificate>{c}, policy, SimTime{101}).code() ==
        Errc::NoTrustPath);
}

TEST_CASE("resolve_key: security level below policy minimum") {
  Fixture f;
  const Certificate weak = f.navaid_cert(
      SimTime{0}, SimTime{1000},
      {make_level_assertion(AssertionKind::CryptoSecurityType, 0)});
  TrustPolicy policy;
  policy.roots = {f.root.pub};
  policy.min_crypto_security[AssertionKind::PublicKeyDelegation] = 2;  // tamper-resistant
  CHECK(resolve_key(f.navaid_id, std::vector<Certificate>{weak}, policy, SimTime{500}).code() ==
        Errc::NoTrustPath);

  const Certificate strong = f.navaid_cert(
      SimTime{0}, SimTime{1000},
      {make_level_assertion(AssertionKind::CryptoSecurityType, 2)});
  CHECK(resolve_key(f.navaid_id, std::vector<Certificate>{strong}, policy, SimTime{500}).ok());
}

TEST_CASE("resolve_key: depth cap") {
  Fixture f;
  TrustPolicy policy;
  policy.roots = {f.root.pub};
  policy.max_depth = 2;

  // root -> a -> b -> navaid needs depth 3
  const crypto::KeyPair a = f.b.keypair(seed_from(30));
  const crypto::KeyPair b2 = f.b.keypair(seed_from(31));
  const std::vector<Certificate> chain = {
      issue(f.root.priv, node_id("A"), {make_delegation_assertion(a.pub)}, SimTime{0},
            SimTime{1000}),
      issue(a.priv, node_id("B"), {make_delegation_assertion(b2.pub)}, SimTime{0},
            SimTime{1000}),
      issue(b2.priv, f.navaid_id, {make_delegation_assertion(f.navaid.pub)}, SimTime{0},
            SimTime{1000}),
  };
  CHECK(resolve_key(f.navaid_id, chain, policy, SimTime{500}).code() == Errc::NoTrustPath);
  policy.max_depth = 8;
  CHECK(resolve_key(f.navaid_id, chain, policy, SimTime{500}).ok());
}

TEST_CASE("navaid position function evaluation") {
  Fixture f;
  // constant
  PositionFunction constant;
  constant.p0 = {100, 200, 300};
  const Certificate c1 = f.navaid_cert(SimTime{0}, SimTime{1000},
                                       {make_position_assertion(constant)});
  auto p1 = navaid_position_at(c1, SimTime{999});
  REQUIRE(p1.ok());
  CHECK(*p1 == Position{100, 200, 300});

  // linear: p0 + v*(t - t0), v = (1,0,0) m/s at t = 10 s
  PositionFunction linear;
  linear.p0 = {100, 200, 300};
  linear.velocity = {1, 0, 0};
  linear.t0 = SimTime{0};
  linear.linear = true;
  const Certificate c2 = f.navaid_cert(SimTime{0}, SimTime{100 * kSecondNs},
                                       {make_position_assertion(linear)});
  auto p2 = navaid_position_at(c2, SimTime{10 * kSecondNs});
  REQUIRE(p2.ok());
  CHECK(p2->x == doctest::Approx(110.0));
  CHECK(p2->y == doctest::Approx(200.0));

  // no position assertion
  const Certificate c3 = f.navaid_cert();
  CHECK(navaid_position_at(c3, SimTime{1}).code() == Errc::NoPositionAssertion);
}

TEST_CASE("direction schedule evaluation") {
  DirectionSchedule spin;
  spin.az0 = 0;
  spin.spin_rate = M_PI;  // half turn per second
  spin.t0 = SimTime{0};
  spin.spinning = true;
  CHECK(spin.at(SimTime{kSecondNs}).azimuth == doctest::Approx(M_PI));
  CHECK(spin.at(SimTime{3 * kSecondNs}).azimuth == doctest::Approx(M_PI));  // wrapped
}

TEST_CASE("processing delay assertion round trip") {
  Fixture f;
  const Certificate c = f.navaid_cert(SimTime{0}, SimTime{1000},
                                      {make_processing_delay_assertion(1500)});
  auto back = Certificate::decode(c.encode());
  REQUIRE(back.ok());
  CHECK(back->processing_delay_ns() == 1500);
}

TEST_CASE("certs verify under the real backend too") {
  const auto& rb = crypto::backend(Algo::Real);
  const crypto::KeyPair root = rb.keypair(seed_from(40));
  const crypto::KeyPair leaf = rb.keypair(seed_from(41));
  const Certificate c = issue(root.priv, node_id("N9"), {make_delegation_assertion(leaf.pub)},
                              SimTime{0}, SimTime{1000});
  CHECK(verify(c, SimTime{1}).ok());
  TrustPolicy policy;
  policy.roots = {root.pub};
  auto key = resolve_key(node_id("N9"), std::vector<Certificate>{c}, policy, SimTime{1});
  REQUIRE(key.ok());
  CHECK(key->bytes == leaf.pub.bytes);
}

TEST_CASE("certificates ride the wire codec intact") {
  Fixture f;
  const Certificate c = f.navaid_cert();
  const Bytes enc = c.encode();
  auto msg = wire::decode(enc);
  REQUIRE(msg.ok());
  const auto* cm = std::get_if<wire::CertMsg>(&*msg);
  REQUIRE(cm != nullptr);
  CHECK(cm->encoded == enc);
  CHECK(wire::encode(*msg) == enc);

  // truncation breaks the framing
  Bytes trunc(enc.begin(), enc.end() - 1);
  CHECK(wire::decode(trunc).code() == Errc::MalformedMessage);
  Bytes padded = enc;
  padded.push_back(0);
  CHECK(wire::decode(padded).code() == Errc::MalformedMessage);
}
