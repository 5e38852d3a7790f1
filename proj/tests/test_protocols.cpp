#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "navsec/protocols.hpp"

using namespace navsec;
using namespace navsec::testing;
using namespace navsec::proto;
using crypto::Algo;

namespace {

struct World {
  const crypto::Backend& b = crypto::backend(Algo::Test);
  crypto::KeyPair navaid_keys = b.keypair(seed_from(1));
  crypto::KeyPair navaid2_keys = b.keypair(seed_from(2));
  crypto::KeyPair client_keys = b.keypair(seed_from(3));
  NodeId navaid_id = node_id("N1");
  NodeId navaid2_id = node_id("N2");
  Config cfg;
  OpCounters ops;
};

crypto::SymmetricKey test_key(uint64_t seed) {
  crypto::SymmetricKey k;
  k.algo = Algo::Test;
  k.bytes = seed_from(seed);
  k.id = {0, 0, 0, 0, 0, 0, 0, static_cast<uint8_t>(seed)};
  return k;
}

// Brute-force minimizer of RMS point-to-ray distance, used as the oracle for
// the bearing fix.
Position grid_min_ray_distance(const std::vector<proto::BeaconObservation>& obs,
                               Position center, double halfwidth) {
  auto cost = [&](const Position& x) {
    double sum = 0;
    for (const auto& o : obs) {
      const Position u = o.d.unit_vector();
      const Position w = x - o.p;
      const double along = w.x * u.x + w.y * u.y + w.z * u.z;
      const Position perp = w - u * along;
      sum += perp.x * perp.x + perp.y * perp.y + perp.z * perp.z;
    }
    return sum;
  };
  Position best = center;
  double best_cost = cost(best);
  double h = halfwidth;
  for (int level = 0; level < 40; ++level) {
    const Position saved = best;
    for (int ix = 0; ix < 9; ++ix)
      for (int iy = 0; iy < 9; ++iy)
        for (int iz = 0; iz < 9; ++iz) {
          const Position p{saved.x - h + 2 * h * ix / 8.0, saved.y - h + 2 * h * iy / 8.0,
                           saved.z - h + 2 * h * iz / 8.0};
          const double c = cost(p);
          if (c < best_cost) {
            best_cost = c;
            best = p;
          }
        }
    h *= 0.4;
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Protocol 1

TEST_CASE("p1: emitted beacon verifies and carries the schedule direction") {
  World w;
  const Direction d = Direction::normalized(1.25, 0.1);
  const wire::Beacon b1 =
      p1_emit(w.navaid_id, {0, 0, 0}, d, SimTime{1000}, w.navaid_keys.priv, w.ops);

  auto obs = p1_accept(b1, w.navaid_keys.pub, SimTime{1000}, w.cfg, w.ops);
  REQUIRE(obs.ok());
  CHECK(obs->d == d);
  CHECK(obs->navaid == w.navaid_id);

  // Two emissions 5 ms apart: distinct signatures, timestamps 5 ms apart.
  const wire::Beacon b2 = p1_emit(w.navaid_id, {0, 0, 0}, d, SimTime{1000 + 5 * kMillisecondNs},
                                  w.navaid_keys.priv, w.ops);
  CHECK(b2.sig != b1.sig);
  CHECK(b2.t - b1.t == 5 * kMillisecondNs);
}

TEST_CASE("p1: rotating antenna schedule evaluates at emission time") {
  World w;
  certs::DirectionSchedule sched;
  sched.az0 = 0.5;
  sched.spin_rate = 2.0;  // rad/s
  sched.t0 = SimTime{0};
  sched.spinning = true;
  const SimTime t{250 * kMillisecondNs};
  const wire::Beacon b =
      p1_emit(w.navaid_id, {0, 0, 0}, sched.at(t), t, w.navaid_keys.priv, w.ops);
  CHECK(b.d.azimuth == doctest::Approx(0.5 + 2.0 * 0.25));
}

TEST_CASE("p1: replayed beacon beyond the freshness window is stale") {
  World w;
  const wire::Beacon b =
      p1_emit(w.navaid_id, {0, 0, 0}, {}, SimTime{1000}, w.navaid_keys.priv, w.ops);
  // genuine, zero delay: accept
  CHECK(p1_accept(b, w.navaid_keys.pub, SimTime{1000}, w.cfg, w.ops).ok());
  // replayed 50 ms later against a 5 ms window
  auto replayed = p1_accept(b, w.navaid_keys.pub, SimTime{1000 + 50 * kMillisecondNs},
                            w.cfg, w.ops);
  CHECK(replayed.code() == Errc::StaleTimestamp);
}

TEST_CASE("p1: forged content without the key is BadSignature") {
  World w;
  wire::Beacon b = p1_emit(w.navaid_id, {0, 0, 0}, {}, SimTime{1000}, w.navaid_keys.priv, w.ops);
  b.d = Direction::normalized(3.0, 0.2);  // attacker rewrites the direction
  CHECK(p1_accept(b, w.navaid_keys.pub, SimTime{1000}, w.cfg, w.ops).code() ==
        Errc::BadSignature);

  // fabricated from scratch with random signature bytes
  Rng rng(7);
  wire::Beacon spoofed;
  spoofed.i = w.navaid_id;
  spoofed.t = SimTime{1000};
  spoofed.sig = random_bytes(rng, 32);
  CHECK(p1_accept(spoofed, w.navaid_keys.pub, SimTime{1000}, w.cfg, w.ops).code() ==
        Errc::BadSignature);
}

TEST_CASE("p1: timestamps from the future violate the clock tolerance") {
  World w;
  w.cfg.clock_tolerance_ns = resolve_clock_tolerance(1, 100);
  const wire::Beacon b =
      p1_emit(w.navaid_id, {0, 0, 0}, {}, SimTime{200'000}, w.navaid_keys.priv, w.ops);
  CHECK(p1_accept(b, w.navaid_keys.pub, SimTime{100'000}, w.cfg, w.ops).code() ==
        Errc::FutureTimestamp);
}

TEST_CASE("p1 bearing fix: orthogonal rays meet at the intersection") {
  World w;
  BeaconObservation o1, o2;
  o1.p = {0, 100, 0};
  o1.d = Direction::normalized(0, 0);  // +x from (0,100,0)
  o2.p = {100, 0, 0};
  o2.d = Direction::normalized(M_PI / 2, 0);  // +y from (100,0,0)
  auto fix = p1_bearing_fix(std::vector<BeaconObservation>{o1, o2});
  REQUIRE(fix.ok());
  CHECK(distance(fix->position, {100, 100, 0}) < 1e-9);
  CHECK(fix->residual_rms_m < 1e-9);
}

TEST_CASE("p1 bearing fix: perturbed rays match the brute-force minimizer") {
  const Position target{2000, 1500, 300};
  std::vector<BeaconObservation> obs;
  const std::vector<Position> origins = {{0, 0, 0}, {4000, 0, 100}, {1000, 4000, -200}};
  for (const auto& o : origins) {
    const Position diff = target - o;
    const double az = std::atan2(diff.y, diff.x);
    const double el = std::asin(diff.z / norm(diff));
    BeaconObservation b;
    b.p = o;
    b.d = Direction::normalized(az + 1e-3, el - 1e-3);  // 1 mrad pointing error
    obs.push_back(b);
  }
  auto fix = p1_bearing_fix(obs);
  REQUIRE(fix.ok());
  CHECK(fix->residual_rms_m > 0);
  const Position oracle = grid_min_ray_distance(obs, {2000, 2000, 0}, 4000);
  CHECK(distance(fix->position, oracle) < 0.05);
  // 1 mrad at a few km baseline cannot push the estimate further than ~2x
  // baseline x error angle
  CHECK(distance(fix->position, target) < 2 * 4000 * 2e-3);
}

TEST_CASE("p1 bearing fix: parallel rays are degenerate") {
  BeaconObservation o1, o2;
  o1.p = {0, 0, 0};
  o1.d = Direction::normalized(0.3, 0);
  o2.p = {0, 500, 0};
  o2.d = Direction::normalized(0.3, 0);
  CHECK(p1_bearing_fix(std::vector<BeaconObservation>{o1, o2}).code() ==
        Errc::DegenerateGeometry);
}

// ---------------------------------------------------------------------------
// Protocol 2

TEST_CASE("p2_collect: honest channel yields true range + c x bias") {
  World w;
  const double bias_ns = 2'500.0;
  const Position client{0, 0, 0};
  const std::vector<Position> navaids = {
      {10'000, 0, 0}, {0, 10'000, 0}, {0, 0, 10'000}, {-7'000, -7'000, 0}};

  std::vector<BeaconObservation> obs;
  for (size_t i = 0; i < navaids.size(); ++i) {
    const SimTime t{static_cast<int64_t>(5'000'000 + i * 1000)};
    const wire::Beacon b = p1_emit(node_id("N" + std::to_string(i + 1)), navaids[i], {}, t,
                                   w.navaid_keys.priv, w.ops);
    const SimTime rx{t.ns + tof_ns(navaids[i], client) + static_cast<int64_t>(bias_ns)};
    auto o = p1_accept(b, w.navaid_keys.pub, rx, w.cfg, w.ops);
    REQUIRE(o.ok());
    obs.push_back(*o);
  }

  const auto set = p2_collect(obs, 1);
  REQUIRE(set.entries.size() == 4);
  for (size_t i = 0; i < set.entries.size(); ++i) {
    const auto& e = set.entries[i];
    const double pseudorange_m = static_cast<double>(e.rx - e.t) * kMetersPerNs;
    const double true_range_m = distance(e.p, client);
    // rx is on the integer nanosecond grid, so allow c x 0.5 ns of rounding
    CHECK(std::fabs(pseudorange_m - (true_range_m + bias_ns * kMetersPerNs)) <
          kMetersPerNs / 2);
  }
}

TEST_CASE("p2_collect: single beacon still forms a (unusable) set") {
  World w;
  const wire::Beacon b =
      p1_emit(w.navaid_id, {5000, 0, 0}, {}, SimTime{1000}, w.navaid_keys.priv, w.ops);
  auto o = p1_accept(b, w.navaid_keys.pub, SimTime{1000 + 16'678}, w.cfg, w.ops);
  REQUIRE(o.ok());
  const auto set = p2_collect(std::vector<BeaconObservation>{*o}, 1);
  CHECK(set.entries.size() == 1);
}

TEST_CASE("p2_collect: duplicate navaid keeps the earliest arrival") {
  World w;
  BeaconObservation first, replay;
  first.navaid = replay.navaid = w.navaid_id;
  first.sig_valid = replay.sig_valid = true;
  first.t = replay.t = SimTime{1000};
  first.rx = SimTime{2000};
  replay.rx = SimTime{9000};  // replayed copy arrives later
  int dups = 0;
  const auto set =
      p2_collect(std::vector<BeaconObservation>{replay, first}, 1, &dups);
  CHECK(set.entries.size() == 1);
  CHECK(dups == 1);
  CHECK(set.entries[0].rx.ns == 2000);
}

// ---------------------------------------------------------------------------
// Protocol 3

TEST_CASE("p3: honest commit + reveal yields a timing sample, hot path symmetric") {
  World w;
  Rng rng(11);
  const auto r = random_array<32>(rng);
  const SimTime t1{1'000'000}, t2{6'000'000};

  const wire::Commit commit =
      p3_emit_commit(w.navaid_id, r, t1, t2, w.navaid_keys.priv, w.ops);
  const wire::Reveal reveal = p3_emit_reveal(w.navaid_id, r, t2);

  CommitStore store;
  OpCounters setup_ops;
  REQUIRE(store.accept_commit(commit, w.navaid_keys.pub, SimTime{t1.ns + 40}, w.cfg, setup_ops)
              .ok());
  CHECK(setup_ops.verify == 1);  // signature check happens off the hot path

  OpCounters hot_ops;
  auto sample = store.accept_reveal(reveal, SimTime{t2.ns + 40}, w.b, hot_ops);
  REQUIRE(sample.ok());
  CHECK(sample->navaid == w.navaid_id);
  CHECK(sample->t2 == t2);
  CHECK(hot_ops.asymmetric() == 0);  // the hot path must stay hash-only
  CHECK(hot_ops.hash == 1);
}

TEST_CASE("p3: replayed reveal is rejected the second time") {
  World w;
  Rng rng(12);
  const auto r = random_array<32>(rng);
  const wire::Commit commit =
      p3_emit_commit(w.navaid_id, r, SimTime{100}, SimTime{500}, w.navaid_keys.priv, w.ops);
  const wire::Reveal reveal = p3_emit_reveal(w.navaid_id, r, SimTime{500});

  CommitStore store;
  REQUIRE(store.accept_commit(commit, w.navaid_keys.pub, SimTime{110}, w.cfg, w.ops).ok());
  CHECK(store.accept_reveal(reveal, SimTime{510}, w.b, w.ops).ok());
  CHECK(store.accept_reveal(reveal, SimTime{520}, w.b, w.ops).code() == Errc::ReplayedReveal);
}

TEST_CASE("p3: guessed reveals never match a commitment") {
  World w;
  Rng rng(13);
  const auto r = random_array<32>(rng);
  const wire::Commit commit =
      p3_emit_commit(w.navaid_id, r, SimTime{100}, SimTime{500}, w.navaid_keys.priv, w.ops);
  CommitStore store;
  REQUIRE(store.accept_commit(commit, w.navaid_keys.pub, SimTime{110}, w.cfg, w.ops).ok());

  for (int trial = 0; trial < 2000; ++trial) {
    wire::Reveal guess;
    guess.r = random_array<32>(rng);
    guess.t2 = SimTime{500};
    guess.i = w.navaid_id;
    CHECK(store.accept_reveal(guess, SimTime{510}, w.b, w.ops).code() ==
          Errc::UnknownCommitment);
  }
}

TEST_CASE("p3: a replayed commitment does not re-arm its reveal") {
  World w;
  Rng rng(15);
  const auto r = random_array<32>(rng);
  const wire::Commit commit =
      p3_emit_commit(w.navaid_id, r, SimTime{100}, SimTime{500}, w.navaid_keys.priv, w.ops);
  const wire::Reveal reveal = p3_emit_reveal(w.navaid_id, r, SimTime{500});

  CommitStore store;
  REQUIRE(store.accept_commit(commit, w.navaid_keys.pub, SimTime{110}, w.cfg, w.ops).ok());
  // replayed copy of the same commitment is absorbed
  REQUIRE(store.accept_commit(commit, w.navaid_keys.pub, SimTime{150}, w.cfg, w.ops).ok());
  CHECK(store.pending() == 1);
  CHECK(store.accept_reveal(reveal, SimTime{510}, w.b, w.ops).ok());
  CHECK(store.accept_reveal(reveal, SimTime{520}, w.b, w.ops).code() == Errc::ReplayedReveal);
}

TEST_CASE("p3: commitment with a bad signature is rejected") {
  World w;
  Rng rng(14);
  wire::Commit commit = p3_emit_commit(w.navaid_id, random_array<32>(rng), SimTime{100},
                                       SimTime{500}, w.navaid_keys.priv, w.ops);
  commit.t1 = SimTime{101};  // tamper after signing
  CommitStore store;
  CHECK(store.accept_commit(commit, w.navaid_keys.pub, SimTime{110}, w.cfg, w.ops).code() ==
        Errc::BadCommitSignature);
  CHECK(store.pending() == 0);
}

// ---------------------------------------------------------------------------
// Protocol 4

TEST_CASE("p4: offline exchange measures the true distance") {
  World w;
  Rng rng(21);
  const double d_m = 1499.0;
  const int64_t proc_ns = 1 * kMicrosecondNs;
  const auto key = test_key(50);
  const std::vector<crypto::SymmetricKey> keys = {key};

  auto inter = p4_interrogate(key, random_array<32>(rng), random_array<12>(rng),
                              SimTime{10'000'000}, proc_ns, w.ops);
  const auto* env = std::get_if<wire::SymEnvelope>(&inter.msg);
  REQUIRE(env != nullptr);

  const int64_t tof = tof_ns({0, 0, 0}, {d_m, 0, 0});
  NonceCache cache;
  auto resp_env = p4_respond(*env, keys, cache, SimTime{10'000'000 + tof}, random_array<32>(rng),
                             random_array<12>(rng), w.cfg, w.ops);
  REQUIRE(resp_env.has_value());

  auto opened = open_sym(*resp_env, keys, w.ops);
  REQUIRE(opened.ok());
  const auto* resp = std::get_if<wire::Respond>(&*opened);
  REQUIRE(resp != nullptr);

  // oracle: rtt = 2 d / c + processing delay
  const int64_t rtt_ns = 2 * tof + proc_ns;
  auto range = p4_complete(inter.session, *resp, SimTime{10'000'000 + rtt_ns}, w.ops);
  REQUIRE(range.ok());
  CHECK(std::fabs(*range - d_m) < 1.0);
  CHECK(inter.session.state == SessionState::Completed);
}

TEST_CASE("p4: zero distance, zero delay measures zero") {
  World w;
  Rng rng(22);
  const auto key = test_key(51);
  const std::vector<crypto::SymmetricKey> keys = {key};
  auto inter = p4_interrogate(key, random_array<32>(rng), random_array<12>(rng), SimTime{5000},
                              0, w.ops);
  NonceCache cache;
  auto resp_env = p4_respond(std::get<wire::SymEnvelope>(inter.msg), keys, cache, SimTime{5000},
                             random_array<32>(rng), random_array<12>(rng), w.cfg, w.ops);
  REQUIRE(resp_env.has_value());
  auto opened = open_sym(*resp_env, keys, w.ops);
  auto range = p4_complete(inter.session, std::get<wire::Respond>(*opened), SimTime{5000},
                           w.ops);
  REQUIRE(range.ok());
  CHECK(std::fabs(*range) <= kMetersPerNs / 2);
}

TEST_CASE("p4: replayed response nonce does not complete the session") {
  World w;
  Rng rng(23);
  const auto key = test_key(52);
  auto inter = p4_interrogate(key, random_array<32>(rng), random_array<12>(rng), SimTime{5000},
                              0, w.ops);
  wire::Respond stale;
  stale.r_c = random_array<32>(rng);  // yesterday's exchange
  stale.r_n = random_array<32>(rng);
  CHECK(p4_complete(inter.session, stale, SimTime{6000}, w.ops).code() == Errc::NonceMismatch);
  CHECK(inter.session.state == SessionState::Sent);
}

TEST_CASE("p4: navaid silently drops garbage, replays and unknown keys") {
  World w;
  Rng rng(24);
  const auto key = test_key(53);
  const auto other_key = test_key(54);
  const std::vector<crypto::SymmetricKey> keys = {key};
  NonceCache cache;

  // well-formed interrogation under a key the navaid does not hold
  auto foreign = p4_interrogate(other_key, random_array<32>(rng), random_array<12>(rng),
                                SimTime{1000}, 0, w.ops);
  CHECK(!p4_respond(std::get<wire::SymEnvelope>(foreign.msg), keys, cache, SimTime{1000},
                    random_array<32>(rng), random_array<12>(rng), w.cfg, w.ops)
             .has_value());

  // random ciphertext bytes
  wire::SymEnvelope garbage;
  garbage.algo = static_cast<uint8_t>(Algo::Test);
  garbage.key_id = key.id;
  garbage.nonce = random_array<12>(rng);
  garbage.ct = random_bytes(rng, 64);
  CHECK(!p4_respond(garbage, keys, cache, SimTime{1000}, random_array<32>(rng),
                    random_array<12>(rng), w.cfg, w.ops)
             .has_value());

  // stale timestamp
  auto stale = p4_interrogate(key, random_array<32>(rng), random_array<12>(rng), SimTime{1000},
                              0, w.ops);
  CHECK(!p4_respond(std::get<wire::SymEnvelope>(stale.msg), keys, cache,
                    SimTime{1000 + 2 * w.cfg.p4_timestamp_window_ns}, random_array<32>(rng),
                    random_array<12>(rng), w.cfg, w.ops)
             .has_value());

  // fresh interrogation answered once, the replay dropped
  auto good = p4_interrogate(key, random_array<32>(rng), random_array<12>(rng), SimTime{2000},
                             0, w.ops);
  const auto& env = std::get<wire::SymEnvelope>(good.msg);
  CHECK(p4_respond(env, keys, cache, SimTime{2100}, random_array<32>(rng),
                   random_array<12>(rng), w.cfg, w.ops)
            .has_value());
  CHECK(!p4_respond(env, keys, cache, SimTime{2200}, random_array<32>(rng),
                    random_array<12>(rng), w.cfg, w.ops)
             .has_value());
}

// ---------------------------------------------------------------------------
// Protocol 5

TEST_CASE("p5: exchange then authenticate binds nonces and position") {
  World w;
  Rng rng(31);
  const double d_m = 25'000.0;
  const Position navaid_p{d_m, 0, 0};
  const int64_t proc_ns = 2 * kMicrosecondNs;

  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1'000'000}, proc_ns);
  const auto& q = std::get<wire::Interrogate>(inter.msg);

  NonceCache cache;
  const int64_t tof = tof_ns({0, 0, 0}, navaid_p);
  const auto r_n = random_array<32>(rng);
  auto resp = p5_respond(q, cache, SimTime{1'000'000 + tof}, r_n, w.cfg);
  REQUIRE(resp.has_value());

  const int64_t rtt = 2 * tof + proc_ns;
  auto range = p4_complete(inter.session, *resp, SimTime{1'000'000 + rtt}, w.ops);
  REQUIRE(range.ok());
  CHECK(std::fabs(*range - d_m) < 1.0);

  // navaid's view of the session for the auth message
  RangingSession peer;
  peer.r_c = q.r_c;
  peer.r_n = r_n;
  peer.t = q.t;
  const wire::Auth auth =
      p5_make_auth(w.navaid_id, navaid_p, {}, peer, w.navaid_keys.priv, w.ops);

  auto ar = p5_authenticate(inter.session, auth, w.navaid_keys.pub, w.ops);
  REQUIRE(ar.ok());
  CHECK(ar->navaid == w.navaid_id);
  CHECK(distance(ar->p, navaid_p) == 0.0);
  CHECK(inter.session.state == SessionState::Authenticated);
}

TEST_CASE("p5: substituted auth with unmatched nonce fails") {
  World w;
  Rng rng(32);
  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1000}, 0);
  NonceCache cache;
  auto resp = p5_respond(std::get<wire::Interrogate>(inter.msg), cache, SimTime{1100},
                         random_array<32>(rng), w.cfg);
  REQUIRE(resp.has_value());
  REQUIRE(p4_complete(inter.session, *resp, SimTime{1200}, w.ops).ok());

  // another navaid signs honest-looking data, but with its own session nonces
  RangingSession other;
  other.r_c = inter.session.r_c;
  other.r_n = random_array<32>(rng);  // does not match
  other.t = SimTime{1000};
  const wire::Auth auth =
      p5_make_auth(w.navaid2_id, {9, 9, 9}, {}, other, w.navaid2_keys.priv, w.ops);
  CHECK(p5_authenticate(inter.session, auth, w.navaid2_keys.pub, w.ops).code() ==
        Errc::NonceMismatch);
}

TEST_CASE("p5: tampered auth signature fails") {
  World w;
  Rng rng(33);
  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1000}, 0);
  NonceCache cache;
  auto resp = p5_respond(std::get<wire::Interrogate>(inter.msg), cache, SimTime{1100},
                         random_array<32>(rng), w.cfg);
  REQUIRE(p4_complete(inter.session, *resp, SimTime{1200}, w.ops).ok());

  RangingSession peer;
  peer.r_c = inter.session.r_c;
  peer.r_n = inter.session.r_n;
  peer.t = SimTime{1000};
  wire::Auth auth = p5_make_auth(w.navaid_id, {1, 2, 3}, {}, peer, w.navaid_keys.priv, w.ops);
  auth.p.x += 1.0;  // tamper after signing
  CHECK(p5_authenticate(inter.session, auth, w.navaid_keys.pub, w.ops).code() ==
        Errc::BadSignature);
}

TEST_CASE("p5: a delay meaconer inflates the range but cannot shrink it") {
  World w;
  Rng rng(34);
  const double d_m = 1000.0;
  const int64_t meacon_delay_ns = 10 * kMicrosecondNs;  // each way

  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1'000'000}, 0);
  NonceCache cache;
  const int64_t tof = tof_ns({0, 0, 0}, {d_m, 0, 0});
  auto resp = p5_respond(std::get<wire::Interrogate>(inter.msg), cache,
                         SimTime{1'000'000 + tof + meacon_delay_ns}, random_array<32>(rng),
                         w.cfg);
  REQUIRE(resp.has_value());
  const int64_t rtt = 2 * tof + 2 * meacon_delay_ns;
  auto range = p4_complete(inter.session, *resp, SimTime{1'000'000 + rtt}, w.ops);
  REQUIRE(range.ok());
  // inflated by c x 10 us, still authenticates afterwards (documented limit)
  CHECK(std::fabs(*range - (d_m + kMetersPerNs * meacon_delay_ns)) < kMetersPerNs / 2);
  CHECK(*range > d_m);

  RangingSession peer;
  peer.r_c = inter.session.r_c;
  peer.r_n = inter.session.r_n;
  peer.t = inter.session.t;
  const wire::Auth auth =
      p5_make_auth(w.navaid_id, {d_m, 0, 0}, {}, peer, w.navaid_keys.priv, w.ops);
  CHECK(p5_authenticate(inter.session, auth, w.navaid_keys.pub, w.ops).ok());
}

// ---------------------------------------------------------------------------
// Combiners

TEST_CASE("daisy chain: honest symmetric channel is clean") {
  World w;
  RangeMeasurement a{5000.0, SimTime{1'000'000}, node_id("A")};
  RangeMeasurement b{5000.2, SimTime{1'200'000}, node_id("B")};
  const DaisyResult r = combine_daisy_chain(a, b, w.cfg);
  CHECK(r.verdict == DaisyVerdict::CLEAN);
  // symmetric in node order
  const DaisyResult r2 = combine_daisy_chain(b, a, w.cfg);
  CHECK(r2.delta_m == doctest::Approx(r.delta_m));
  CHECK(r2.verdict == r.verdict);
}

TEST_CASE("daisy chain: one-leg meaconing delay is flagged") {
  World w;
  // 5 us one-way delay on one leg only: that leg's range inflates by c*5us/2
  const double inflation = kMetersPerNs * 5000 / 2;
  RangeMeasurement a{5000.0 + inflation, SimTime{1'000'000}, node_id("A")};
  RangeMeasurement b{5000.0, SimTime{1'050'000}, node_id("B")};
  const DaisyResult r = combine_daisy_chain(a, b, w.cfg);
  CHECK(r.delta_m == doctest::Approx(inflation).epsilon(1e-9));
  CHECK(r.verdict == DaisyVerdict::MEACONING_SUSPECTED);
}

TEST_CASE("daisy chain: fast closure with honest reports stays clean") {
  World w;
  // closing at 1000 m/s with 1 ms between measurements: ranges legitimately
  // differ by up to 1 m, which the bound must absorb
  RangeMeasurement a{5000.0, SimTime{0}, node_id("A")};
  RangeMeasurement b{4999.0, SimTime{1 * kMillisecondNs}, node_id("B")};
  const DaisyResult r = combine_daisy_chain(a, b, w.cfg);
  CHECK(r.delta_m <= 1.0 + 1e-9);
  CHECK(r.verdict == DaisyVerdict::CLEAN);
}

TEST_CASE("combine_p1_p2: empty input, mixed sources, p3 preferred") {
  World w;
  // empty
  CHECK(combine_p1_p2({}, {}, {}, 1).entries.empty());

  // five navaids, mixed sources
  std::vector<BeaconObservation> beacons;
  std::vector<TimingSample> samples;
  std::map<NodeId, Position> certified;
  for (int i = 0; i < 5; ++i) {
    const NodeId id = node_id("N" + std::to_string(i + 1));
    if (i < 3) {
      BeaconObservation o;
      o.navaid = id;
      o.p = {1000.0 * i, 0, 0};
      o.t = SimTime{1000};
      o.rx = SimTime{2000};
      o.sig_valid = true;
      beacons.push_back(o);
    }
    if (i >= 2) {  // N3 has both sources, N4/N5 only P3
      samples.push_back(TimingSample{id, SimTime{1500}, SimTime{2400}});
      certified[id] = {1000.0 * i, 0, 0};
    }
  }
  const auto set = combine_p1_p2(beacons, samples, certified, 1);
  REQUIRE(set.entries.size() == 5);
  for (const auto& e : set.entries) {
    if (e.id == node_id("N3")) {
      CHECK(e.from_p3);        // p3 sample replaced the beacon timing
      CHECK(e.t.ns == 1500);
      CHECK(e.p.x == doctest::Approx(2000.0));  // position retained
    }
  }
}

TEST_CASE("combine_timing_angle: honest run recovers the client position") {
  World w;
  Rng rng(41);
  // client due north of the navaid at 1000 m
  const Position navaid_p{0, 0, 0};
  const Position client_p{0, 1000, 0};

  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1'000'000}, 0);
  NonceCache cache;
  const int64_t tof = tof_ns(navaid_p, client_p);
  auto resp = p5_respond(std::get<wire::Interrogate>(inter.msg), cache,
                         SimTime{1'000'000 + tof}, random_array<32>(rng), w.cfg);
  REQUIRE(resp.has_value());
  REQUIRE(p4_complete(inter.session, *resp, SimTime{1'000'000 + 2 * tof}, w.ops).ok());

  // the navaid reports the measured arrival direction of the interrogation
  RangingSession peer;
  peer.r_c = inter.session.r_c;
  peer.r_n = inter.session.r_n;
  peer.t = inter.session.t;
  const Direction toward_client = Direction::normalized(M_PI / 2, 0);
  const wire::Auth auth =
      p5_make_auth(w.navaid_id, navaid_p, toward_client, peer, w.navaid_keys.priv, w.ops);

  auto pair = combine_timing_angle(inter.session, auth, w.navaid_keys.pub, w.ops);
  REQUIRE(pair.ok());
  CHECK(std::fabs(pair->range_m - 1000.0) < kMetersPerNs / 2);
  CHECK(pair->bearing.azimuth == doctest::Approx(M_PI / 2));
  CHECK(distance(pair->implied_position(), client_p) < 0.5);
}

TEST_CASE("combine_timing_angle: stale nonces are rejected") {
  World w;
  Rng rng(42);
  auto inter = p5_interrogate(random_array<32>(rng), SimTime{1000}, 0);
  NonceCache cache;
  auto resp = p5_respond(std::get<wire::Interrogate>(inter.msg), cache, SimTime{1100},
                         random_array<32>(rng), w.cfg);
  REQUIRE(p4_complete(inter.session, *resp, SimTime{1200}, w.ops).ok());

  RangingSession stale;
  stale.r_c = random_array<32>(rng);
  stale.r_n = random_array<32>(rng);
  stale.t = SimTime{1000};
  const wire::Auth auth = p5_make_auth(w.navaid_id, {}, {}, stale, w.navaid_keys.priv, w.ops);
  CHECK(combine_timing_angle(inter.session, auth, w.navaid_keys.pub, w.ops).code() ==
        Errc::NonceMismatch);
}

// ---------------------------------------------------------------------------
// Envelope helpers

TEST_CASE("pk envelope round trip carries an inner message") {
  World w;
  Rng rng(51);
  wire::Auth inner;
  inner.i = w.navaid_id;
  inner.t = SimTime{123};
  inner.r_c = random_array<32>(rng);
  inner.r_n = random_array<32>(rng);
  inner.sig = random_bytes(rng, 16);

  const wire::PkEnvelope env =
      seal_pk(w.client_keys.pub, random_array<32>(rng), wire::Message{inner}, w.ops);
  CHECK(env.recipient == crypto::key_id_of(w.client_keys.pub));

  auto opened = open_pk(env, w.client_keys.priv, w.ops);
  REQUIRE(opened.ok());
  CHECK(std::get<wire::Auth>(*opened) == inner);

  // wrong recipient key
  CHECK(open_pk(env, w.navaid_keys.priv, w.ops).code() == Errc::IntegrityFailure);
}
