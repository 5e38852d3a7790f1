#include "navsec/protocols.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace navsec::proto {

namespace {

Bytes be64_bytes(int64_t v) {
  ByteWriter w;
  w.u64(static_cast<uint64_t>(v));
  return w.take();
}

}  // namespace

int64_t resolve_clock_tolerance(int64_t quantization_ns, int64_t max_bias_ns) {
  return 2 * quantization_ns + max_bias_ns;
}

// ---------------------------------------------------------------------------
// Protocol 1 / 2

wire::Beacon p1_emit(const NodeId& id, const Position& p, const Direction& d,
                     SimTime navaid_now, const crypto::PrivateKey& key, OpCounters& ops) {
  wire::Beacon b;
  b.p = p;
  b.d = d;
  b.t = navaid_now;
  b.i = id;
  const Bytes prefix = wire::signed_prefix(wire::Message{b});
  ops.sign++;
  b.sig = crypto::backend(key.algo).sign(key, prefix).bytes;
  return b;
}

Expected<BeaconObservation> p1_accept(const wire::Beacon& b, const crypto::PublicKey& navaid_key,
                                      SimTime client_now, const Config& cfg, OpCounters& ops) {
  const Bytes prefix = wire::signed_prefix(wire::Message{b});
  ops.verify++;
  const crypto::Signature sig{navaid_key.algo, b.sig};
  if (!crypto::backend(navaid_key.algo).verify(navaid_key, prefix, sig))
    return Error{Errc::BadSignature, "beacon signature invalid"};

  const int64_t age = client_now - b.t;
  if (age > cfg.freshness_window_ns)
    return Error{Errc::StaleTimestamp, "beacon older than freshness window"};
  if (age < -cfg.clock_tolerance_ns)
    return Error{Errc::FutureTimestamp, "beacon timestamp ahead of local clock"};

  BeaconObservation obs;
  obs.navaid = b.i;
  obs.p = b.p;
  obs.d = b.d;
  obs.t = b.t;
  obs.rx = client_now;
  obs.sig_valid = true;
  return obs;
}

Expected<BearingFix> p1_bearing_fix(std::span<const BeaconObservation> obs, const Config& cfg) {
  if (obs.size() < 2)
    return Error{Errc::DegenerateGeometry, "need at least two rays"};

  // Closest point to the set of lines: minimize sum |(I - u u^T)(x - o)|^2.
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& o : obs) {
    const Position uv = o.d.unit_vector();
    const Eigen::Vector3d u(uv.x, uv.y, uv.z);
    const Eigen::Vector3d origin(o.p.x, o.p.y, o.p.z);
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - u * u.transpose();
    A += proj;
    rhs += proj * origin;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (emin <= 0 || emax / emin > cfg.ray_condition_limit)
    return Error{Errc::DegenerateGeometry, "rays near parallel"};

  const Eigen::Vector3d x = A.ldlt().solve(rhs);

  double sum = 0;
  for (const auto& o : obs) {
    const Position uv = o.d.unit_vector();
    const Eigen::Vector3d u(uv.x, uv.y, uv.z);
    const Eigen::Vector3d origin(o.p.x, o.p.y, o.p.z);
    const Eigen::Vector3d w = x - origin;
    const Eigen::Vector3d perp = w - u * u.dot(w);
    sum += perp.squaredNorm();
  }
  BearingFix fix;
  fix.position = {x[0], x[1], x[2]};
  fix.residual_rms_m = std::sqrt(sum / static_cast<double>(obs.size()));
  return fix;
}

solver::PseudorangeSet p2_collect(std::span<const BeaconObservation> obs,
                                  int64_t client_quantization_ns, int* duplicates) {
  solver::PseudorangeSet set;
  set.client_quantization_ns = client_quantization_ns;
  int dup = 0;
  std::map<NodeId, size_t> index;
  for (const auto& o : obs) {
    if (!o.sig_valid) continue;
    auto it = index.find(o.navaid);
    if (it != index.end()) {
      ++dup;
      // Keep the earliest arrival: a later duplicate is either a repeat
      // emission or a replayed copy, and a replay can only arrive later.
      if (o.rx < set.entries[it->second].rx)
        set.entries[it->second] = {o.navaid, o.p, o.t, o.rx, false};
      continue;
    }
    index[o.navaid] = set.entries.size();
    set.entries.push_back({o.navaid, o.p, o.t, o.rx, false});
  }
  std::sort(set.entries.begin(), set.entries.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  if (duplicates) *duplicates = dup;
  return set;
}

// ---------------------------------------------------------------------------
// Protocol 3

crypto::Digest commit_digest(const crypto::Backend& b, const wire::Nonce32& r, SimTime t2,
                             OpCounters& ops) {
  Bytes buf(r.begin(), r.end());
  const Bytes ts = be64_bytes(t2.ns);
  buf.insert(buf.end(), ts.begin(), ts.end());
  ops.hash++;
  return b.hash(buf);
}

wire::Commit p3_emit_commit(const NodeId& id, const wire::Nonce32& r, SimTime t1, SimTime t2,
                            const crypto::PrivateKey& key, OpCounters& ops) {
  wire::Commit c;
  c.commitment = commit_digest(crypto::backend(key.algo), r, t2, ops).bytes;
  c.t1 = t1;
  c.i = id;
  ops.sign++;
  c.sig = crypto::backend(key.algo).sign(key, wire::signed_prefix(wire::Message{c})).bytes;
  return c;
}

wire::Reveal p3_emit_reveal(const NodeId& id, const wire::Nonce32& r, SimTime t2) {
  wire::Reveal rv;
  rv.r = r;
  rv.t2 = t2;
  rv.i = id;
  return rv;
}

Expected<void> CommitStore::accept_commit(const wire::Commit& c,
                                          const crypto::PublicKey& navaid_key, SimTime rx_local,
                                          const Config& cfg, OpCounters& ops) {
  (void)cfg;
  const Bytes prefix = wire::signed_prefix(wire::Message{c});
  ops.verify++;
  const crypto::Signature sig{navaid_key.algo, c.sig};
  if (!crypto::backend(navaid_key.algo).verify(navaid_key, prefix, sig))
    return Error{Errc::BadCommitSignature, "commitment signature invalid"};

  // A replayed copy of a commitment must not re-arm its reveal.
  for (const Commitment& existing : store_) {
    if (existing.digest.bytes == c.commitment) return {};
  }

  Commitment stored;
  stored.digest.bytes = c.commitment;
  stored.t1 = c.t1;
  stored.navaid = c.i;
  stored.rx = rx_local;
  stored.verified = true;
  store_.push_back(stored);
  return {};
}

Expected<TimingSample> CommitStore::accept_reveal(const wire::Reveal& rv, SimTime rx_local,
                                                  const crypto::Backend& backend,
                                                  OpCounters& ops) {
  const crypto::Digest want = commit_digest(backend, rv.r, rv.t2, ops);
  for (Commitment& c : store_) {
    if (c.digest != want) continue;
    if (c.matched) return Error{Errc::ReplayedReveal, "commitment already consumed"};
    c.matched = true;
    // The commitment was signed, so its navaid id is authoritative here.
    return TimingSample{c.navaid, rv.t2, rx_local};
  }
  return Error{Errc::UnknownCommitment, "no commitment matches this reveal"};
}

void CommitStore::purge(SimTime now, const Config& cfg) {
  std::erase_if(store_, [&](const Commitment& c) {
    return c.matched || now - c.rx > cfg.commit_ttl_ns;
  });
}

// ---------------------------------------------------------------------------
// Protocol 4 / 5

bool NonceCache::seen_then_insert(const wire::Nonce32& r_c, SimTime now, int64_t ttl_ns) {
  purge(now);
  auto it = seen_.find(r_c);
  if (it != seen_.end()) {
    it->second = std::max(it->second, now + ttl_ns);
    return true;
  }
  seen_.emplace(r_c, now + ttl_ns);
  return false;
}

void NonceCache::purge(SimTime now) {
  std::erase_if(seen_, [&](const auto& kv) { return kv.second < now; });
}

Interrogation p4_interrogate(const crypto::SymmetricKey& key, const wire::Nonce32& r_c,
                             const crypto::Nonce12& nonce, SimTime client_now,
                             int64_t certified_delay_ns, OpCounters& ops) {
  wire::Interrogate q;
  q.r_c = r_c;
  q.t = client_now;

  Interrogation out{seal_sym(key, nonce, wire::Message{q}, ops), {}};
  out.session.r_c = r_c;
  out.session.t = client_now;
  out.session.tx_local = client_now;  // caller overwrites with the emission clock reading
  out.session.processing_delay_ns = certified_delay_ns;
  out.session.state = SessionState::Sent;
  out.session.encrypted = true;
  return out;
}

std::optional<wire::SymEnvelope> p4_respond(const wire::SymEnvelope& env,
                                            std::span<const crypto::SymmetricKey> valid_keys,
                                            NonceCache& cache, SimTime navaid_now,
                                            const wire::Nonce32& r_n,
                                            const crypto::Nonce12& reply_nonce,
                                            const Config& cfg, OpCounters& ops) {
  // Silent drop on every failure: no response oracle for attackers.
  auto opened = open_sym(env, valid_keys, ops);
  if (!opened.ok()) return std::nullopt;
  const auto* q = std::get_if<wire::Interrogate>(&*opened);
  if (q == nullptr) return std::nullopt;

  if (std::llabs(q->t - navaid_now) > cfg.p4_timestamp_window_ns) return std::nullopt;
  if (cache.seen_then_insert(q->r_c, navaid_now, cfg.nonce_cache_ttl_ns)) return std::nullopt;

  // Respond under the key that opened the interrogation.
  const crypto::SymmetricKey* key = nullptr;
  for (const auto& k : valid_keys) {
    if (k.id == env.key_id) {
      key = &k;
      break;
    }
  }
  if (key == nullptr) return std::nullopt;

  wire::Respond resp;
  resp.r_c = q->r_c;
  resp.r_n = r_n;
  return seal_sym(*key, reply_nonce, wire::Message{resp}, ops);
}

Expected<double> p4_complete(RangingSession& s, const wire::Respond& resp, SimTime rx_local,
                             OpCounters& ops) {
  (void)ops;
  if (s.state != SessionState::Sent)
    return Error{Errc::NonceMismatch, "session not awaiting a response"};
  if (resp.r_c != s.r_c) return Error{Errc::NonceMismatch, "response echoes a different nonce"};

  s.rx_local = rx_local;
  s.r_n = resp.r_n;
  const double rtt_ns = static_cast<double>(s.rx_local - s.tx_local);
  s.range_m = kMetersPerNs * (rtt_ns - static_cast<double>(s.processing_delay_ns)) / 2.0;
  s.state = SessionState::Completed;
  return s.range_m;
}

Interrogation p5_interrogate(const wire::Nonce32& r_c, SimTime client_now,
                             int64_t certified_delay_ns) {
  wire::Interrogate q;
  q.r_c = r_c;
  q.t = client_now;
  Interrogation out{wire::Message{q}, {}};
  out.session.r_c = r_c;
  out.session.t = client_now;
  out.session.tx_local = client_now;
  out.session.processing_delay_ns = certified_delay_ns;
  out.session.state = SessionState::Sent;
  out.session.encrypted = false;
  return out;
}

std::optional<wire::Respond> p5_respond(const wire::Interrogate& q, NonceCache& cache,
                                        SimTime navaid_now, const wire::Nonce32& r_n,
                                        const Config& cfg) {
  if (std::llabs(q.t - navaid_now) > cfg.p4_timestamp_window_ns) return std::nullopt;
  if (cache.seen_then_insert(q.r_c, navaid_now, cfg.nonce_cache_ttl_ns)) return std::nullopt;
  wire::Respond resp;
  resp.r_c = q.r_c;
  resp.r_n = r_n;
  return resp;
}

wire::Auth p5_make_auth(const NodeId& id, const Position& p, const Direction& d,
                        const RangingSession& peer_view, const crypto::PrivateKey& key,
                        OpCounters& ops) {
  wire::Auth a;
  a.p = p;
  a.d = d;
  a.t = peer_view.t;
  a.i = id;
  a.r_c = peer_view.r_c;
  a.r_n = peer_view.r_n;
  ops.sign++;
  a.sig = crypto::backend(key.algo).sign(key, wire::signed_prefix(wire::Message{a})).bytes;
  return a;
}

Expected<AuthenticatedRange> p5_authenticate(RangingSession& s, const wire::Auth& auth,
                                             const crypto::PublicKey& navaid_key,
                                             OpCounters& ops) {
  if (s.state != SessionState::Completed && s.state != SessionState::Authenticated)
    return Error{Errc::NonceMismatch, "session has no completed exchange"};
  if (auth.r_c != s.r_c || auth.r_n != s.r_n)
    return Error{Errc::NonceMismatch, "authentication does not bind this session"};

  ops.verify++;
  const crypto::Signature sig{navaid_key.algo, auth.sig};
  if (!crypto::backend(navaid_key.algo).verify(navaid_key,
                                               wire::signed_prefix(wire::Message{auth}), sig))
    return Error{Errc::BadSignature, "authentication signature invalid"};

  s.state = SessionState::Authenticated;
  AuthenticatedRange out;
  out.range_m = s.range_m;
  out.p = auth.p;
  out.d = auth.d;
  out.t = auth.t;
  out.navaid = auth.i;
  return out;
}

// ---------------------------------------------------------------------------
// Envelopes

wire::SymEnvelope seal_sym(const crypto::SymmetricKey& key, const crypto::Nonce12& nonce,
                           const wire::Message& inner, OpCounters& ops) {
  ops.sym++;
  const Bytes plain = wire::encode(inner);
  const crypto::SymCiphertext ct = crypto::backend(key.algo).sym_encrypt(key, nonce, plain);
  wire::SymEnvelope env;
  env.algo = static_cast<uint8_t>(key.algo);
  env.key_id = key.id;
  env.nonce = nonce;
  env.ct = ct.bytes;
  return env;
}

Expected<wire::Message> open_sym(const wire::SymEnvelope& env,
                                 std::span<const crypto::SymmetricKey> keys, OpCounters& ops) {
  auto be = crypto::backend_checked(env.algo);
  if (!be.ok()) return be.error();
  for (const auto& key : keys) {
    if (key.id != env.key_id) continue;
    ops.sym++;
    crypto::SymCiphertext ct;
    ct.algo = key.algo;
    ct.nonce = env.nonce;
    ct.bytes = env.ct;
    auto plain = crypto::backend(key.algo).sym_decrypt(key, ct);
    if (!plain.ok()) return plain.error();
    return wire::decode(*plain);
  }
  return Error{Errc::IntegrityFailure, "no valid key opens this envelope"};
}

wire::PkEnvelope seal_pk(const crypto::PublicKey& to, const crypto::Seed32& entropy,
                         const wire::Message& inner, OpCounters& ops) {
  ops.pk++;
  wire::PkEnvelope env;
  env.algo = static_cast<uint8_t>(to.algo);
  env.recipient = crypto::key_id_of(to);
  env.ct = crypto::backend(to.algo).pk_encrypt(to, entropy, wire::encode(inner));
  return env;
}

Expected<wire::Message> open_pk(const wire::PkEnvelope& env, const crypto::PrivateKey& priv,
                                OpCounters& ops) {
  auto be = crypto::backend_checked(env.algo);
  if (!be.ok()) return be.error();
  if (priv.algo != (*be)->algo()) return Error{Errc::IntegrityFailure, "algorithm mismatch"};
  ops.pk++;
  auto plain = (*be)->pk_decrypt(priv, env.ct);
  if (!plain.ok()) return plain.error();
  return wire::decode(*plain);
}

// ---------------------------------------------------------------------------
// Combiners

DaisyResult combine_daisy_chain(const RangeMeasurement& a, const RangeMeasurement& b,
                                const Config& cfg) {
  DaisyResult out;
  out.delta_m = std::fabs(a.range_m - b.range_m);
  const double elapsed_s = std::fabs(static_cast<double>(a.t - b.t)) * 1e-9;
  out.bound_m = cfg.v_max_closure_mps * elapsed_s + 2.0 * cfg.range_tolerance_m;
  out.verdict =
      out.delta_m > out.bound_m ? DaisyVerdict::MEACONING_SUSPECTED : DaisyVerdict::CLEAN;
  return out;
}

solver::PseudorangeSet combine_p1_p2(std::span<const BeaconObservation> beacons,
                                     std::span<const TimingSample> p3_samples,
                                     const std::map<NodeId, Position>& certified_positions,
                                     int64_t client_quantization_ns) {
  solver::PseudorangeSet set = p2_collect(beacons, client_quantization_ns);

  // Beacon positions double as a fallback source for P3-only navaids.
  std::map<NodeId, Position> positions = certified_positions;
  for (const auto& e : set.entries) positions.emplace(e.id, e.p);

  for (const auto& s : p3_samples) {
    auto pos = positions.find(s.navaid);
    if (pos == positions.end()) continue;  // no asserted position, unusable
    auto it = std::find_if(set.entries.begin(), set.entries.end(),
                           [&](const auto& e) { return e.id == s.navaid; });
    if (it == set.entries.end()) {
      set.entries.push_back({s.navaid, pos->second, s.t2, s.rx, true});
    } else {
      // Prefer the pre-authenticated sample: its hot path is latency-free.
      it->t = s.t2;
      it->rx = s.rx;
      it->from_p3 = true;
    }
  }
  std::sort(set.entries.begin(), set.entries.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return set;
}

Expected<ConstraintPair> combine_timing_angle(const RangingSession& s, const wire::Auth& auth,
                                              const crypto::PublicKey& navaid_key,
                                              OpCounters& ops) {
  RangingSession copy = s;
  auto ar = p5_authenticate(copy, auth, navaid_key, ops);
  if (!ar.ok()) return ar.error();
  ConstraintPair pair;
  pair.navaid_p = ar->p;
  pair.range_m = ar->range_m;
  pair.bearing = ar->d;
  return pair;
}

}  // namespace navsec::proto
