#include "navsec/simnet.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <set>
#include <variant>

namespace navsec::sim {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

crypto::Seed32 expand_seed(uint64_t master, uint64_t salt) {
  crypto::Seed32 out{};
  for (int lane = 0; lane < 4; ++lane) {
    const uint64_t v = mix64(master ^ mix64(salt + lane));
    for (int b = 0; b < 8; ++b) out[lane * 8 + b] = static_cast<uint8_t>(v >> (8 * b));
  }
  return out;
}

template <size_t N>
std::array<uint8_t, N> draw(std::mt19937_64& rng) {
  std::array<uint8_t, N> out;
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

std::string id_str(const NodeId& id) { return id.to_string(); }

Json prov_json(const std::vector<NodeId>& prov) {
  Json arr = Json::array();
  for (const auto& p : prov) arr.push_back(id_str(p));
  return arr;
}

}  // namespace

const char* role_name(Role r) {
  switch (r) {
    case Role::Navaid: return "navaid";
    case Role::Client: return "client";
    case Role::Attacker: return "attacker";
  }
  return "unknown";
}

SimTime delivery_time_closed_form(const Position& emit_pos, SimTime emit_t,
                                  const Motion& receiver) {
  const Position a0 = receiver.at(emit_t) - emit_pos;
  if (!receiver.moving) return emit_t + tof_ns(receiver.p0, emit_pos);
  const Position v = receiver.velocity;  // m/s
  const double c = kMetersPerNs;
  // |a0 + v*u*1e-9| = c*u, u in ns
  const double qa = (v.x * v.x + v.y * v.y + v.z * v.z) * 1e-18 - c * c;
  const double qb = 2e-9 * (a0.x * v.x + a0.y * v.y + a0.z * v.z);
  const double qc = a0.x * a0.x + a0.y * a0.y + a0.z * a0.z;
  const double disc = qb * qb - 4 * qa * qc;
  if (disc < 0 || qa == 0) return emit_t + tof_ns(receiver.at(emit_t), emit_pos);
  const double r1 = (-qb + std::sqrt(disc)) / (2 * qa);
  const double r2 = (-qb - std::sqrt(disc)) / (2 * qa);
  double u = 1e30;
  if (r1 > 0) u = std::min(u, r1);
  if (r2 > 0) u = std::min(u, r2);
  if (u == 1e30) u = 0;
  return emit_t + std::llround(u);
}

std::string Trace::to_jsonl() const {
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& e : events) {
    out += e.dump();
    out.push_back('\n');
  }
  out += summary.dump();
  out.push_back('\n');
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> errs;
  auto err = [&errs](const std::string& e) { errs.push_back(e); };

  if (s.duration.ns <= 0) err("duration must be positive");
  if (s.nodes.empty()) return errs;  // empty scenario is valid (empty trace)

  std::set<NodeId> ids;
  for (const auto& n : s.nodes) {
    if (!ids.insert(n.id).second) err("duplicate node id " + id_str(n.id));
  }
  auto find = [&s](const NodeId& id) -> const NodeSpec* {
    for (const auto& n : s.nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  };

  for (const auto& n : s.nodes) {
    const std::string who = id_str(n.id);
    if (n.clock.quantization_ns < 1) err(who + ": clock quantization must be >= 1 ns");
    if (n.clock.drift <= -1.0) err(who + ": clock drift must be > -1");
    if (n.role == Role::Client && n.observe &&
        std::llabs(n.clock.bias_ns) > s.params.max_clock_bias_ns)
      err(who + ": clock bias exceeds params.max_clock_bias_ns");

    if (n.role != Role::Attacker && n.caps.any())
      err(who + ": honest nodes cannot carry attacker capabilities");
    if (n.role == Role::Attacker && (n.beacon || n.p3 || n.p4_responder || n.p5_responder))
      err(who + ": attacker nodes do not run honest protocol roles");

    if ((n.p4_responder || n.daisy_respond) &&
        n.processing_delay_ns < 2 * s.params.proto.sym_latency_ns)
      err(who + ": processing delay cannot cover two symmetric operations");

    for (const auto& plan : n.interrogations) {
      const NodeSpec* t = find(plan.target);
      if (t == nullptr) {
        err(who + ": interrogation target missing");
        continue;
      }
      if (plan.protocol == 4 && !t->p4_responder)
        err(who + ": target " + id_str(plan.target) + " is not a p4 responder");
      if (plan.protocol == 5 && !t->p5_responder)
        err(who + ": target " + id_str(plan.target) + " is not a p5 responder");
      if (plan.protocol != 4 && plan.protocol != 5) err(who + ": protocol must be 4 or 5");
      if (plan.at > s.duration) err(who + ": interrogation scheduled past duration");
    }
    if (n.daisy) {
      const NodeSpec* p = find(n.daisy->partner);
      if (p == nullptr || !p->daisy_respond)
        err(who + ": daisy partner missing or not daisy_respond");
    }
    for (const auto& ft : n.fix_times) {
      if (ft > s.duration) err(who + ": fix time past duration");
    }
    for (const auto& k : n.caps.key_compromise) {
      if (find(k) == nullptr) err(who + ": key_compromise target missing");
    }
  }
  return errs;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

struct DeliverEv {
  Bytes bytes;
  std::vector<NodeId> prov;
  NodeId emitter;
  SimTime emitted_at;
  Position emit_pos;
};
struct EmitEv {
  Bytes bytes;
  std::vector<NodeId> prov;
  std::optional<Position> from_pos;
  std::string attack_kind;  // empty for honest emissions
};
struct BeaconTick {};
struct P3Tick {};
struct P3RevealEv {
  wire::Nonce32 r{};
  SimTime t2;
};
struct InterrogateEv {
  size_t plan = 0;
};
struct KeyexEv {
  NodeId target;
};
struct KeyInstallEv {
  crypto::SymmetricKey key;
  NodeId from;
};
struct FixEv {};
struct TimeoutEv {
  wire::Nonce32 r_c{};
};
struct SpoofBeaconEv {
  size_t index = 0;
};
struct SpoofResponseEv {};

using Payload = std::variant<DeliverEv, EmitEv, BeaconTick, P3Tick, P3RevealEv, InterrogateEv,
                             KeyexEv, KeyInstallEv, FixEv, TimeoutEv, SpoofBeaconEv,
                             SpoofResponseEv>;

struct Event {
  SimTime t;
  uint64_t seq;
  size_t node;
  Payload payload;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.seq > b.seq;
  }
};

struct SessionCtx {
  proto::RangingSession session;
  NodeId target;
  int protocol = 4;
  bool daisy = false;
  bool timing_angle = false;
  SimTime tx_true, rx_true;
  double true_range_at_tx = -1;
  bool authenticated = false;
  Position auth_position;
  SimTime auth_rx_true;
  SimTime auth_done_true;
  std::optional<Position> timing_angle_position;
};

struct DaisyReturn {
  NodeId partner;
  wire::Nonce32 expect_rc{};  // the r_n we answered with
  SimTime tx_local;           // our clock when the response left
  int64_t peer_delay_ns = 0;  // partner's certified turnaround
};

struct NodeRt {
  NodeSpec spec;
  ClockModel clock;
  crypto::KeyPair keys;
  std::map<NodeId, crypto::PublicKey> known_keys;
  std::map<NodeId, certs::Certificate> cert_of;
  std::vector<crypto::SymmetricKey> sym_keys;       // keys this node can open
  std::map<NodeId, crypto::SymmetricKey> peer_sym;  // client: key per responder
  std::map<NodeId, crypto::PrivateKey> stolen;      // via key compromise
  proto::NonceCache nonces;
  proto::CommitStore commits;
  std::vector<proto::BeaconObservation> observations;
  std::vector<SimTime> obs_usable_at;
  std::vector<proto::TimingSample> p3_samples;
  std::map<wire::Nonce32, SessionCtx> sessions;
  std::vector<wire::Nonce32> session_order;
  std::vector<DaisyReturn> daisy_returns;
  std::optional<proto::RangeMeasurement> daisy_own;
  std::optional<proto::RangeMeasurement> daisy_peer;
  bool daisy_reported = false;
  proto::OpCounters ops, p3_hot;
  std::mt19937_64 rng;
  std::optional<wire::KeyId> seen_sym_keyid;

  Position pos(SimTime t) const { return spec.motion.at(t); }
};

class Engine {
 public:
  explicit Engine(const Scenario& s) : sc_(s), cfg_(s.params.proto) {}

  Expected<RunOutput> exec() {
    auto errs = validate(sc_);
    if (!errs.empty()) {
      std::string joined;
      for (const auto& e : errs) {
        if (!joined.empty()) joined += "; ";
        joined += e;
      }
      return Error{Errc::ScenarioInvalid, joined};
    }

    cfg_.clock_tolerance_ns =
        proto::resolve_clock_tolerance(max_quantization(), sc_.params.max_clock_bias_ns);
    setup();
    loop();
    finalize();
    return std::move(out_);
  }

 private:
  int64_t max_quantization() const {
    int64_t q = 1;
    for (const auto& n : sc_.nodes) q = std::max(q, n.clock.quantization_ns);
    return q;
  }

  // -- setup -----------------------------------------------------------------

  void setup() {
    const auto& backend = crypto::backend(sc_.params.algo);
    const crypto::KeyPair ca = backend.keypair(expand_seed(sc_.seed, 0xCA));
    policy_.roots = {ca.pub};

    const SimTime cert_to{std::max<int64_t>(sc_.duration.ns, kSecondNs) * 2};
    std::vector<certs::Certificate> chain;

    for (size_t i = 0; i < sc_.nodes.size(); ++i) {
      NodeRt rt;
      rt.spec = sc_.nodes[i];
      rt.clock = ClockModel{rt.spec.clock.bias_ns, rt.spec.clock.drift,
                            rt.spec.clock.quantization_ns};
      rt.keys = backend.keypair(expand_seed(sc_.seed, 0x1000 + i));
      rt.rng.seed(mix64(sc_.seed ^ mix64(0x2000 + i)));
      nodes_.push_back(std::move(rt));
      index_[sc_.nodes[i].id] = i;
    }

    for (size_t i = 0; i < nodes_.size(); ++i) {
      // Attackers are rogue transmitters: no certificate binds their key.
      if (nodes_[i].spec.role == Role::Attacker) continue;
      std::vector<certs::Assertion> as;
      as.push_back(certs::make_delegation_assertion(nodes_[i].keys.pub));
      as.push_back(certs::make_level_assertion(certs::AssertionKind::CryptoSecurityType, 2));
      as.push_back(
          certs::make_level_assertion(certs::AssertionKind::PhysicalSecurityLevel, 2));
      if (nodes_[i].spec.role == Role::Navaid) {
        certs::PositionFunction pf;
        pf.p0 = nodes_[i].spec.motion.p0;
        pf.velocity = nodes_[i].spec.motion.velocity;
        pf.t0 = nodes_[i].spec.motion.t0;
        pf.linear = nodes_[i].spec.motion.moving;
        as.push_back(certs::make_position_assertion(pf));
        as.push_back(certs::make_direction_assertion(nodes_[i].spec.antenna));
        as.push_back(
            certs::make_processing_delay_assertion(nodes_[i].spec.processing_delay_ns));
      }
      chain.push_back(
          certs::issue(ca.priv, nodes_[i].spec.id, std::move(as), SimTime{0}, cert_to));
    }

    // Every honest node resolves every certified key through the chain.
    for (auto& rt : nodes_) {
      if (rt.spec.role == Role::Attacker) continue;
      for (const auto& cert : chain) {
        auto key = certs::resolve_key(cert.subject, chain, policy_, SimTime{0});
        if (key.ok()) {
          rt.known_keys[cert.subject] = *key;
          rt.cert_of[cert.subject] = cert;
        }
      }
    }

    // Key compromise hands an attacker the victim's private key handle.
    for (auto& rt : nodes_) {
      for (const NodeId& victim : rt.spec.caps.key_compromise) {
        rt.stolen[victim] = nodes_[index_.at(victim)].keys.priv;
      }
    }

    // Symmetric keys: either provisioned out-of-band or exchanged on air.
    for (size_t i = 0; i < nodes_.size(); ++i) {
      NodeRt& rt = nodes_[i];
      std::vector<NodeId> targets;
      auto add_target = [&targets](const NodeId& id) {
        if (std::find(targets.begin(), targets.end(), id) == targets.end())
          targets.push_back(id);
      };
      for (const auto& plan : rt.spec.interrogations) {
        if (plan.protocol == 4) add_target(plan.target);
      }
      if (rt.spec.daisy) add_target(rt.spec.daisy->partner);
      SimTime first{INT64_MAX};
      for (const auto& plan : rt.spec.interrogations) first = std::min(first, plan.at);
      if (rt.spec.daisy) first = std::min(first, rt.spec.daisy->at);
      for (const NodeId& t : targets) {
        crypto::SymmetricKey key;
        key.algo = sc_.params.algo;
        key.bytes = draw<32>(rt.rng);
        key.id = draw<8>(rt.rng);
        rt.peer_sym[t] = key;
        rt.sym_keys.push_back(key);
        if (sc_.params.preshared_p4_keys) {
          nodes_[index_.at(t)].sym_keys.push_back(key);
        } else {
          const SimTime at{std::max<int64_t>(0, first.ns - sc_.params.keyex_lead_ns)};
          push(at, i, KeyexEv{t});
        }
      }
    }

    // Protocol timers.
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const NodeSpec& n = nodes_[i].spec;
      if (n.beacon) push(SimTime{n.beacon->offset_ns}, i, BeaconTick{});
      if (n.p3) push(SimTime{n.p3->offset_ns}, i, P3Tick{});
      for (size_t p = 0; p < n.interrogations.size(); ++p)
        push(n.interrogations[p].at, i, InterrogateEv{p});
      if (n.daisy) push(n.daisy->at, i, InterrogateEv{n.interrogations.size()});
      for (const SimTime& ft : n.fix_times) push(ft, i, FixEv{});
      for (size_t k = 0; k < n.caps.spoof_beacons.size(); ++k)
        push(n.caps.spoof_beacons[k].at, i, SpoofBeaconEv{k});
      for (const auto& sp : n.caps.spoof_responses) push(sp.at, i, SpoofResponseEv{});
    }

    out_.trace.header = Json{{"trace_version", 1},
                             {"name", sc_.name},
                             {"seed", sc_.seed},
                             {"duration_ns", sc_.duration.ns},
                             {"crypto", crypto::algo_name(sc_.params.algo)}};
  }

  // -- event plumbing ----------------------------------------------------------

  void push(SimTime t, size_t node, Payload payload) {
    queue_.push(Event{t, seq_++, node, std::move(payload)});
  }

  void loop() {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.t > sc_.duration) continue;
      now_ = ev.t;
      dispatch(ev);
    }
  }

  void dispatch(Event& ev) {
    NodeRt& rt = nodes_[ev.node];
    std::visit(
        [&](auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, DeliverEv>) handle_deliver(rt, p);
          else if constexpr (std::is_same_v<T, EmitEv>) do_emit(rt, p);
          else if constexpr (std::is_same_v<T, BeaconTick>) handle_beacon_tick(rt);
          else if constexpr (std::is_same_v<T, P3Tick>) handle_p3_tick(rt);
          else if constexpr (std::is_same_v<T, P3RevealEv>) handle_p3_reveal(rt, p);
          else if constexpr (std::is_same_v<T, InterrogateEv>) handle_interrogate(rt, p);
          else if constexpr (std::is_same_v<T, KeyexEv>) handle_keyex(rt, p);
          else if constexpr (std::is_same_v<T, KeyInstallEv>) handle_key_install(rt, p);
          else if constexpr (std::is_same_v<T, FixEv>) handle_fix(rt);
          else if constexpr (std::is_same_v<T, TimeoutEv>) handle_timeout(rt, p);
          else if constexpr (std::is_same_v<T, SpoofBeaconEv>) handle_spoof_beacon(rt, p);
          else if constexpr (std::is_same_v<T, SpoofResponseEv>) handle_spoof_response(rt);
        },
        ev.payload);
  }

  bool link_enabled(const NodeRt& from, const NodeRt& to) const {
    const auto pair = std::make_pair(from.spec.id, to.spec.id);
    const auto& ch = sc_.channel;
    if (ch.txsec_excludes_attackers &&
        (from.spec.role == Role::Attacker || to.spec.role == Role::Attacker))
      return false;
    if (ch.default_connected) {
      return std::find(ch.disabled.begin(), ch.disabled.end(), pair) == ch.disabled.end();
    }
    return std::find(ch.enabled.begin(), ch.enabled.end(), pair) != ch.enabled.end();
  }

  bool lost(const NodeRt& from, const NodeRt& to, SimTime at) const {
    for (const auto& w : sc_.channel.loss) {
      if (w.from == from.spec.id && w.to == to.spec.id && at >= w.t0 && at < w.t1) return true;
    }
    return false;
  }

  SimTime delivery_time(const Position& emit_pos, SimTime emit_t, const NodeRt& to) const {
    if (!to.spec.motion.moving) return emit_t + tof_ns(emit_pos, to.spec.motion.p0);
    // fixed point: u <- tof(emitter, receiver(emit + u))
    int64_t u = tof_ns(emit_pos, to.pos(emit_t));
    for (int iter = 0; iter < 32; ++iter) {
      const int64_t next = tof_ns(emit_pos, to.pos(emit_t + u));
      if (std::llabs(next - u) <= 1) {
        u = next;
        break;
      }
      u = next;
    }
    return emit_t + u;
  }

  void emit_now(NodeRt& from, Bytes bytes, std::vector<NodeId> prov,
                std::optional<Position> from_pos, const std::string& attack_kind) {
    const Position src = from_pos.value_or(from.pos(now_));
    auto decoded = wire::decode(bytes);
    const char* tname = decoded.ok() ? wire::type_name(wire::type_of(*decoded)) : "malformed";

    trace({{"e", "emit"},
           {"t", now_.ns},
           {"node", id_str(from.spec.id)},
           {"msg", tname},
           {"size", bytes.size()},
           {"prov", prov_json(prov)}});
    if (!attack_kind.empty()) {
      out_.results.attacks[attack_kind]++;
      trace({{"e", "attack"},
             {"t", now_.ns},
             {"node", id_str(from.spec.id)},
             {"kind", attack_kind}});
    }

    for (size_t j = 0; j < nodes_.size(); ++j) {
      NodeRt& to = nodes_[j];
      if (to.spec.id == from.spec.id) continue;
      if (!link_enabled(from, to)) continue;
      const SimTime at = delivery_time(src, now_, to);
      if (lost(from, to, at)) {
        trace({{"e", "drop"},
               {"t", at.ns},
               {"node", id_str(to.spec.id)},
               {"from", id_str(from.spec.id)},
               {"reason", "loss"}});
        continue;
      }
      push(at, j, DeliverEv{bytes, prov, from.spec.id, now_, src});
    }
  }

  void do_emit(NodeRt& rt, EmitEv& e) {
    emit_now(rt, std::move(e.bytes), std::move(e.prov), e.from_pos, e.attack_kind);
  }

  // Deferred emission helper: the bytes leave this node at t.
  void emit_at(SimTime t, NodeRt& from, Bytes bytes, std::vector<NodeId> prov,
               std::string attack_kind = {}, std::optional<Position> pos = {}) {
    push(t, index_.at(from.spec.id),
         EmitEv{std::move(bytes), std::move(prov), pos, std::move(attack_kind)});
  }

  // -- honest node behaviors ---------------------------------------------------

  void handle_beacon_tick(NodeRt& rt) {
    const SimTime t_emit = now_ + cfg_.sign_latency_ns;
    const SimTime stamped = rt.clock.read(t_emit);
    const wire::Beacon b =
        proto::p1_emit(rt.spec.id, rt.pos(t_emit), rt.spec.antenna.at(t_emit), stamped,
                       rt.keys.priv, rt.ops);
    emit_at(t_emit, rt, wire::encode(wire::Message{b}), {rt.spec.id});
    const SimTime next = now_ + rt.spec.beacon->interval_ns;
    if (next <= sc_.duration) push(next, index_.at(rt.spec.id), BeaconTick{});
  }

  void handle_p3_tick(NodeRt& rt) {
    const SimTime t1_emit = now_ + cfg_.sign_latency_ns;
    const SimTime t2_emit = t1_emit + rt.spec.p3->reveal_gap_ns;
    const wire::Nonce32 r = draw<32>(rt.rng);
    const SimTime t2_stamp = rt.clock.read(t2_emit);
    const wire::Commit c = proto::p3_emit_commit(rt.spec.id, r, rt.clock.read(t1_emit),
                                                 t2_stamp, rt.keys.priv, rt.ops);
    emit_at(t1_emit, rt, wire::encode(wire::Message{c}), {rt.spec.id});
    push(t2_emit, index_.at(rt.spec.id), P3RevealEv{r, t2_stamp});
    const SimTime next = now_ + rt.spec.p3->interval_ns;
    if (next <= sc_.duration) push(next, index_.at(rt.spec.id), P3Tick{});
  }

  void handle_p3_reveal(NodeRt& rt, const P3RevealEv& ev) {
    const wire::Reveal rv = proto::p3_emit_reveal(rt.spec.id, ev.r, ev.t2);
    emit_now(rt, wire::encode(wire::Message{rv}), {rt.spec.id}, {}, {});
  }

  void handle_keyex(NodeRt& rt, const KeyexEv& ev) {
    auto key_it = rt.peer_sym.find(ev.target);
    auto peer_key = rt.known_keys.find(ev.target);
    if (key_it == rt.peer_sym.end() || peer_key == rt.known_keys.end()) return;

    wire::KeyExchange kx;
    kx.client = rt.spec.id;
    kx.t = rt.clock.read(now_);
    kx.key_id = key_it->second.id;
    kx.key = key_it->second.bytes;
    rt.ops.sign++;
    kx.sig = crypto::backend(rt.keys.priv.algo)
                 .sign(rt.keys.priv, wire::signed_prefix(wire::Message{kx}))
                 .bytes;
    const wire::PkEnvelope env =
        proto::seal_pk(peer_key->second, draw<32>(rt.rng), wire::Message{kx}, rt.ops);
    const SimTime t_emit = now_ + cfg_.sign_latency_ns + cfg_.pk_latency_ns;
    emit_at(t_emit, rt, wire::encode(wire::Message{env}), {rt.spec.id});
    trace({{"e", "keyex"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"peer", id_str(ev.target)}});
  }

  void handle_key_install(NodeRt& rt, const KeyInstallEv& ev) {
    rt.sym_keys.push_back(ev.key);
  }

  void handle_interrogate(NodeRt& rt, const InterrogateEv& ev) {
    InterrogationPlan plan;
    bool is_daisy = false;
    if (ev.plan < rt.spec.interrogations.size()) {
      plan = rt.spec.interrogations[ev.plan];
    } else if (rt.spec.daisy) {
      plan.at = rt.spec.daisy->at;
      plan.target = rt.spec.daisy->partner;
      plan.protocol = 4;
      is_daisy = true;
    } else {
      return;
    }

    const size_t target_idx = index_.at(plan.target);
    int64_t certified_delay = nodes_[target_idx].spec.processing_delay_ns;
    if (auto it = rt.cert_of.find(plan.target); it != rt.cert_of.end()) {
      certified_delay = it->second.processing_delay_ns().value_or(certified_delay);
    }

    const wire::Nonce32 r_c = draw<32>(rt.rng);
    SessionCtx ctx;
    ctx.target = plan.target;
    ctx.protocol = plan.protocol;
    ctx.daisy = is_daisy;
    ctx.timing_angle = plan.timing_angle;

    if (plan.protocol == 4) {
      auto key_it = rt.peer_sym.find(plan.target);
      if (key_it == rt.peer_sym.end()) return;
      const SimTime t_emit = now_ + cfg_.sym_latency_ns;
      auto inter = proto::p4_interrogate(key_it->second, r_c, draw<12>(rt.rng),
                                         rt.clock.read(t_emit), certified_delay, rt.ops);
      ctx.session = inter.session;
      ctx.tx_true = t_emit;
      ctx.true_range_at_tx = distance(rt.pos(t_emit), nodes_[target_idx].pos(t_emit));
      rt.sessions[r_c] = ctx;
      rt.session_order.push_back(r_c);
      emit_at(t_emit, rt, wire::encode(inter.msg), {rt.spec.id});
      push(t_emit + cfg_.response_timeout_ns, index_.at(rt.spec.id), TimeoutEv{r_c});
    } else {
      auto inter = proto::p5_interrogate(r_c, rt.clock.read(now_), certified_delay);
      ctx.session = inter.session;
      ctx.tx_true = now_;
      ctx.true_range_at_tx = distance(rt.pos(now_), nodes_[target_idx].pos(now_));
      rt.sessions[r_c] = ctx;
      rt.session_order.push_back(r_c);
      emit_now(rt, wire::encode(inter.msg), {rt.spec.id}, {}, {});
      push(now_ + cfg_.response_timeout_ns, index_.at(rt.spec.id), TimeoutEv{r_c});
    }
  }

  void handle_timeout(NodeRt& rt, const TimeoutEv& ev) {
    auto it = rt.sessions.find(ev.r_c);
    if (it == rt.sessions.end()) return;
    if (it->second.session.state == proto::SessionState::Sent) {
      it->second.session.state = proto::SessionState::Failed;
      reject(rt, "p4_complete", Errc::Timeout);
    }
  }

  void handle_fix(NodeRt& rt) {
    // Latest usable observation per navaid: max signed t, earliest arrival
    // among duplicates of the same t (replays only ever arrive later).
    std::map<NodeId, proto::BeaconObservation> latest;
    for (size_t i = 0; i < rt.observations.size(); ++i) {
      if (rt.obs_usable_at[i] > now_) continue;
      const auto& o = rt.observations[i];
      auto it = latest.find(o.navaid);
      if (it == latest.end() || o.t > it->second.t ||
          (o.t == it->second.t && o.rx < it->second.rx)) {
        latest[o.navaid] = o;
      }
    }
    std::vector<proto::BeaconObservation> obs;
    obs.reserve(latest.size());
    for (const auto& [id, o] : latest) obs.push_back(o);

    std::map<NodeId, proto::TimingSample> latest_p3;
    for (const auto& s : rt.p3_samples) {
      auto it = latest_p3.find(s.navaid);
      if (it == latest_p3.end() || s.t2 > it->second.t2) latest_p3[s.navaid] = s;
    }
    std::vector<proto::TimingSample> samples;
    std::map<NodeId, Position> certified;
    for (const auto& [id, s] : latest_p3) {
      samples.push_back(s);
      if (auto it = rt.cert_of.find(id); it != rt.cert_of.end()) {
        auto p = certs::navaid_position_at(it->second, s.t2);
        if (p.ok()) certified[id] = *p;
      }
    }

    auto set = proto::combine_p1_p2(obs, samples, certified, rt.clock.quantization_ns);
    int64_t nav_q = 0;
    for (const auto& e : set.entries) {
      const auto idx = index_.find(e.id);
      if (idx != index_.end())
        nav_q = std::max(nav_q, nodes_[idx->second].spec.clock.quantization_ns);
    }
    set.extra_slack_ns = std::max<int64_t>(0, nav_q - rt.clock.quantization_ns);

    FixRecord rec;
    rec.client = rt.spec.id;
    rec.at = now_;
    rec.true_position = rt.pos(now_);
    rec.entries = static_cast<int>(set.entries.size());

    const auto violations = solver::pairwise_timestamp_check(set);
    rec.pairwise_violations = violations.size();
    if (!violations.empty()) {
      for (const auto& e : set.entries) {
        size_t involving = 0;
        bool all = true;
        for (const auto& v : violations) {
          if (v.a == e.id || v.b == e.id) ++involving;
          else all = false;
        }
        if (all && involving == set.entries.size() - 1) {
          rec.pairwise_accused = e.id;
          break;
        }
      }
    }

    auto fix = solver::solve_fix(set, sc_.params.solver);
    Json j{{"e", "fix"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"entries", rec.entries}};
    if (fix.ok()) {
      rec.solved = true;
      rec.fix = *fix;
      rec.consistency = solver::geometry_consistency(set, *fix, sc_.params.solver);
      rec.error_m = distance(fix->position, rec.true_position);
      j["verdict"] = solver::verdict_name(fix->verdict);
      j["consistency"] = solver::verdict_name(rec.consistency);
      j["x"] = fix->position.x;
      j["y"] = fix->position.y;
      j["z"] = fix->position.z;
      j["bias_ns"] = fix->bias_ns;
      j["residual_m"] = fix->residual_rms_m;
      j["error_m"] = rec.error_m;
      if (fix->meacon) {
        j["accused"] = id_str(fix->meacon->navaid);
        j["delay_ns"] = fix->meacon->delay_ns;
      }
    } else {
      rec.solved = false;
      rec.error = fix.code();
      j["error"] = errc_name(fix.code());
    }
    j["pairwise_violations"] = rec.pairwise_violations;
    if (rec.pairwise_accused) j["pairwise_accused"] = id_str(*rec.pairwise_accused);
    j["true"] = Json::array({rec.true_position.x, rec.true_position.y, rec.true_position.z});
    trace(std::move(j));
    out_.results.fixes.push_back(std::move(rec));
  }

  // -- attackers -----------------------------------------------------------------

  void handle_spoof_beacon(NodeRt& rt, const SpoofBeaconEv& ev) {
    const auto& spec = rt.spec.caps.spoof_beacons[ev.index];
    wire::Beacon b;
    b.p = spec.p;
    b.d = spec.d;
    b.t = spec.timestamp;
    b.i = spec.claim;
    if (auto it = rt.stolen.find(spec.claim); it != rt.stolen.end()) {
      b.sig = crypto::backend(it->second.algo)
                  .sign(it->second, wire::signed_prefix(wire::Message{b}))
                  .bytes;
    } else {
      Bytes garbage(64);
      for (auto& c : garbage) c = static_cast<uint8_t>(rt.rng());
      b.sig = std::move(garbage);
    }
    emit_now(rt, wire::encode(wire::Message{b}), {rt.spec.id}, {}, "spoof_beacon");
  }

  void handle_spoof_response(NodeRt& rt) {
    wire::SymEnvelope env;
    env.algo = static_cast<uint8_t>(sc_.params.algo);
    env.key_id = rt.seen_sym_keyid.value_or(draw<8>(rt.rng));
    env.nonce = draw<12>(rt.rng);
    env.ct.resize(64 + 16);
    for (auto& c : env.ct) c = static_cast<uint8_t>(rt.rng());
    emit_now(rt, wire::encode(wire::Message{env}), {rt.spec.id}, {}, "spoof_response");
  }

  void handle_attacker_deliver(NodeRt& rt, const DeliverEv& ev) {
    // Attackers never reprocess their own emissions.
    if (std::find(ev.prov.begin(), ev.prov.end(), rt.spec.id) != ev.prov.end()) return;

    if (auto decoded = wire::decode(ev.bytes); decoded.ok()) {
      if (const auto* env = std::get_if<wire::SymEnvelope>(&*decoded))
        rt.seen_sym_keyid = env->key_id;
    }

    const auto& caps = rt.spec.caps;
    std::vector<NodeId> prov = ev.prov;
    prov.push_back(rt.spec.id);

    if (caps.delay_meacon) {
      const auto& m = *caps.delay_meacon;
      const bool from_ok = !m.only_from || *m.only_from == ev.emitter;
      if (from_ok && now_ >= m.window_start && now_ <= m.window_end) {
        emit_at(now_ + m.delta_ns, rt, ev.bytes, prov, "delay_meacon");
      }
    }
    if (caps.bent_pipe) {
      emit_at(now_ + caps.bent_pipe->pipe_delay_ns, rt, ev.bytes, prov, "bent_pipe",
              caps.bent_pipe->emit_from);
    }
    if (caps.replay) {
      const auto& r = *caps.replay;
      const bool from_ok = !r.only_from || *r.only_from == ev.emitter;
      if (from_ok && now_ >= r.window_start && now_ <= r.window_end) {
        emit_at(now_ + r.replay_after_ns, rt, ev.bytes, prov, "replay");
      }
    }
  }

  // -- honest message handling ---------------------------------------------------

  bool fabricated_without_key(const std::vector<NodeId>& prov, const NodeId& claimed) const {
    if (prov.empty()) return false;
    const auto it = index_.find(prov.front());
    if (it == index_.end()) return false;
    const NodeRt& origin = nodes_[it->second];
    if (origin.spec.role != Role::Attacker) return false;
    return origin.stolen.find(claimed) == origin.stolen.end();
  }

  bool attacker_relayed(const std::vector<NodeId>& prov) const {
    for (const NodeId& id : prov) {
      const auto it = index_.find(id);
      if (it != index_.end() && nodes_[it->second].spec.role == Role::Attacker) return true;
    }
    return false;
  }

  void accept(NodeRt& rt, const char* op) {
    out_.results.accepts[op]++;
    trace({{"e", "accept"}, {"t", now_.ns}, {"node", id_str(rt.spec.id)}, {"op", op}});
  }

  void reject(NodeRt& rt, const char* op, Errc code) {
    out_.results.rejects[std::string(op) + "/" + errc_name(code)]++;
    trace({{"e", "reject"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"op", op},
           {"err", errc_name(code)}});
  }

  void handle_deliver(NodeRt& rt, const DeliverEv& ev) {
    if (rt.spec.role == Role::Attacker) {
      handle_attacker_deliver(rt, ev);
      return;
    }

    auto decoded = wire::decode(ev.bytes);
    if (!decoded.ok()) {
      reject(rt, "decode", decoded.code());
      return;
    }
    trace({{"e", "deliver"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"from", id_str(ev.emitter)},
           {"msg", wire::type_name(wire::type_of(*decoded))}});

    if (const auto* b = std::get_if<wire::Beacon>(&*decoded)) {
      handle_beacon(rt, *b, ev);
    } else if (const auto* c = std::get_if<wire::Commit>(&*decoded)) {
      handle_commit(rt, *c, ev);
    } else if (const auto* rv = std::get_if<wire::Reveal>(&*decoded)) {
      handle_reveal(rt, *rv, ev);
    } else if (const auto* q = std::get_if<wire::Interrogate>(&*decoded)) {
      handle_plain_interrogation(rt, *q, ev);
    } else if (const auto* resp = std::get_if<wire::Respond>(&*decoded)) {
      handle_plain_response(rt, *resp);
    } else if (const auto* env = std::get_if<wire::SymEnvelope>(&*decoded)) {
      handle_sym_envelope(rt, *env, ev);
    } else if (const auto* penv = std::get_if<wire::PkEnvelope>(&*decoded)) {
      handle_pk_envelope(rt, *penv, ev);
    }
  }

  void handle_beacon(NodeRt& rt, const wire::Beacon& b, const DeliverEv& ev) {
    if (!rt.spec.observe) return;
    auto key = rt.known_keys.find(b.i);
    if (key == rt.known_keys.end()) {
      reject(rt, "p1_accept", Errc::NoTrustPath);
      return;
    }
    auto obs = proto::p1_accept(b, key->second, rt.clock.read(now_), cfg_, rt.ops);
    if (!obs.ok()) {
      reject(rt, "p1_accept", obs.code());
      return;
    }
    if (fabricated_without_key(ev.prov, b.i)) out_.results.forged_content_accepted = true;
    if (attacker_relayed(ev.prov)) out_.results.attacker_relayed_accepts++;
    rt.observations.push_back(*obs);
    rt.obs_usable_at.push_back(now_ + cfg_.verify_latency_ns);
    accept(rt, "p1_accept");
  }

  void handle_commit(NodeRt& rt, const wire::Commit& c, const DeliverEv& ev) {
    if (!rt.spec.observe) return;
    auto key = rt.known_keys.find(c.i);
    if (key == rt.known_keys.end()) {
      reject(rt, "p3_commit", Errc::NoTrustPath);
      return;
    }
    auto ok = rt.commits.accept_commit(c, key->second, rt.clock.read(now_), cfg_, rt.ops);
    if (!ok.ok()) {
      reject(rt, "p3_commit", ok.code());
      return;
    }
    if (fabricated_without_key(ev.prov, c.i)) out_.results.forged_content_accepted = true;
    accept(rt, "p3_commit");
  }

  void handle_reveal(NodeRt& rt, const wire::Reveal& rv, const DeliverEv& ev) {
    if (!rt.spec.observe) return;
    auto sample = rt.commits.accept_reveal(rv, rt.clock.read(now_),
                                           crypto::backend(sc_.params.algo), rt.p3_hot);
    if (!sample.ok()) {
      reject(rt, "p3_reveal", sample.code());
      return;
    }
    if (fabricated_without_key(ev.prov, sample->navaid))
      out_.results.forged_content_accepted = true;
    if (attacker_relayed(ev.prov)) out_.results.attacker_relayed_accepts++;
    rt.p3_samples.push_back(*sample);
    accept(rt, "p3_reveal");
  }

  // P5 interrogation, cleartext.
  void handle_plain_interrogation(NodeRt& rt, const wire::Interrogate& q,
                                  const DeliverEv& ev) {
    if (!rt.spec.p5_responder) return;
    const wire::Nonce32 r_n = draw<32>(rt.rng);
    auto resp = proto::p5_respond(q, rt.nonces, rt.clock.read(now_), r_n, cfg_);
    if (!resp.has_value()) {
      trace({{"e", "drop"},
             {"t", now_.ns},
             {"node", id_str(rt.spec.id)},
             {"from", id_str(ev.emitter)},
             {"reason", "p5_respond"}});
      return;
    }
    const SimTime t_resp = now_ + rt.spec.processing_delay_ns;
    emit_at(t_resp, rt, wire::encode(wire::Message{*resp}), {rt.spec.id});

    // The authenticated statement follows once signed; the interrogation is
    // anonymous, so it is encrypted to every certified client key.
    proto::RangingSession view;
    view.r_c = q.r_c;
    view.r_n = r_n;
    view.t = q.t;
    const Direction d = rt.spec.report_arrival_direction ? measured_arrival_direction(rt, ev)
                                                         : rt.spec.antenna.at(t_resp);
    const wire::Auth auth =
        proto::p5_make_auth(rt.spec.id, rt.pos(t_resp), d, view, rt.keys.priv, rt.ops);
    const SimTime t_auth = t_resp + cfg_.sign_latency_ns + cfg_.pk_latency_ns;
    for (const auto& [peer, key] : rt.known_keys) {
      const auto idx = index_.find(peer);
      if (idx == index_.end() || nodes_[idx->second].spec.role != Role::Client) continue;
      const wire::PkEnvelope env =
          proto::seal_pk(key, draw<32>(rt.rng), wire::Message{auth}, rt.ops);
      emit_at(t_auth, rt, wire::encode(wire::Message{env}), {rt.spec.id});
    }
  }

  Direction measured_arrival_direction(const NodeRt& rt, const DeliverEv& ev) const {
    const Position diff = ev.emit_pos - rt.pos(now_);
    const double az = std::atan2(diff.y, diff.x);
    const double el = std::asin(diff.z / std::max(norm(diff), 1e-9));
    return Direction::normalized(az, el);
  }

  // P5 response, cleartext.
  void handle_plain_response(NodeRt& rt, const wire::Respond& resp) {
    auto it = rt.sessions.find(resp.r_c);
    if (it == rt.sessions.end()) return;
    SessionCtx& ctx = it->second;
    if (ctx.session.state != proto::SessionState::Sent) return;  // duplicate delivery
    auto range = proto::p4_complete(ctx.session, resp, rt.clock.read(now_), rt.ops);
    if (!range.ok()) {
      reject(rt, "p5_complete", range.code());
      return;
    }
    ctx.rx_true = now_;
    accept(rt, "p5_complete");
    trace_session(rt, ctx);
  }

  void handle_sym_envelope(NodeRt& rt, const wire::SymEnvelope& env, const DeliverEv& ev) {
    // Responder path first: a fresh interrogation under a valid key.
    if (rt.spec.p4_responder || rt.spec.daisy_respond) {
      const wire::Nonce32 r_n = draw<32>(rt.rng);
      proto::OpCounters probe_ops;
      auto reply = proto::p4_respond(env, rt.sym_keys, rt.nonces, rt.clock.read(now_), r_n,
                                     draw<12>(rt.rng), cfg_, probe_ops);
      rt.ops.sym += probe_ops.sym;
      if (reply.has_value()) {
        const SimTime t_resp = now_ + rt.spec.processing_delay_ns;
        emit_at(t_resp, rt, wire::encode(wire::Message{*reply}), {rt.spec.id});
        if (rt.spec.daisy_respond) {
          DaisyReturn ret;
          ret.partner = ev.emitter;  // bookkeeping only; the key proves identity
          ret.expect_rc = r_n;
          ret.tx_local = rt.clock.read(t_resp);
          ret.peer_delay_ns = peer_certified_delay(rt, ev.emitter);
          rt.daisy_returns.push_back(ret);
        }
        return;
      }
    }

    // Client path: a response or an enveloped range report.
    proto::OpCounters open_ops;
    auto inner = proto::open_sym(env, rt.sym_keys, open_ops);
    rt.ops.sym += open_ops.sym;
    if (!inner.ok()) {
      if (rt.spec.role == Role::Client || rt.spec.daisy_respond)
        reject(rt, "open_sym", inner.code());
      return;
    }
    if (const auto* resp = std::get_if<wire::Respond>(&*inner)) {
      if (handle_daisy_return(rt, *resp)) return;
      auto it = rt.sessions.find(resp->r_c);
      if (it == rt.sessions.end()) {
        reject(rt, "p4_complete", Errc::NonceMismatch);
        return;
      }
      SessionCtx& ctx = it->second;
      if (ctx.session.state != proto::SessionState::Sent) return;  // duplicate delivery
      auto range = proto::p4_complete(ctx.session, *resp, rt.clock.read(now_), rt.ops);
      if (!range.ok()) {
        reject(rt, "p4_complete", range.code());
        return;
      }
      ctx.rx_true = now_;
      accept(rt, "p4_complete");
      trace_session(rt, ctx);
      if (ctx.daisy) daisy_client_continue(rt, ctx, *resp);
    } else if (const auto* rep = std::get_if<wire::RangeReport>(&*inner)) {
      handle_range_report(rt, *rep, ev);
    }
  }

  int64_t peer_certified_delay(const NodeRt& rt, const NodeId& peer) const {
    if (auto it = rt.cert_of.find(peer); it != rt.cert_of.end()) {
      if (auto d = it->second.processing_delay_ns()) return *d;
    }
    const auto idx = index_.find(peer);
    return idx != index_.end() ? nodes_[idx->second].spec.processing_delay_ns : 0;
  }

  // The responder's completion of the reciprocal daisy leg: a Respond whose
  // r_c equals the r_n we sent back in our own response.
  bool handle_daisy_return(NodeRt& rt, const wire::Respond& resp) {
    for (size_t i = 0; i < rt.daisy_returns.size(); ++i) {
      if (rt.daisy_returns[i].expect_rc != resp.r_c) continue;
      const DaisyReturn ret = rt.daisy_returns[i];
      rt.daisy_returns.erase(rt.daisy_returns.begin() + static_cast<long>(i));
      const SimTime rx_local = rt.clock.read(now_);
      const double rtt_ns = static_cast<double>(rx_local - ret.tx_local);
      const double range =
          kMetersPerNs * (rtt_ns - static_cast<double>(ret.peer_delay_ns)) / 2.0;
      rt.daisy_own = proto::RangeMeasurement{range, rx_local, rt.spec.id};
      accept(rt, "daisy_leg");
      send_range_report(rt, ret.partner, range, rx_local);
      maybe_finish_daisy(rt);
      return true;
    }
    return false;
  }

  // Client continues the chain: answers the responder's implicit
  // interrogation (its r_n) and reports its own measured range.
  void daisy_client_continue(NodeRt& rt, SessionCtx& ctx, const wire::Respond& resp) {
    auto key_it = rt.peer_sym.find(ctx.target);
    if (key_it == rt.peer_sym.end()) return;
    wire::Respond ret;
    ret.r_c = resp.r_n;
    ret.r_n = draw<32>(rt.rng);
    const SimTime t_resp = now_ + rt.spec.processing_delay_ns;
    const wire::SymEnvelope env =
        proto::seal_sym(key_it->second, draw<12>(rt.rng), wire::Message{ret}, rt.ops);
    emit_at(t_resp, rt, wire::encode(wire::Message{env}), {rt.spec.id});

    rt.daisy_own =
        proto::RangeMeasurement{ctx.session.range_m, ctx.session.rx_local, rt.spec.id};
    send_range_report(rt, ctx.target, ctx.session.range_m, ctx.session.rx_local);
    maybe_finish_daisy(rt);
  }

  void send_range_report(NodeRt& rt, const NodeId& partner, double range_m, SimTime t_local) {
    const crypto::SymmetricKey* key = nullptr;
    if (auto key_it = rt.peer_sym.find(partner); key_it != rt.peer_sym.end()) {
      key = &key_it->second;
    } else if (!rt.sym_keys.empty()) {
      key = &rt.sym_keys.back();  // responder side: the partner-provisioned key
    }
    if (key == nullptr) return;

    wire::RangeReport rep;
    rep.range_m = range_m;
    rep.t = t_local;
    rep.i = rt.spec.id;
    rt.ops.sign++;
    rep.sig = crypto::backend(rt.keys.priv.algo)
                  .sign(rt.keys.priv, wire::signed_prefix(wire::Message{rep}))
                  .bytes;
    const wire::SymEnvelope env =
        proto::seal_sym(*key, draw<12>(rt.rng), wire::Message{rep}, rt.ops);
    emit_at(now_ + cfg_.sign_latency_ns, rt, wire::encode(wire::Message{env}), {rt.spec.id});
  }

  void handle_range_report(NodeRt& rt, const wire::RangeReport& rep, const DeliverEv& ev) {
    auto key = rt.known_keys.find(rep.i);
    if (key == rt.known_keys.end()) {
      reject(rt, "range_report", Errc::NoTrustPath);
      return;
    }
    rt.ops.verify++;
    const crypto::Signature sig{key->second.algo, rep.sig};
    if (!crypto::backend(key->second.algo)
             .verify(key->second, wire::signed_prefix(wire::Message{rep}), sig)) {
      reject(rt, "range_report", Errc::BadSignature);
      return;
    }
    if (fabricated_without_key(ev.prov, rep.i)) out_.results.forged_content_accepted = true;
    accept(rt, "range_report");
    rt.daisy_peer = proto::RangeMeasurement{rep.range_m, rep.t, rep.i};
    maybe_finish_daisy(rt);
  }

  void maybe_finish_daisy(NodeRt& rt) {
    if (rt.daisy_reported || !rt.daisy_own || !rt.daisy_peer) return;
    rt.daisy_reported = true;
    const proto::DaisyResult res =
        proto::combine_daisy_chain(*rt.daisy_own, *rt.daisy_peer, cfg_);
    DaisyRecord rec;
    rec.reporter = rt.spec.id;
    rec.partner = rt.daisy_peer->reporter;
    rec.own_range_m = rt.daisy_own->range_m;
    rec.peer_range_m = rt.daisy_peer->range_m;
    rec.result = res;
    out_.results.daisy.push_back(rec);
    trace({{"e", "daisy"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"partner", id_str(rec.partner)},
           {"own_m", rec.own_range_m},
           {"peer_m", rec.peer_range_m},
           {"delta_m", res.delta_m},
           {"bound_m", res.bound_m},
           {"verdict", res.verdict == proto::DaisyVerdict::CLEAN ? "CLEAN"
                                                                 : "MEACONING_SUSPECTED"}});
  }

  void handle_pk_envelope(NodeRt& rt, const wire::PkEnvelope& env, const DeliverEv& ev) {
    if (env.recipient != crypto::key_id_of(rt.keys.pub)) return;
    proto::OpCounters open_ops;
    auto inner = proto::open_pk(env, rt.keys.priv, open_ops);
    rt.ops.pk += open_ops.pk;
    if (!inner.ok()) {
      reject(rt, "open_pk", inner.code());
      return;
    }
    if (const auto* kx = std::get_if<wire::KeyExchange>(&*inner)) {
      handle_keyex_message(rt, *kx);
    } else if (const auto* auth = std::get_if<wire::Auth>(&*inner)) {
      handle_auth(rt, *auth, ev);
    }
  }

  void handle_keyex_message(NodeRt& rt, const wire::KeyExchange& kx) {
    auto key = rt.known_keys.find(kx.client);
    if (key == rt.known_keys.end()) {
      reject(rt, "keyex", Errc::NoTrustPath);
      return;
    }
    rt.ops.verify++;
    const crypto::Signature sig{key->second.algo, kx.sig};
    if (!crypto::backend(key->second.algo)
             .verify(key->second, wire::signed_prefix(wire::Message{kx}), sig)) {
      reject(rt, "keyex", Errc::BadSignature);
      return;
    }
    crypto::SymmetricKey sym;
    sym.algo = sc_.params.algo;
    sym.id = kx.key_id;
    sym.bytes = kx.key;
    push(now_ + cfg_.pk_latency_ns + cfg_.verify_latency_ns, index_.at(rt.spec.id),
         KeyInstallEv{sym, kx.client});
    accept(rt, "keyex");
  }

  void handle_auth(NodeRt& rt, const wire::Auth& auth, const DeliverEv& ev) {
    auto it = rt.sessions.find(auth.r_c);
    if (it == rt.sessions.end()) {
      reject(rt, "p5_auth", Errc::NonceMismatch);
      return;
    }
    SessionCtx& ctx = it->second;
    auto key = rt.known_keys.find(auth.i);
    if (key == rt.known_keys.end()) {
      reject(rt, "p5_auth", Errc::NoTrustPath);
      return;
    }
    auto ar = proto::p5_authenticate(ctx.session, auth, key->second, rt.ops);
    if (!ar.ok()) {
      reject(rt, "p5_auth", ar.code());
      return;
    }
    if (fabricated_without_key(ev.prov, auth.i)) out_.results.forged_content_accepted = true;
    ctx.authenticated = true;
    ctx.auth_position = ar->p;
    ctx.auth_rx_true = now_;
    ctx.auth_done_true = now_ + cfg_.pk_latency_ns + cfg_.verify_latency_ns;
    if (ctx.timing_angle) {
      proto::OpCounters extra;
      proto::RangingSession copy = ctx.session;
      copy.state = proto::SessionState::Completed;
      auto pair = proto::combine_timing_angle(copy, auth, key->second, extra);
      if (pair.ok()) ctx.timing_angle_position = pair->implied_position();
    }
    accept(rt, "p5_auth");
    trace({{"e", "auth"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"navaid", id_str(auth.i)},
           {"range_m", ctx.session.range_m}});
  }

  void trace_session(NodeRt& rt, const SessionCtx& ctx) {
    trace({{"e", "session"},
           {"t", now_.ns},
           {"node", id_str(rt.spec.id)},
           {"target", id_str(ctx.target)},
           {"protocol", ctx.protocol},
           {"range_m", ctx.session.range_m},
           {"true_range_m", ctx.true_range_at_tx}});
  }

  // -- wrap-up --------------------------------------------------------------------

  void finalize() {
    for (auto& rt : nodes_) {
      for (const auto& r_c : rt.session_order) {
        const SessionCtx& ctx = rt.sessions.at(r_c);
        SessionRecord rec;
        rec.client = rt.spec.id;
        rec.target = ctx.target;
        rec.protocol = ctx.protocol;
        rec.daisy = ctx.daisy;
        rec.state = ctx.session.state;
        rec.range_m = ctx.session.range_m;
        rec.true_range_at_tx_m = ctx.true_range_at_tx;
        rec.tx_true = ctx.tx_true;
        rec.rx_true = ctx.rx_true;
        rec.authenticated = ctx.authenticated;
        rec.auth_position = ctx.auth_position;
        rec.auth_rx_true = ctx.auth_rx_true;
        rec.auth_done_true = ctx.auth_done_true;
        rec.timing_angle_position = ctx.timing_angle_position;
        out_.results.sessions.push_back(rec);
      }
      if (rt.spec.role == Role::Client) out_.results.p3_hot_ops[rt.spec.id] = rt.p3_hot;
    }

    Json summary;
    summary["e"] = "summary";
    summary["accepts"] = Json(out_.results.accepts);
    summary["rejects"] = Json(out_.results.rejects);
    summary["attacks"] = Json(out_.results.attacks);
    summary["fixes"] = out_.results.fixes.size();
    summary["sessions"] = out_.results.sessions.size();
    summary["forged_content_accepted"] = out_.results.forged_content_accepted;
    out_.trace.summary = std::move(summary);
  }

  void trace(Json j) { out_.trace.events.push_back(std::move(j)); }

  Scenario sc_;
  proto::Config cfg_;
  certs::TrustPolicy policy_;
  std::vector<NodeRt> nodes_;
  std::map<NodeId, size_t> index_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  uint64_t seq_ = 0;
  SimTime now_{0};
  RunOutput out_;
};

}  // namespace

Expected<RunOutput> run(const Scenario& s) {
  Engine engine(s);
  return engine.exec();
}

Expected<RunOutput> run(const Scenario& s, uint64_t seed_override) {
  Scenario copy = s;
  copy.seed = seed_override;
  return run(copy);
}

}  // namespace navsec::sim
