#pragma once

// Deterministic discrete-event radio simulator: nodes with clock models and
// motion, speed-of-light propagation, protocol state machines on honest
// nodes, and the attacker repertoire (delay meaconing, bent-pipe relays,
// verbatim replay, spoofing, key compromise).
//
// The event loop runs on true time; every node sees the world only through
// its own (possibly wrong) clock. Runs are pure functions of
// (scenario, seed): all randomness flows from per-node engines seeded off
// the master seed, and the emitted trace is byte-identical across runs.

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "navsec/certs.hpp"
#include "navsec/protocols.hpp"
#include "navsec/solver.hpp"
#include "navsec/types.hpp"

namespace navsec::sim {

using Json = nlohmann::ordered_json;

struct ClockSpec {
  int64_t bias_ns = 0;
  double drift = 0;
  int64_t quantization_ns = 1;
};

struct Motion {
  Position p0;
  Position velocity;
  SimTime t0;
  bool moving = false;

  Position at(SimTime t) const {
    if (!moving) return p0;
    const double dt_s = static_cast<double>(t - t0) * 1e-9;
    return p0 + velocity * dt_s;
  }
};

enum class Role { Navaid, Client, Attacker };

const char* role_name(Role r);

// ---------------------------------------------------------------------------
// Attacker capabilities

struct DelayMeaconSpec {
  int64_t delta_ns = 0;
  std::optional<NodeId> only_from;  // re-emit only transmissions of this node
  SimTime window_start{0};
  SimTime window_end{INT64_MAX};
};

struct BentPipeSpec {
  int64_t pipe_delay_ns = 0;
  std::optional<Position> emit_from;  // remote transmitter position
};

struct ReplaySpec {
  int64_t replay_after_ns = 0;
  std::optional<NodeId> only_from;
  SimTime window_start{0};
  SimTime window_end{INT64_MAX};
};

struct SpoofBeaconSpec {
  SimTime at;
  NodeId claim;  // navaid id to impersonate
  Position p;
  Direction d;
  SimTime timestamp;  // signed-field value to fabricate
};

struct SpoofResponseSpec {
  SimTime at;  // emits a garbage sym envelope copying the last seen key id
};

struct Capabilities {
  std::optional<DelayMeaconSpec> delay_meacon;
  std::optional<BentPipeSpec> bent_pipe;
  std::optional<ReplaySpec> replay;
  std::vector<SpoofBeaconSpec> spoof_beacons;
  std::vector<SpoofResponseSpec> spoof_responses;
  std::vector<NodeId> key_compromise;

  bool any() const {
    return delay_meacon || bent_pipe || replay || !spoof_beacons.empty() ||
           !spoof_responses.empty() || !key_compromise.empty();
  }
};

// ---------------------------------------------------------------------------
// Node protocol assignments

struct BeaconPlan {
  int64_t interval_ns = 10 * kMillisecondNs;
  int64_t offset_ns = 0;
};

struct P3Plan {
  int64_t interval_ns = 20 * kMillisecondNs;
  int64_t offset_ns = 0;
  int64_t reveal_gap_ns = 2 * kMillisecondNs;  // t2 - t1
};

struct InterrogationPlan {
  SimTime at;
  NodeId target;
  int protocol = 4;  // 4 or 5
  bool timing_angle = false;
};

struct DaisyPlan {
  NodeId partner;
  SimTime at;
};

struct NodeSpec {
  NodeId id;
  Role role = Role::Navaid;
  Motion motion;
  ClockSpec clock;

  // navaid side
  std::optional<BeaconPlan> beacon;
  std::optional<P3Plan> p3;
  bool p4_responder = false;
  bool p5_responder = false;
  bool report_arrival_direction = false;  // timing+angle combiner
  bool daisy_respond = false;
  int64_t processing_delay_ns = 1 * kMicrosecondNs;
  certs::DirectionSchedule antenna;

  // client side
  bool observe = false;
  std::vector<SimTime> fix_times;
  std::vector<InterrogationPlan> interrogations;
  std::optional<DaisyPlan> daisy;

  // attacker side
  Capabilities caps;
};

// ---------------------------------------------------------------------------
// Channel

struct LossWindow {
  NodeId from, to;
  SimTime t0{0}, t1{INT64_MAX};
};

struct ChannelSpec {
  bool default_connected = true;
  std::vector<std::pair<NodeId, NodeId>> disabled;  // directed from -> to
  std::vector<std::pair<NodeId, NodeId>> enabled;   // used when default off
  std::vector<LossWindow> loss;
  // Transmission security: attackers can neither receive honest
  // transmissions nor deliver their own.
  bool txsec_excludes_attackers = false;
};

struct Params {
  proto::Config proto;
  solver::SolverConfig solver;
  crypto::Algo algo = crypto::Algo::Test;
  int64_t max_clock_bias_ns = 0;
  bool preshared_p4_keys = false;  // skip the on-air key exchange
  int64_t keyex_lead_ns = 12 * kMillisecondNs;
};

struct Scenario {
  std::string name = "scenario";
  uint64_t seed = 0;
  SimTime duration{100 * kMillisecondNs};
  Params params;
  std::vector<NodeSpec> nodes;
  ChannelSpec channel;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Results

struct FixRecord {
  NodeId client;
  SimTime at;
  bool solved = false;
  Errc error = Errc::ScenarioInvalid;  // meaningful when !solved
  solver::PositionFix fix;
  size_t pairwise_violations = 0;
  std::optional<NodeId> pairwise_accused;
  solver::Verdict consistency = solver::Verdict::CLEAN;
  Position true_position;
  double error_m = -1;
  int entries = 0;
};

struct SessionRecord {
  NodeId client, target;
  int protocol = 4;
  bool daisy = false;
  proto::SessionState state = proto::SessionState::Sent;
  double range_m = -1;
  double true_range_at_tx_m = -1;
  SimTime tx_true, rx_true;
  bool authenticated = false;
  Position auth_position;  // navaid's signed position (P5)
  SimTime auth_rx_true;    // authentication message arrival (true time)
  SimTime auth_done_true;  // decryption + verification finished
  std::optional<Position> timing_angle_position;
};

struct DaisyRecord {
  NodeId reporter, partner;
  double own_range_m = 0, peer_range_m = 0;
  proto::DaisyResult result;
};

struct Results {
  std::vector<FixRecord> fixes;
  std::vector<SessionRecord> sessions;
  std::vector<DaisyRecord> daisy;
  std::map<std::string, int> accepts;     // op -> count
  std::map<std::string, int> rejects;     // "op/Errc" -> count
  std::map<std::string, int> attacks;     // attack kind -> emission count
  // Accepted content-authenticated observation whose origin was an attacker
  // fabrication without a compromised key. Must stay false.
  bool forged_content_accepted = false;
  // Accepted observations that travelled through an attacker (authentic
  // content, manipulated timing or position): replay/meacon reach.
  int attacker_relayed_accepts = 0;
  // P3 reveal-path crypto work per client (must stay free of asymmetric ops).
  std::map<NodeId, proto::OpCounters> p3_hot_ops;
};

struct Trace {
  Json header;
  std::vector<Json> events;
  Json summary;

  std::string to_jsonl() const;
};

struct RunOutput {
  Trace trace;
  Results results;
};

std::vector<std::string> validate(const Scenario& s);

Expected<RunOutput> run(const Scenario& s);
Expected<RunOutput> run(const Scenario& s, uint64_t seed_override);

// Closed-form delivery time for a receiver on linear motion; the event loop
// uses fixed-point iteration and is checked against this in tests.
SimTime delivery_time_closed_form(const Position& emit_pos, SimTime emit_t,
                                  const Motion& receiver);

}  // namespace navsec::sim
