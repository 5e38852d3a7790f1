#include <fstream>
#include <sstream>

#include "navsec/cli.hpp"

namespace navsec::cli {

namespace {

Error invalid(const std::string& why) { return Error{Errc::ScenarioInvalid, why}; }

Expected<NodeId> parse_id(const Json& j, const char* field) {
  if (!j.is_string()) return invalid(std::string(field) + " must be a string label");
  auto id = NodeId::from_label(j.get<std::string>());
  if (!id) return invalid(std::string(field) + ": bad node label '" + j.get<std::string>() + "'");
  return *id;
}

Expected<Position> parse_position(const Json& j, const char* field) {
  if (!j.is_array() || j.size() != 3)
    return invalid(std::string(field) + " must be [x, y, z]");
  return Position{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json position_json(const Position& p) { return Json::array({p.x, p.y, p.z}); }

template <typename T>
void opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Expected<ScenarioFile> parse_scenario(const Json& j) {
  if (!j.is_object()) return invalid("scenario must be a JSON object");
  if (j.contains("schema_version") && j["schema_version"].get<int>() != kSchemaVersion)
    return invalid("unsupported schema_version");

  ScenarioFile f;
  sim::Scenario& s = f.scenario;
  opt(j, "name", s.name);
  opt(j, "seed", s.seed);
  if (j.contains("duration_ns")) s.duration = SimTime{j["duration_ns"].get<int64_t>()};

  if (j.contains("params")) {
    const Json& p = j["params"];
    if (p.contains("crypto")) {
      const std::string algo = p["crypto"].get<std::string>();
      if (algo == "real") s.params.algo = crypto::Algo::Real;
      else if (algo == "test") s.params.algo = crypto::Algo::Test;
      else return invalid("params.crypto must be 'real' or 'test'");
    }
    opt(p, "max_clock_bias_ns", s.params.max_clock_bias_ns);
    opt(p, "preshared_p4_keys", s.params.preshared_p4_keys);
    opt(p, "keyex_lead_ns", s.params.keyex_lead_ns);
    auto& pc = s.params.proto;
    opt(p, "freshness_window_ns", pc.freshness_window_ns);
    opt(p, "p4_timestamp_window_ns", pc.p4_timestamp_window_ns);
    opt(p, "nonce_cache_ttl_ns", pc.nonce_cache_ttl_ns);
    opt(p, "commit_ttl_ns", pc.commit_ttl_ns);
    opt(p, "response_timeout_ns", pc.response_timeout_ns);
    opt(p, "sign_latency_ns", pc.sign_latency_ns);
    opt(p, "verify_latency_ns", pc.verify_latency_ns);
    opt(p, "pk_latency_ns", pc.pk_latency_ns);
    opt(p, "sym_latency_ns", pc.sym_latency_ns);
    opt(p, "v_max_closure_mps", pc.v_max_closure_mps);
    opt(p, "range_tolerance_m", pc.range_tolerance_m);
    auto& sv = s.params.solver;
    opt(p, "detection_ratio", sv.detection_ratio);
    opt(p, "residual_threshold_m", sv.residual_threshold_m);
    opt(p, "solver_max_iterations", sv.max_iterations);
  }

  if (j.contains("nodes")) {
    if (!j["nodes"].is_array()) return invalid("nodes must be an array");
    for (const Json& nj : j["nodes"]) {
      sim::NodeSpec n;
      if (!nj.contains("id")) return invalid("node without id");
      auto id = parse_id(nj["id"], "node.id");
      if (!id.ok()) return id.error();
      n.id = *id;

      const std::string role = nj.value("role", "navaid");
      if (role == "navaid") n.role = sim::Role::Navaid;
      else if (role == "client") n.role = sim::Role::Client;
      else if (role == "attacker") n.role = sim::Role::Attacker;
      else return invalid("node role must be navaid/client/attacker");

      if (nj.contains("position")) {
        auto p = parse_position(nj["position"], "node.position");
        if (!p.ok()) return p.error();
        n.motion.p0 = *p;
      }
      if (nj.contains("velocity")) {
        auto v = parse_position(nj["velocity"], "node.velocity");
        if (!v.ok()) return v.error();
        n.motion.velocity = *v;
        n.motion.moving = norm(*v) > 0;
        if (nj.contains("motion_t0_ns")) n.motion.t0 = SimTime{nj["motion_t0_ns"].get<int64_t>()};
      }
      if (nj.contains("clock")) {
        const Json& cj = nj["clock"];
        opt(cj, "bias_ns", n.clock.bias_ns);
        opt(cj, "drift", n.clock.drift);
        opt(cj, "quantization_ns", n.clock.quantization_ns);
      }
      if (nj.contains("beacon")) {
        sim::BeaconPlan b;
        opt(nj["beacon"], "interval_ns", b.interval_ns);
        opt(nj["beacon"], "offset_ns", b.offset_ns);
        n.beacon = b;
      }
      if (nj.contains("p3")) {
        sim::P3Plan p3;
        opt(nj["p3"], "interval_ns", p3.interval_ns);
        opt(nj["p3"], "offset_ns", p3.offset_ns);
        opt(nj["p3"], "reveal_gap_ns", p3.reveal_gap_ns);
        n.p3 = p3;
      }
      opt(nj, "p4_responder", n.p4_responder);
      opt(nj, "p5_responder", n.p5_responder);
      opt(nj, "report_arrival_direction", n.report_arrival_direction);
      opt(nj, "daisy_respond", n.daisy_respond);
      opt(nj, "processing_delay_ns", n.processing_delay_ns);
      if (nj.contains("antenna")) {
        const Json& aj = nj["antenna"];
        opt(aj, "azimuth", n.antenna.az0);
        opt(aj, "elevation", n.antenna.elevation);
        opt(aj, "spin_rate", n.antenna.spin_rate);
        n.antenna.spinning = n.antenna.spin_rate != 0;
      }
      opt(nj, "observe", n.observe);
      if (nj.contains("fix_at_ns")) {
        for (const Json& t : nj["fix_at_ns"]) n.fix_times.push_back(SimTime{t.get<int64_t>()});
      }
      if (nj.contains("interrogate")) {
        for (const Json& qj : nj["interrogate"]) {
          sim::InterrogationPlan plan;
          plan.at = SimTime{qj.at("at_ns").get<int64_t>()};
          auto target = parse_id(qj.at("target"), "interrogate.target");
          if (!target.ok()) return target.error();
          plan.target = *target;
          plan.protocol = qj.value("protocol", 4);
          plan.timing_angle = qj.value("timing_angle", false);
          n.interrogations.push_back(plan);
        }
      }
      if (nj.contains("daisy")) {
        sim::DaisyPlan d;
        auto partner = parse_id(nj["daisy"].at("partner"), "daisy.partner");
        if (!partner.ok()) return partner.error();
        d.partner = *partner;
        d.at = SimTime{nj["daisy"].at("at_ns").get<int64_t>()};
        n.daisy = d;
      }

      if (nj.contains("delay_meacon")) {
        const Json& mj = nj["delay_meacon"];
        sim::DelayMeaconSpec m;
        m.delta_ns = mj.at("delta_ns").get<int64_t>();
        if (mj.contains("from")) {
          auto from = parse_id(mj["from"], "delay_meacon.from");
          if (!from.ok()) return from.error();
          m.only_from = *from;
        }
        if (mj.contains("window_ns")) {
          m.window_start = SimTime{mj["window_ns"][0].get<int64_t>()};
          m.window_end = SimTime{mj["window_ns"][1].get<int64_t>()};
        }
        n.caps.delay_meacon = m;
      }
      if (nj.contains("bent_pipe")) {
        sim::BentPipeSpec b;
        opt(nj["bent_pipe"], "delay_ns", b.pipe_delay_ns);
        if (nj["bent_pipe"].contains("emit_position")) {
          auto p = parse_position(nj["bent_pipe"]["emit_position"], "bent_pipe.emit_position");
          if (!p.ok()) return p.error();
          b.emit_from = *p;
        }
        n.caps.bent_pipe = b;
      }
      if (nj.contains("replay")) {
        const Json& rj = nj["replay"];
        sim::ReplaySpec r;
        r.replay_after_ns = rj.at("after_ns").get<int64_t>();
        if (rj.contains("from")) {
          auto from = parse_id(rj["from"], "replay.from");
          if (!from.ok()) return from.error();
          r.only_from = *from;
        }
        if (rj.contains("window_ns")) {
          r.window_start = SimTime{rj["window_ns"][0].get<int64_t>()};
          r.window_end = SimTime{rj["window_ns"][1].get<int64_t>()};
        }
        n.caps.replay = r;
      }
      if (nj.contains("spoof_beacons")) {
        for (const Json& sj : nj["spoof_beacons"]) {
          sim::SpoofBeaconSpec sp;
          sp.at = SimTime{sj.at("at_ns").get<int64_t>()};
          auto claim = parse_id(sj.at("claim"), "spoof.claim");
          if (!claim.ok()) return claim.error();
          sp.claim = *claim;
          if (sj.contains("position")) {
            auto p = parse_position(sj["position"], "spoof.position");
            if (!p.ok()) return p.error();
            sp.p = *p;
          }
          sp.timestamp = SimTime{sj.value("timestamp_ns", sp.at.ns)};
          n.caps.spoof_beacons.push_back(sp);
        }
      }
      if (nj.contains("spoof_responses")) {
        for (const Json& sj : nj["spoof_responses"]) {
          sim::SpoofResponseSpec sp;
          sp.at = SimTime{sj.at("at_ns").get<int64_t>()};
          n.caps.spoof_responses.push_back(sp);
        }
      }
      if (nj.contains("key_compromise")) {
        for (const Json& kj : nj["key_compromise"]) {
          auto victim = parse_id(kj, "key_compromise");
          if (!victim.ok()) return victim.error();
          n.caps.key_compromise.push_back(*victim);
        }
      }
      s.nodes.push_back(std::move(n));
    }
  }

  if (j.contains("channel")) {
    const Json& cj = j["channel"];
    opt(cj, "default_connected", s.channel.default_connected);
    opt(cj, "txsec_excludes_attackers", s.channel.txsec_excludes_attackers);
    for (const char* key : {"disabled", "enabled"}) {
      if (!cj.contains(key)) continue;
      for (const Json& lj : cj[key]) {
        auto from = parse_id(lj[0], key);
        auto to = parse_id(lj[1], key);
        if (!from.ok()) return from.error();
        if (!to.ok()) return to.error();
        auto& list = std::string(key) == "disabled" ? s.channel.disabled : s.channel.enabled;
        list.push_back({*from, *to});
      }
    }
    if (cj.contains("loss")) {
      for (const Json& lj : cj["loss"]) {
        sim::LossWindow w;
        auto from = parse_id(lj.at("from"), "loss.from");
        auto to = parse_id(lj.at("to"), "loss.to");
        if (!from.ok()) return from.error();
        if (!to.ok()) return to.error();
        w.from = *from;
        w.to = *to;
        w.t0 = SimTime{lj.value("t0_ns", int64_t{0})};
        w.t1 = SimTime{lj.value("t1_ns", INT64_MAX)};
        s.channel.loss.push_back(w);
      }
    }
  }

  if (j.contains("expect")) {
    if (!j["expect"].is_array()) return invalid("expect must be an array of checks");
    f.expect = j["expect"];
  }
  if (j.contains("notes")) {
    for (const Json& note : j["notes"]) f.notes.push_back(note.get<std::string>());
    s.notes = f.notes;
  }
  return f;
}

Expected<ScenarioFile> load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Error{Errc::IoError, "cannot open " + path};
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return Error{Errc::ScenarioInvalid, std::string("bad JSON: ") + e.what()};
  }
  // A report embeds its resolved scenario; accept either form.
  if (j.contains("scenario") && j["scenario"].is_object()) return parse_scenario(j["scenario"]);
  return parse_scenario(j);
}

Json scenario_to_json(const ScenarioFile& f) {
  const sim::Scenario& s = f.scenario;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration_ns"] = s.duration.ns;

  Json p;
  p["crypto"] = crypto::algo_name(s.params.algo);
  p["max_clock_bias_ns"] = s.params.max_clock_bias_ns;
  p["preshared_p4_keys"] = s.params.preshared_p4_keys;
  p["keyex_lead_ns"] = s.params.keyex_lead_ns;
  p["freshness_window_ns"] = s.params.proto.freshness_window_ns;
  p["p4_timestamp_window_ns"] = s.params.proto.p4_timestamp_window_ns;
  p["nonce_cache_ttl_ns"] = s.params.proto.nonce_cache_ttl_ns;
  p["commit_ttl_ns"] = s.params.proto.commit_ttl_ns;
  p["response_timeout_ns"] = s.params.proto.response_timeout_ns;
  p["sign_latency_ns"] = s.params.proto.sign_latency_ns;
  p["verify_latency_ns"] = s.params.proto.verify_latency_ns;
  p["pk_latency_ns"] = s.params.proto.pk_latency_ns;
  p["sym_latency_ns"] = s.params.proto.sym_latency_ns;
  p["v_max_closure_mps"] = s.params.proto.v_max_closure_mps;
  p["range_tolerance_m"] = s.params.proto.range_tolerance_m;
  p["detection_ratio"] = s.params.solver.detection_ratio;
  p["residual_threshold_m"] = s.params.solver.residual_threshold_m;
  p["solver_max_iterations"] = s.params.solver.max_iterations;
  j["params"] = std::move(p);

  Json nodes = Json::array();
  for (const sim::NodeSpec& n : s.nodes) {
    Json nj;
    nj["id"] = n.id.to_string();
    nj["role"] = sim::role_name(n.role);
    nj["position"] = position_json(n.motion.p0);
    if (n.motion.moving) {
      nj["velocity"] = position_json(n.motion.velocity);
      nj["motion_t0_ns"] = n.motion.t0.ns;
    }
    nj["clock"] = Json{{"bias_ns", n.clock.bias_ns},
                       {"drift", n.clock.drift},
                       {"quantization_ns", n.clock.quantization_ns}};
    if (n.beacon)
      nj["beacon"] = Json{{"interval_ns", n.beacon->interval_ns},
                          {"offset_ns", n.beacon->offset_ns}};
    if (n.p3)
      nj["p3"] = Json{{"interval_ns", n.p3->interval_ns},
                      {"offset_ns", n.p3->offset_ns},
                      {"reveal_gap_ns", n.p3->reveal_gap_ns}};
    if (n.p4_responder) nj["p4_responder"] = true;
    if (n.p5_responder) nj["p5_responder"] = true;
    if (n.report_arrival_direction) nj["report_arrival_direction"] = true;
    if (n.daisy_respond) nj["daisy_respond"] = true;
    nj["processing_delay_ns"] = n.processing_delay_ns;
    if (n.antenna.az0 != 0 || n.antenna.elevation != 0 || n.antenna.spinning) {
      nj["antenna"] = Json{{"azimuth", n.antenna.az0},
                           {"elevation", n.antenna.elevation},
                           {"spin_rate", n.antenna.spin_rate}};
    }
    if (n.observe) nj["observe"] = true;
    if (!n.fix_times.empty()) {
      Json arr = Json::array();
      for (const auto& t : n.fix_times) arr.push_back(t.ns);
      nj["fix_at_ns"] = arr;
    }
    if (!n.interrogations.empty()) {
      Json arr = Json::array();
      for (const auto& q : n.interrogations) {
        Json qj{{"at_ns", q.at.ns},
                {"target", q.target.to_string()},
                {"protocol", q.protocol}};
        if (q.timing_angle) qj["timing_angle"] = true;
        arr.push_back(qj);
      }
      nj["interrogate"] = arr;
    }
    if (n.daisy)
      nj["daisy"] = Json{{"partner", n.daisy->partner.to_string()}, {"at_ns", n.daisy->at.ns}};
    if (n.caps.delay_meacon) {
      Json mj{{"delta_ns", n.caps.delay_meacon->delta_ns}};
      if (n.caps.delay_meacon->only_from)
        mj["from"] = n.caps.delay_meacon->only_from->to_string();
      mj["window_ns"] = Json::array(
          {n.caps.delay_meacon->window_start.ns, n.caps.delay_meacon->window_end.ns});
      nj["delay_meacon"] = mj;
    }
    if (n.caps.bent_pipe) {
      Json bj{{"delay_ns", n.caps.bent_pipe->pipe_delay_ns}};
      if (n.caps.bent_pipe->emit_from)
        bj["emit_position"] = position_json(*n.caps.bent_pipe->emit_from);
      nj["bent_pipe"] = bj;
    }
    if (n.caps.replay) {
      Json rj{{"after_ns", n.caps.replay->replay_after_ns}};
      if (n.caps.replay->only_from) rj["from"] = n.caps.replay->only_from->to_string();
      rj["window_ns"] =
          Json::array({n.caps.replay->window_start.ns, n.caps.replay->window_end.ns});
      nj["replay"] = rj;
    }
    if (!n.caps.spoof_beacons.empty()) {
      Json arr = Json::array();
      for (const auto& sp : n.caps.spoof_beacons) {
        arr.push_back(Json{{"at_ns", sp.at.ns},
                           {"claim", sp.claim.to_string()},
                           {"position", position_json(sp.p)},
                           {"timestamp_ns", sp.timestamp.ns}});
      }
      nj["spoof_beacons"] = arr;
    }
    if (!n.caps.spoof_responses.empty()) {
      Json arr = Json::array();
      for (const auto& sp : n.caps.spoof_responses) arr.push_back(Json{{"at_ns", sp.at.ns}});
      nj["spoof_responses"] = arr;
    }
    if (!n.caps.key_compromise.empty()) {
      Json arr = Json::array();
      for (const auto& k : n.caps.key_compromise) arr.push_back(k.to_string());
      nj["key_compromise"] = arr;
    }
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);

  Json ch;
  ch["default_connected"] = s.channel.default_connected;
  ch["txsec_excludes_attackers"] = s.channel.txsec_excludes_attackers;
  auto links = [](const std::vector<std::pair<NodeId, NodeId>>& v) {
    Json arr = Json::array();
    for (const auto& [a, b] : v) arr.push_back(Json::array({a.to_string(), b.to_string()}));
    return arr;
  };
  if (!s.channel.disabled.empty()) ch["disabled"] = links(s.channel.disabled);
  if (!s.channel.enabled.empty()) ch["enabled"] = links(s.channel.enabled);
  if (!s.channel.loss.empty()) {
    Json arr = Json::array();
    for (const auto& w : s.channel.loss) {
      arr.push_back(Json{{"from", w.from.to_string()},
                         {"to", w.to.to_string()},
                         {"t0_ns", w.t0.ns},
                         {"t1_ns", w.t1.ns}});
    }
    ch["loss"] = arr;
  }
  j["channel"] = std::move(ch);

  if (!f.expect.empty()) j["expect"] = f.expect;
  if (!f.notes.empty()) j["notes"] = Json(f.notes);
  return j;
}

}  // namespace navsec::cli
