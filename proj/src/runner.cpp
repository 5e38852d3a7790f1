#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "navsec/cli.hpp"

namespace navsec::cli {

namespace {

const char* session_state_name(proto::SessionState s) {
  switch (s) {
    case proto::SessionState::Sent: return "Sent";
    case proto::SessionState::Completed: return "Completed";
    case proto::SessionState::Authenticated: return "Authenticated";
    case proto::SessionState::Failed: return "Failed";
  }
  return "unknown";
}

Json fix_json(const sim::FixRecord& f) {
  Json j;
  j["client"] = f.client.to_string();
  j["t_ns"] = f.at.ns;
  j["entries"] = f.entries;
  if (f.solved) {
    j["verdict"] = solver::verdict_name(f.fix.verdict);
    j["consistency"] = solver::verdict_name(f.consistency);
    j["position"] = Json::array({f.fix.position.x, f.fix.position.y, f.fix.position.z});
    j["bias_ns"] = f.fix.bias_ns;
    j["residual_m"] = f.fix.residual_rms_m;
    j["error_m"] = f.error_m;
    if (f.fix.meacon) {
      j["accused"] = f.fix.meacon->navaid.to_string();
      j["delay_ns"] = f.fix.meacon->delay_ns;
    }
  } else {
    j["error"] = errc_name(f.error);
  }
  j["pairwise_violations"] = f.pairwise_violations;
  if (f.pairwise_accused) j["pairwise_accused"] = f.pairwise_accused->to_string();
  j["true_position"] =
      Json::array({f.true_position.x, f.true_position.y, f.true_position.z});
  return j;
}

Json session_json(const sim::SessionRecord& s) {
  Json j;
  j["client"] = s.client.to_string();
  j["target"] = s.target.to_string();
  j["protocol"] = s.protocol;
  if (s.daisy) j["daisy"] = true;
  j["state"] = session_state_name(s.state);
  j["range_m"] = s.range_m;
  j["true_range_m"] = s.true_range_at_tx_m;
  if (s.authenticated) {
    j["authenticated"] = true;
    j["auth_position"] =
        Json::array({s.auth_position.x, s.auth_position.y, s.auth_position.z});
  }
  if (s.timing_angle_position) {
    j["timing_angle_position"] =
        Json::array({s.timing_angle_position->x, s.timing_angle_position->y,
                     s.timing_angle_position->z});
  }
  return j;
}

// Which attacks got through and which the protocols excluded, judged from
// ground truth rather than the victims' beliefs.
Json attack_table(const ScenarioFile& f, const sim::Results& r) {
  Json table = Json::array();
  const auto& cfg = f.scenario.params;

  bool any_detection = false;
  for (const auto& fx : r.fixes) {
    if (fx.solved && (fx.fix.verdict == solver::Verdict::MEACONING_DETECTED ||
                      fx.consistency == solver::Verdict::INCONSISTENT))
      any_detection = true;
    if (fx.pairwise_violations > 0) any_detection = true;
  }
  for (const auto& d : r.daisy) {
    if (d.result.verdict == proto::DaisyVerdict::MEACONING_SUSPECTED) any_detection = true;
  }
  int rejected_timing = 0;
  for (const auto& [key, count] : r.rejects) {
    if (key.find("StaleTimestamp") != std::string::npos ||
        key.find("ReplayedReveal") != std::string::npos ||
        key.find("NonceMismatch") != std::string::npos ||
        key.find("BadSignature") != std::string::npos ||
        key.find("IntegrityFailure") != std::string::npos)
      rejected_timing += count;
  }

  double worst_fix_error = 0, worst_bias_shift_ns = 0;
  bool clean_displaced = false;
  for (const auto& fx : r.fixes) {
    if (!fx.solved) continue;
    worst_fix_error = std::max(worst_fix_error, fx.error_m);
    double true_bias = 0;
    for (const auto& n : f.scenario.nodes) {
      if (n.id == fx.client) true_bias = static_cast<double>(n.clock.bias_ns);
    }
    const double bias_shift = std::fabs(fx.fix.bias_ns - true_bias);
    const bool clean =
        fx.fix.verdict == solver::Verdict::CLEAN && fx.consistency == solver::Verdict::CLEAN;
    if (clean && fx.error_m > cfg.solver.residual_threshold_m) clean_displaced = true;
    // a displaced clock with a clean verdict is a successful time attack
    if (clean && bias_shift > 100.0) {
      clean_displaced = true;
      worst_bias_shift_ns = std::max(worst_bias_shift_ns, bias_shift);
    }
  }

  bool range_reduced = false;
  double max_inflation = 0;
  for (const auto& s : r.sessions) {
    if (s.state != proto::SessionState::Completed &&
        s.state != proto::SessionState::Authenticated)
      continue;
    const double slack =
        kMetersPerNs * 2 + cfg.proto.v_max_closure_mps *
                               (static_cast<double>(s.rx_true - s.tx_true) * 1e-9);
    if (s.range_m < s.true_range_at_tx_m - slack) range_reduced = true;
    max_inflation = std::max(max_inflation, s.range_m - s.true_range_at_tx_m);
  }

  for (const auto& n : f.scenario.nodes) {
    if (n.role != sim::Role::Attacker) continue;
    auto row_for = [&](const char* kind) {
      Json row;
      row["node"] = n.id.to_string();
      row["kind"] = kind;
      row["emissions"] = r.attacks.count(kind) ? r.attacks.at(kind) : 0;
      return row;
    };
    if (n.caps.delay_meacon) {
      Json row = row_for("delay_meacon");
      row["range_reduction_achieved"] = range_reduced;
      row["max_range_inflation_m"] = max_inflation;
      row["clean_fix_displaced"] = clean_displaced;
      if (worst_bias_shift_ns > 0) row["clock_bias_shift_ns"] = worst_bias_shift_ns;
      row["detected"] = any_detection;
      row["outcome"] = clean_displaced ? "succeeded_undetected"
                       : any_detection ? "detected"
                                       : "no_effect";
      table.push_back(row);
    }
    if (n.caps.bent_pipe) {
      Json row = row_for("bent_pipe");
      row["clean_fix_displaced"] = clean_displaced;
      row["worst_fix_error_m"] = worst_fix_error;
      row["detected"] = any_detection;
      row["outcome"] = clean_displaced ? "succeeded_undetected"
                       : any_detection ? "detected"
                                       : "no_effect";
      table.push_back(row);
    }
    if (n.caps.replay) {
      Json row = row_for("replay");
      row["replayed_copies_accepted"] = r.attacker_relayed_accepts;
      row["rejections"] = rejected_timing;
      row["outcome"] = r.attacker_relayed_accepts > 0 ? "copy_accepted" : "excluded";
      table.push_back(row);
    }
    if (!n.caps.spoof_beacons.empty() || !n.caps.spoof_responses.empty()) {
      Json row = row_for(!n.caps.spoof_beacons.empty() ? "spoof_beacon" : "spoof_response");
      if (!n.caps.spoof_responses.empty())
        row["emissions"] =
            (r.attacks.count("spoof_beacon") ? r.attacks.at("spoof_beacon") : 0) +
            (r.attacks.count("spoof_response") ? r.attacks.at("spoof_response") : 0);
      row["forged_content_accepted"] = r.forged_content_accepted;
      row["key_compromised"] = !n.caps.key_compromise.empty();
      row["outcome"] = r.forged_content_accepted || !n.caps.key_compromise.empty()
                           ? (n.caps.key_compromise.empty() ? "FORGERY (must not happen)"
                                                            : "accepted_via_stolen_key")
                           : "excluded";
      table.push_back(row);
    }
  }
  return table;
}

struct ExpectCtx {
  const ScenarioFile& file;
  const sim::Results& results;
};

ExpectResult eval_check(const ExpectCtx& ctx, const Json& check) {
  ExpectResult res;
  res.check = check;
  const std::string kind = check.value("check", "");
  const auto& r = ctx.results;

  auto fail = [&res](const std::string& why) {
    res.ok = false;
    res.detail = why;
    return res;
  };
  auto pass = [&res](const std::string& why = "ok") {
    res.ok = true;
    res.detail = why;
    return res;
  };

  auto fixes_matching = [&](const Json& c) {
    std::vector<const sim::FixRecord*> out;
    for (const auto& f : r.fixes) {
      if (c.contains("node") && f.client.to_string() != c["node"].get<std::string>()) continue;
      out.push_back(&f);
    }
    return out;
  };
  auto sessions_done = [&] {
    std::vector<const sim::SessionRecord*> out;
    for (const auto& s : r.sessions) {
      if (s.state == proto::SessionState::Completed ||
          s.state == proto::SessionState::Authenticated)
        out.push_back(&s);
    }
    return out;
  };

  if (kind == "fix_verdict") {
    const std::string want = check.at("equals").get<std::string>();
    const auto fixes = fixes_matching(check);
    if (fixes.empty()) return fail("no fixes");
    for (const auto* f : fixes) {
      if (!f->solved) return fail(std::string("fix failed: ") + errc_name(f->error));
      if (solver::verdict_name(f->fix.verdict) != want)
        return fail(std::string("verdict ") + solver::verdict_name(f->fix.verdict));
    }
    return pass();
  }
  if (kind == "consistency") {
    const std::string want = check.at("equals").get<std::string>();
    for (const auto* f : fixes_matching(check)) {
      if (!f->solved || solver::verdict_name(f->consistency) != want)
        return fail("consistency mismatch");
    }
    return pass();
  }
  if (kind == "accused") {
    const std::string want = check.at("equals").get<std::string>();
    for (const auto* f : fixes_matching(check)) {
      if (f->solved && f->fix.meacon && f->fix.meacon->navaid.to_string() == want)
        return pass();
    }
    return fail("no fix accused " + want);
  }
  if (kind == "accused_delay_ns") {
    for (const auto* f : fixes_matching(check)) {
      if (!f->solved || !f->fix.meacon) continue;
      const double d = f->fix.meacon->delay_ns;
      if (d >= check.at("min").get<double>() && d <= check.at("max").get<double>())
        return pass();
      return fail("delay estimate " + std::to_string(d) + " outside bounds");
    }
    return fail("no delay estimate");
  }
  if (kind == "fix_error_max_m") {
    const double bound = check.at("value").get<double>();
    const auto fixes = fixes_matching(check);
    if (fixes.empty()) return fail("no fixes");
    for (const auto* f : fixes) {
      if (!f->solved) return fail("fix failed");
      if (f->error_m > bound)
        return fail("fix error " + std::to_string(f->error_m) + " m");
    }
    return pass();
  }
  if (kind == "fix_error_min_m") {
    const double bound = check.at("value").get<double>();
    for (const auto* f : fixes_matching(check)) {
      if (f->solved && f->error_m >= bound) return pass();
    }
    return fail("no fix displaced that far");
  }
  if (kind == "bias_absorbs_delay") {
    // uniform all-station delay lands in the clock-bias estimate
    const double delay = check.at("delay_ns").get<double>();
    const double tol = check.value("tol_ns", 50.0);
    for (const auto* f : fixes_matching(check)) {
      if (!f->solved) continue;
      double true_bias = 0;
      for (const auto& n : ctx.file.scenario.nodes) {
        if (n.id == f->client) true_bias = static_cast<double>(n.clock.bias_ns);
      }
      if (std::fabs(f->fix.bias_ns - (true_bias + delay)) <= tol) return pass();
      return fail("bias " + std::to_string(f->fix.bias_ns));
    }
    return fail("no fixes");
  }
  if (kind == "fix_near") {
    // the fix landed near a stated position (bent-pipe displacement etc.)
    const Json& pj = check.at("position");
    const Position want{pj[0].get<double>(), pj[1].get<double>(), pj[2].get<double>()};
    const double tol = check.value("tol_m", 1.0);
    for (const auto* f : fixes_matching(check)) {
      if (!f->solved) return fail("fix failed");
      const double d = distance(f->fix.position, want);
      if (d > tol) return fail("fix " + std::to_string(d) + " m from expected position");
    }
    return fixes_matching(check).empty() ? fail("no fixes") : pass();
  }
  if (kind == "fix_count") {
    const size_t want = check.at("value").get<size_t>();
    return r.fixes.size() == want
               ? pass()
               : fail("fix count " + std::to_string(r.fixes.size()));
  }
  if (kind == "accept_min") {
    const std::string op = check.at("op").get<std::string>();
    const int want = check.at("value").get<int>();
    const int have = r.accepts.count(op) ? r.accepts.at(op) : 0;
    return have >= want ? pass() : fail(op + " count " + std::to_string(have));
  }
  if (kind == "accept_none") {
    const std::string op = check.at("op").get<std::string>();
    const int have = r.accepts.count(op) ? r.accepts.at(op) : 0;
    return have == 0 ? pass() : fail(op + " accepted " + std::to_string(have));
  }
  if (kind == "reject_min") {
    const std::string key = check.at("key").get<std::string>();
    const int want = check.at("value").get<int>();
    const int have = r.rejects.count(key) ? r.rejects.at(key) : 0;
    return have >= want ? pass() : fail(key + " count " + std::to_string(have));
  }
  if (kind == "sessions_completed_min") {
    const int want = check.at("value").get<int>();
    const int have = static_cast<int>(sessions_done().size());
    return have >= want ? pass() : fail("completed " + std::to_string(have));
  }
  if (kind == "session_state") {
    const std::string want = check.at("equals").get<std::string>();
    if (r.sessions.empty()) return fail("no sessions");
    for (const auto& s : r.sessions) {
      if (session_state_name(s.state) != want)
        return fail(std::string("state ") + session_state_name(s.state));
    }
    return pass();
  }
  if (kind == "range_error_max_m") {
    const double bound = check.at("value").get<double>();
    const auto done = sessions_done();
    if (done.empty()) return fail("no completed sessions");
    for (const auto* s : done) {
      if (std::fabs(s->range_m - s->true_range_at_tx_m) > bound)
        return fail("range error " + std::to_string(s->range_m - s->true_range_at_tx_m));
    }
    return pass();
  }
  if (kind == "range_inflated_min_m") {
    const double bound = check.at("value").get<double>();
    for (const auto* s : sessions_done()) {
      if (s->range_m - s->true_range_at_tx_m >= bound) return pass();
    }
    return fail("no session inflated that far");
  }
  if (kind == "range_never_below_true") {
    const double slack = check.value("slack_m", kMetersPerNs * 2);
    for (const auto* s : sessions_done()) {
      if (s->range_m < s->true_range_at_tx_m - slack)
        return fail("range " + std::to_string(s->range_m) + " below true " +
                    std::to_string(s->true_range_at_tx_m));
    }
    return pass();
  }
  if (kind == "daisy_verdict") {
    const std::string want = check.at("equals").get<std::string>();
    if (r.daisy.empty()) return fail("no daisy results");
    for (const auto& d : r.daisy) {
      const char* got =
          d.result.verdict == proto::DaisyVerdict::CLEAN ? "CLEAN" : "MEACONING_SUSPECTED";
      if (want != got) return fail(std::string("daisy verdict ") + got);
    }
    return pass();
  }
  if (kind == "timing_angle_error_max_m") {
    const double bound = check.at("value").get<double>();
    for (const auto& s : r.sessions) {
      if (!s.timing_angle_position) continue;
      double true_pos_err = -1;
      for (const auto& n : ctx.file.scenario.nodes) {
        if (n.id == s.client)
          true_pos_err = distance(*s.timing_angle_position, n.motion.at(s.tx_true));
      }
      if (true_pos_err >= 0 && true_pos_err <= bound) return pass();
      return fail("timing+angle error " + std::to_string(true_pos_err));
    }
    return fail("no timing+angle result");
  }
  if (kind == "no_forged_content") {
    return r.forged_content_accepted ? fail("forged content accepted") : pass();
  }
  if (kind == "forged_content_accepted") {
    // the key-compromise demonstration expects the forgery to land
    return r.accepts.count("p1_accept") && r.accepts.at("p1_accept") > 0 &&
                   !r.forged_content_accepted
               ? pass("accepted via stolen key")
               : (r.forged_content_accepted ? fail("true forgery") : fail("nothing accepted"));
  }
  if (kind == "hot_path_asymmetric_zero") {
    for (const auto& [id, ops] : r.p3_hot_ops) {
      if (ops.asymmetric() != 0) return fail("asymmetric ops on hot path");
    }
    return pass();
  }
  if (kind == "pairwise_violations_min") {
    const size_t want = check.at("value").get<size_t>();
    for (const auto& f : r.fixes) {
      if (f.pairwise_violations >= want) return pass();
    }
    return fail("no fix with enough pairwise violations");
  }
  if (kind == "pairwise_accused") {
    const std::string want = check.at("equals").get<std::string>();
    for (const auto& f : r.fixes) {
      if (f.pairwise_accused && f.pairwise_accused->to_string() == want) return pass();
    }
    return fail("pairwise check did not accuse " + want);
  }
  if (kind == "attacker_relayed_accepts_min") {
    const int want = check.at("value").get<int>();
    return r.attacker_relayed_accepts >= want
               ? pass()
               : fail("relayed accepts " + std::to_string(r.attacker_relayed_accepts));
  }
  return fail("unknown check kind '" + kind + "'");
}

}  // namespace

Expected<RunReport> run_scenario(const ScenarioFile& f, std::optional<uint64_t> seed_override) {
  ScenarioFile file = f;
  if (seed_override) file.scenario.seed = *seed_override;

  auto out = sim::run(file.scenario);
  if (!out.ok()) return out.error();

  RunReport rep;
  // The header embeds the resolved scenario: re-running a report reproduces
  // the trace byte for byte.
  sim::Trace trace = std::move(out->trace);
  trace.header["scenario"] = scenario_to_json(file);
  rep.trace_jsonl = trace.to_jsonl();

  ExpectCtx ctx{file, out->results};
  for (const Json& check : file.expect) {
    ExpectResult res = eval_check(ctx, check);
    rep.expect_ok = rep.expect_ok && res.ok;
    rep.expect_results.push_back(std::move(res));
  }

  Json report;
  report["name"] = file.scenario.name;
  report["seed"] = file.scenario.seed;
  report["expect_ok"] = rep.expect_ok;
  Json checks = Json::array();
  for (const auto& er : rep.expect_results) {
    checks.push_back(Json{{"check", er.check}, {"ok", er.ok}, {"detail", er.detail}});
  }
  report["expect_results"] = checks;
  Json fixes = Json::array();
  for (const auto& fx : out->results.fixes) fixes.push_back(fix_json(fx));
  report["fixes"] = fixes;
  Json sessions = Json::array();
  for (const auto& s : out->results.sessions) sessions.push_back(session_json(s));
  report["sessions"] = sessions;
  Json daisy = Json::array();
  for (const auto& d : out->results.daisy) {
    daisy.push_back(Json{
        {"reporter", d.reporter.to_string()},
        {"partner", d.partner.to_string()},
        {"own_m", d.own_range_m},
        {"peer_m", d.peer_range_m},
        {"delta_m", d.result.delta_m},
        {"bound_m", d.result.bound_m},
        {"verdict",
         d.result.verdict == proto::DaisyVerdict::CLEAN ? "CLEAN" : "MEACONING_SUSPECTED"}});
  }
  report["daisy"] = daisy;
  report["attacks"] = attack_table(file, out->results);
  report["summary"] = trace.summary;
  if (!file.notes.empty()) report["notes"] = Json(file.notes);
  report["scenario"] = trace.header["scenario"];
  rep.report = std::move(report);
  return rep;
}

std::string render_plot_svg(const ScenarioFile& f, const sim::Results& results) {
  // Autoscaled top-down (x, y) picture: navaid triangles, client circles,
  // fix crosses.
  double lo_x = 1e30, hi_x = -1e30, lo_y = 1e30, hi_y = -1e30;
  auto grow = [&](const Position& p) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  };
  for (const auto& n : f.scenario.nodes) grow(n.motion.p0);
  for (const auto& fx : results.fixes) {
    if (fx.solved) grow(fx.fix.position);
  }
  if (lo_x > hi_x) return "<svg xmlns='http://www.w3.org/2000/svg'/>";
  const double pad = std::max({(hi_x - lo_x) * 0.1, (hi_y - lo_y) * 0.1, 10.0});
  lo_x -= pad;
  hi_x += pad;
  lo_y -= pad;
  hi_y += pad;
  const double w = 800, h = 800;
  auto sx = [&](double x) { return (x - lo_x) / (hi_x - lo_x) * w; };
  auto sy = [&](double y) { return h - (y - lo_y) / (hi_y - lo_y) * h; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "' viewBox='0 0 " << w << " " << h << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  for (const auto& n : f.scenario.nodes) {
    const double x = sx(n.motion.p0.x), y = sy(n.motion.p0.y);
    const char* color = n.role == sim::Role::Navaid    ? "#2060c0"
                        : n.role == sim::Role::Client  ? "#208040"
                                                       : "#c03030";
    if (n.role == sim::Role::Navaid) {
      svg << "<polygon points='" << x << "," << y - 8 << " " << x - 7 << "," << y + 6 << " "
          << x + 7 << "," << y + 6 << "' fill='" << color << "'/>\n";
    } else {
      svg << "<circle cx='" << x << "' cy='" << y << "' r='6' fill='" << color << "'/>\n";
    }
    svg << "<text x='" << x + 9 << "' y='" << y + 4 << "' font-size='12'>"
        << n.id.to_string() << "</text>\n";
  }
  for (const auto& fx : results.fixes) {
    if (!fx.solved) continue;
    const double x = sx(fx.fix.position.x), y = sy(fx.fix.position.y);
    svg << "<path d='M" << x - 6 << " " << y - 6 << " L" << x + 6 << " " << y + 6 << " M"
        << x - 6 << " " << y + 6 << " L" << x + 6 << " " << y - 6
        << "' stroke='#e08000' stroke-width='2'/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

int log_level() {
  const char* env = std::getenv("NAVSEC_LOG");
  return env ? std::atoi(env) : 0;
}

}  // namespace

int cmd_run(const std::string& path, std::optional<uint64_t> seed,
            const std::string& out_prefix, bool plot) {
  auto file = load_scenario(path);
  if (!file.ok()) {
    std::cerr << "error: " << errc_name(file.code()) << ": " << file.error().detail << "\n";
    return file.code() == Errc::IoError ? 3 : 2;
  }
  if (log_level() >= 1)
    std::cerr << "[navsec] running " << file->scenario.name << " seed " << file->scenario.seed
              << "\n";

  auto rep = run_scenario(*file, seed);
  if (!rep.ok()) {
    std::cerr << "error: " << errc_name(rep.code()) << ": " << rep.error().detail << "\n";
    return 2;
  }

  const std::string prefix = out_prefix.empty() ? file->scenario.name : out_prefix;
  {
    std::ofstream out(prefix + ".report.json");
    out << rep->report.dump(2) << "\n";
  }
  {
    std::ofstream out(prefix + ".trace.jsonl");
    out << rep->trace_jsonl;
  }
  if (plot) {
    auto rerun = sim::run(file->scenario, seed.value_or(file->scenario.seed));
    if (rerun.ok()) {
      std::ofstream out(prefix + ".svg");
      out << render_plot_svg(*file, rerun->results);
    }
  }

  std::cout << file->scenario.name << ": "
            << (rep->expect_results.empty() ? "ran"
                : rep->expect_ok            ? "PASS"
                                            : "FAIL")
            << " (" << rep->expect_results.size() << " checks)\n";
  for (const auto& er : rep->expect_results) {
    if (!er.ok)
      std::cout << "  FAIL " << er.check.value("check", "?") << ": " << er.detail << "\n";
    else if (log_level() >= 1)
      std::cout << "  ok   " << er.check.value("check", "?") << "\n";
  }
  return rep->expect_ok ? 0 : 1;
}

int cmd_suite(const std::string& dir, int jobs) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  if (!fs::exists(dir)) {
    std::cerr << "error: no such directory: " << dir << "\n";
    return 3;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    std::cout << "suite: no scenarios\n";
    return 0;
  }

  struct Row {
    std::string path;
    std::string status;
    bool ok = false;
  };
  std::vector<Row> rows(paths.size());

  auto run_one = [](const std::string& path) {
    Row row;
    row.path = path;
    auto file = load_scenario(path);
    if (!file.ok()) {
      row.status = "INVALID (" + file.error().detail + ")";
      return row;
    }
    auto rep = run_scenario(*file);
    if (!rep.ok()) {
      row.status = "INVALID (" + rep.error().detail + ")";
      return row;
    }
    row.ok = rep->expect_ok;
    row.status = rep->expect_ok
                     ? "PASS"
                     : "FAIL (" + std::to_string(std::count_if(
                                      rep->expect_results.begin(), rep->expect_results.end(),
                                      [](const ExpectResult& e) { return !e.ok; })) +
                           " checks)";
    return row;
  };

  if (jobs <= 1) {
    for (size_t i = 0; i < paths.size(); ++i) rows[i] = run_one(paths[i]);
  } else {
    std::vector<std::future<Row>> futures;
    futures.reserve(paths.size());
    for (const auto& p : paths)
      futures.push_back(std::async(std::launch::async, run_one, p));
    for (size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
  }

  bool all_ok = true;
  for (const auto& row : rows) {
    std::cout << (row.ok ? "PASS " : "FAIL ") << row.path;
    if (!row.ok) std::cout << "  [" << row.status << "]";
    std::cout << "\n";
    all_ok = all_ok && row.ok;
  }
  std::cout << "suite: " << std::count_if(rows.begin(), rows.end(),
                                          [](const Row& r) { return r.ok; })
            << "/" << rows.size() << " passed\n";
  return all_ok ? 0 : 1;
}

}  // namespace navsec::cli
