#pragma once

// Scenario files, reports and the batch runner behind the navsec CLI.
// Scenario files are JSON with a versioned schema; an optional `expect`
// block turns a scenario into a self-checking fixture. Reports embed the
// fully resolved scenario so a run can be reproduced byte-for-byte from its
// own output.

#include <optional>
#include <string>
#include <vector>

#include "navsec/certs.hpp"
#include "navsec/simnet.hpp"

namespace navsec::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct ScenarioFile {
  sim::Scenario scenario;
  Json expect = Json::array();
  std::vector<std::string> notes;
};

Expected<ScenarioFile> parse_scenario(const Json& j);
Expected<ScenarioFile> load_scenario(const std::string& path);

// Fully resolved form: every parameter explicit, round-trips through
// parse_scenario to an identical sim::Scenario.
Json scenario_to_json(const ScenarioFile& f);

struct ExpectResult {
  Json check;
  bool ok = false;
  std::string detail;
};

struct RunReport {
  Json report;
  std::string trace_jsonl;
  bool expect_ok = true;
  std::vector<ExpectResult> expect_results;
};

Expected<RunReport> run_scenario(const ScenarioFile& f,
                                 std::optional<uint64_t> seed_override = std::nullopt);

// Best-effort static picture of the scenario and its fixes.
std::string render_plot_svg(const ScenarioFile& f, const sim::Results& results);

int cmd_run(const std::string& path, std::optional<uint64_t> seed,
            const std::string& out_prefix, bool plot);
int cmd_suite(const std::string& dir, int jobs);

// Certificate file plumbing shared by the `navsec cert` subcommands.
namespace certio {

Expected<crypto::KeyPair> load_keypair(const std::string& key_path);
Expected<crypto::PublicKey> load_public(const std::string& pub_path);
Expected<void> write_keypair(const crypto::KeyPair& kp, const std::string& prefix);

Expected<certs::Certificate> load_certificate(const std::string& path);
Expected<void> write_certificate(const certs::Certificate& c, const std::string& path);

Expected<certs::TrustPolicy> load_policy(const std::string& path);

Expected<certs::Assertion> parse_assertion(const std::string& spec);
Json certificate_to_json(const certs::Certificate& c);

}  // namespace certio

}  // namespace navsec::cli
