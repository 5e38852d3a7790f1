#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "navsec/cli.hpp"

using namespace navsec;
using namespace navsec::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir = NAVSEC_SCENARIO_DIR;

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "navsec_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(NAVSEC_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("bundled scenarios parse and serialize to a fixed point") {
  int parsed = 0;
  for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") continue;
    auto file = load_scenario(entry.path().string());
    REQUIRE_MESSAGE(file.ok(), entry.path().string());
    const Json once = scenario_to_json(*file);
    auto again = parse_scenario(once);
    REQUIRE(again.ok());
    CHECK(scenario_to_json(*again).dump() == once.dump());
    ++parsed;
  }
  CHECK(parsed >= 12);
}

TEST_CASE("every bundled scenario passes its own expect block") {
  for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") continue;
    auto file = load_scenario(entry.path().string());
    REQUIRE(file.ok());
    auto rep = run_scenario(*file);
    REQUIRE_MESSAGE(rep.ok(), entry.path().string());
    INFO(entry.path().string());
    for (const auto& er : rep->expect_results) {
      INFO(er.check.dump(), " -> ", er.detail);
      CHECK(er.ok);
    }
  }
}

TEST_CASE("a report reproduces its own trace byte for byte") {
  auto file = load_scenario((kScenarioDir / "honest_p2.json").string());
  REQUIRE(file.ok());
  auto first = run_scenario(*file);
  REQUIRE(first.ok());

  // round-trip through the report's embedded resolved scenario
  auto embedded = parse_scenario(first->report["scenario"]);
  REQUIRE(embedded.ok());
  auto second = run_scenario(*embedded);
  REQUIRE(second.ok());
  CHECK(first->trace_jsonl == second->trace_jsonl);
}

TEST_CASE("failed expectations surface with detail") {
  auto file = load_scenario((kScenarioDir / "honest_p2.json").string());
  REQUIRE(file.ok());
  file->expect = Json::array({Json{{"check", "fix_verdict"}, {"equals", "MEACONING_DETECTED"}}});
  auto rep = run_scenario(*file);
  REQUIRE(rep.ok());
  CHECK_FALSE(rep->expect_ok);
  REQUIRE(rep->expect_results.size() == 1);
  CHECK_FALSE(rep->expect_results[0].ok);
  CHECK(!rep->expect_results[0].detail.empty());
}

TEST_CASE("unknown expect checks fail loudly") {
  auto file = load_scenario((kScenarioDir / "honest_p2.json").string());
  REQUIRE(file.ok());
  file->expect = Json::array({Json{{"check", "definitely_not_a_check"}}});
  auto rep = run_scenario(*file);
  REQUIRE(rep.ok());
  CHECK_FALSE(rep->expect_ok);
}

TEST_CASE("seed override changes the trace") {
  auto file = load_scenario((kScenarioDir / "honest_p2.json").string());
  REQUIRE(file.ok());
  auto a = run_scenario(*file);
  auto b = run_scenario(*file, 999);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a->trace_jsonl != b->trace_jsonl);
}

TEST_CASE("malformed scenario files are rejected") {
  const auto dir = temp_dir();
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(load_scenario(bad.string()).code() == Errc::ScenarioInvalid);
  CHECK(load_scenario((dir / "missing.json").string()).code() == Errc::IoError);

  // structurally valid JSON, invalid scenario
  const auto invalid = dir / "invalid.json";
  std::ofstream(invalid) << R"({"nodes": [{"id": "N1"}, {"id": "N1"}]})";
  auto file = load_scenario(invalid.string());
  REQUIRE(file.ok());  // parses fine
  auto rep = run_scenario(*file);
  CHECK(rep.code() == Errc::ScenarioInvalid);  // fails validation
}

TEST_CASE("cli binary: run writes report and trace, exit code follows expect") {
  const auto dir = temp_dir();
  const auto prefix = (dir / "honest").string();
  const int rc = run_binary("run " + (kScenarioDir / "honest_p2.json").string() +
                            " --out " + prefix);
  CHECK(rc == 0);
  CHECK(fs::exists(prefix + ".report.json"));
  CHECK(fs::exists(prefix + ".trace.jsonl"));
  const std::string report = slurp(prefix + ".report.json");
  CHECK(report.find("\"expect_ok\": true") != std::string::npos);
}

TEST_CASE("cli binary: failing expect yields nonzero exit") {
  const auto dir = temp_dir();
  const auto path = dir / "will_fail.json";
  auto file = load_scenario((kScenarioDir / "honest_p2.json").string());
  REQUIRE(file.ok());
  Json j = scenario_to_json(*file);
  j["expect"] = Json::array({Json{{"check", "fix_verdict"}, {"equals", "INCONSISTENT"}}});
  std::ofstream(path) << j.dump(2);
  CHECK(run_binary("run " + path.string() + " --out " + (dir / "wf").string()) == 1);
}

TEST_CASE("cli binary: plot flag emits an svg") {
  const auto dir = temp_dir();
  const auto prefix = (dir / "plot").string();
  const int rc = run_binary("run " + (kScenarioDir / "honest_p2.json").string() + " --out " +
                            prefix + " --plot");
  CHECK(rc == 0);
  const std::string svg = slurp(prefix + ".svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polygon") != std::string::npos);  // navaid markers
}

TEST_CASE("cli binary: suite runs the corpus and a corrupted file is INVALID") {
  const auto dir = temp_dir() / "suite";
  fs::create_directories(dir);
  fs::copy_file(kScenarioDir / "p4_honest.json", dir / "p4_honest.json",
                fs::copy_options::overwrite_existing);
  std::ofstream(dir / "corrupt.json") << "{ nope";
  const std::string cmd = std::string(NAVSEC_BIN) + " suite " + dir.string() + " > " +
                          (dir / "out.txt").string() + " 2>&1";
  const int rc = WEXITSTATUS(std::system(cmd.c_str()));
  CHECK(rc == 1);  // the corrupt file fails the suite
  const std::string out = slurp(dir / "out.txt");
  CHECK(out.find("INVALID") != std::string::npos);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(out.find("1/2 passed") != std::string::npos);
}

TEST_CASE("cli binary: cert keygen, issue, verify, chain round trip") {
  const auto dir = temp_dir() / "certs";
  fs::create_directories(dir);
  const std::string root = (dir / "root").string();
  const std::string navaid = (dir / "navaid").string();
  const std::string seed1(64, '1');
  const std::string seed2(64, '2');

  CHECK(run_binary("cert keygen --algo test --seed " + seed1 + " --out " + root) == 0);
  CHECK(run_binary("cert keygen --algo test --seed " + seed2 + " --out " + navaid) == 0);
  REQUIRE(fs::exists(root + ".key"));

  const std::string cert_path = (dir / "n1.cert").string();
  CHECK(run_binary("cert issue --key " + root + ".key --subject N1 --from 0 --to 1000000 "
                   "--assert delegate=" + navaid + ".pub --assert position=100,200,300 "
                   "--assert cryptosec=2 --assert procdelay=25000 --out " + cert_path) == 0);

  // valid inside the window
  CHECK(run_binary("cert verify --cert " + cert_path + " --now 500") == 0);
  // Expired one tick past valid_to
  CHECK(run_binary("cert verify --cert " + cert_path + " --now 1000001") == 4);

  // chain resolution against a policy holding the root
  auto rootpub = cli::certio::load_public(root + ".pub");
  REQUIRE(rootpub.ok());
  const auto policy_path = dir / "policy.json";
  std::ofstream(policy_path) << Json{{"roots", Json::array({Json{
                                         {"algo", "test"},
                                         {"public", to_hex(rootpub->bytes)}}})}}
                                    .dump();
  CHECK(run_binary("cert chain --id N1 --now 500 --policy " + policy_path.string() + " " +
                   cert_path) == 0);
  // with the certificate revoked, the path dies
  auto cert = cli::certio::load_certificate(cert_path);
  REQUIRE(cert.ok());
  std::ofstream(policy_path) << Json{{"roots", Json::array({Json{
                                         {"algo", "test"},
                                         {"public", to_hex(rootpub->bytes)}}})},
                                     {"revoked", Json::array({to_hex(cert->digest().bytes)})}}
                                    .dump();
  CHECK(run_binary("cert chain --id N1 --now 500 --policy " + policy_path.string() + " " +
                   cert_path) == 3);
}
