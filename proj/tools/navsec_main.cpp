// navsec: scenario runner and certificate tool for the secure
// radionavigation simulator.
//
//   navsec run <scenario.json> [--seed N] [--out prefix] [--plot]
//   navsec suite <dir> [--jobs N]
//   navsec cert keygen|issue|verify|chain ...
//
// NAVSEC_LOG=1 adds progress detail on stderr.

#include <CLI11.hpp>

#include <iostream>
#include <random>

#include "navsec/cli.hpp"

namespace {

using namespace navsec;

int cmd_cert_keygen(const std::string& algo_name, const std::string& seed_hex,
                    const std::string& out_prefix) {
  const crypto::Algo algo =
      algo_name == "real" ? crypto::Algo::Real : crypto::Algo::Test;
  crypto::Seed32 seed{};
  if (!seed_hex.empty()) {
    auto bytes = from_hex(seed_hex);
    if (!bytes || bytes->size() != 32) {
      std::cerr << "error: --seed must be 32 bytes of hex\n";
      return 2;
    }
    std::copy(bytes->begin(), bytes->end(), seed.begin());
  } else {
    std::random_device rd;
    for (auto& b : seed) b = static_cast<uint8_t>(rd());
  }
  const crypto::KeyPair kp = crypto::backend(algo).keypair(seed);
  auto ok = cli::certio::write_keypair(kp, out_prefix);
  if (!ok.ok()) {
    std::cerr << "error: " << ok.error().detail << "\n";
    return 3;
  }
  std::cout << "wrote " << out_prefix << ".key and " << out_prefix << ".pub\n";
  return 0;
}

int cmd_cert_issue(const std::string& key_path, const std::string& subject,
                   int64_t from_ns, int64_t to_ns, const std::vector<std::string>& asserts,
                   const std::string& out_path, bool dump_json) {
  auto kp = cli::certio::load_keypair(key_path);
  if (!kp.ok()) {
    std::cerr << "error: " << kp.error().detail << "\n";
    return 3;
  }
  auto id = NodeId::from_label(subject);
  if (!id) {
    std::cerr << "error: subject must be a label of at most 8 printable bytes\n";
    return 2;
  }
  std::vector<certs::Assertion> assertions;
  for (const std::string& spec : asserts) {
    auto a = cli::certio::parse_assertion(spec);
    if (!a.ok()) {
      std::cerr << "error: " << a.error().detail << "\n";
      return 2;
    }
    assertions.push_back(*a);
  }
  const certs::Certificate cert =
      certs::issue(kp->priv, *id, std::move(assertions), SimTime{from_ns}, SimTime{to_ns});
  auto ok = cli::certio::write_certificate(cert, out_path);
  if (!ok.ok()) {
    std::cerr << "error: " << ok.error().detail << "\n";
    return 3;
  }
  if (dump_json) std::cout << cli::certio::certificate_to_json(cert).dump(2) << "\n";
  return 0;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::BadSignature: return 2;
    case Errc::NoTrustPath: return 3;
    case Errc::Expired: return 4;
    case Errc::Revoked: return 5;
    default: return 6;
  }
}

int cmd_cert_verify(const std::string& cert_path, int64_t now_ns,
                    const std::string& policy_path, bool dump_json) {
  auto cert = cli::certio::load_certificate(cert_path);
  if (!cert.ok()) {
    std::cerr << "error: " << errc_name(cert.code()) << ": " << cert.error().detail << "\n";
    return 3;
  }
  if (dump_json) std::cout << cli::certio::certificate_to_json(*cert).dump(2) << "\n";

  Expected<void> result = [&]() -> Expected<void> {
    if (!policy_path.empty()) {
      auto policy = cli::certio::load_policy(policy_path);
      if (!policy.ok()) return policy.error();
      return certs::verify(*cert, SimTime{now_ns}, *policy);
    }
    return certs::verify(*cert, SimTime{now_ns});
  }();

  if (result.ok()) {
    std::cout << "valid\n";
    return 0;
  }
  std::cout << errc_name(result.code()) << ": " << result.error().detail << "\n";
  return exit_code_for(result.code());
}

int cmd_cert_chain(const std::string& subject, int64_t now_ns, const std::string& policy_path,
                   const std::vector<std::string>& cert_paths) {
  auto id = NodeId::from_label(subject);
  if (!id) {
    std::cerr << "error: bad subject label\n";
    return 2;
  }
  auto policy = cli::certio::load_policy(policy_path);
  if (!policy.ok()) {
    std::cerr << "error: " << policy.error().detail << "\n";
    return 3;
  }
  std::vector<certs::Certificate> chain;
  for (const auto& path : cert_paths) {
    auto cert = cli::certio::load_certificate(path);
    if (!cert.ok()) {
      std::cerr << "error: " << path << ": " << cert.error().detail << "\n";
      return 3;
    }
    chain.push_back(*cert);
  }
  auto key = certs::resolve_key(*id, chain, *policy, SimTime{now_ns});
  if (!key.ok()) {
    std::cout << errc_name(key.code()) << ": " << key.error().detail << "\n";
    return exit_code_for(key.code());
  }
  std::cout << nlohmann::ordered_json{{"algo", crypto::algo_name(key->algo)},
                                      {"public", to_hex(key->bytes)}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure radionavigation protocol simulator"};
  app.require_subcommand(1);

  // run
  std::string run_path, run_out;
  uint64_t run_seed = 0;
  bool run_seed_set = false, run_plot = false;
  auto* run = app.add_subcommand("run", "run one scenario and write trace + report");
  run->add_option("scenario", run_path, "scenario or report JSON")->required();
  run->add_option("--seed", run_seed, "override the scenario seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--out", run_out, "output prefix (default: scenario name)");
  run->add_flag("--plot", run_plot, "also write a static SVG of the geometry");

  // suite
  std::string suite_dir;
  int suite_jobs = 1;
  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("dir", suite_dir, "directory of scenario JSON files")->required();
  suite->add_option("--jobs", suite_jobs, "parallel scenario runs");

  // cert
  auto* cert = app.add_subcommand("cert", "issue, verify and chain certificates");
  cert->require_subcommand(1);

  std::string kg_algo = "test", kg_seed, kg_out = "key";
  auto* keygen = cert->add_subcommand("keygen", "generate a keypair");
  keygen->add_option("--algo", kg_algo, "test or real")
      ->check(CLI::IsMember({"test", "real"}));
  keygen->add_option("--seed", kg_seed, "32-byte hex seed (default: random)");
  keygen->add_option("--out", kg_out, "output file prefix");

  std::string is_key, is_subject, is_out = "cert.bin";
  int64_t is_from = 0, is_to = 0;
  std::vector<std::string> is_asserts;
  bool is_json = false;
  auto* issue = cert->add_subcommand("issue", "issue a certificate");
  issue->add_option("--key", is_key, "certifier .key file")->required();
  issue->add_option("--subject", is_subject, "subject node label")->required();
  issue->add_option("--from", is_from, "validity start, ns")->required();
  issue->add_option("--to", is_to, "validity end, ns")->required();
  issue->add_option("--assert", is_asserts,
                    "assertion, e.g. position=0,0,0 delegate=node.pub cryptosec=2");
  issue->add_option("--out", is_out, "output certificate file");
  issue->add_flag("--json", is_json, "print the JSON debug form");

  std::string vf_cert, vf_policy;
  int64_t vf_now = 0;
  bool vf_json = false;
  auto* verify = cert->add_subcommand("verify", "verify one certificate");
  verify->add_option("--cert", vf_cert, "certificate file")->required();
  verify->add_option("--now", vf_now, "verification time, ns")->required();
  verify->add_option("--policy", vf_policy, "trust policy JSON (for revocation)");
  verify->add_flag("--json", vf_json, "print the JSON debug form");

  std::string ch_subject, ch_policy;
  int64_t ch_now = 0;
  std::vector<std::string> ch_certs;
  auto* chain = cert->add_subcommand("chain", "resolve a key through a delegation chain");
  chain->add_option("--id", ch_subject, "subject node label")->required();
  chain->add_option("--now", ch_now, "resolution time, ns")->required();
  chain->add_option("--policy", ch_policy, "trust policy JSON with root keys")->required();
  chain->add_option("certs", ch_certs, "certificate files")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return navsec::cli::cmd_run(run_path,
                                run_seed_set ? std::optional<uint64_t>(run_seed) : std::nullopt,
                                run_out, run_plot);
  if (suite->parsed()) return navsec::cli::cmd_suite(suite_dir, suite_jobs);
  if (keygen->parsed()) return cmd_cert_keygen(kg_algo, kg_seed, kg_out);
  if (issue->parsed())
    return cmd_cert_issue(is_key, is_subject, is_from, is_to, is_asserts, is_out, is_json);
  if (verify->parsed()) return cmd_cert_verify(vf_cert, vf_now, vf_policy, vf_json);
  if (chain->parsed()) return cmd_cert_chain(ch_subject, ch_now, ch_policy, ch_certs);
  return 0;
}
