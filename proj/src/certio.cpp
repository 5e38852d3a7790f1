#include <fstream>
#include <sstream>

#include "navsec/cli.hpp"

namespace navsec::cli::certio {

namespace {

Expected<Json> load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Error{Errc::IoError, "cannot open " + path};
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return Error{Errc::IoError, std::string("bad JSON in ") + path + ": " + e.what()};
  }
  return j;
}

Expected<crypto::Algo> parse_algo(const std::string& s) {
  if (s == "real") return crypto::Algo::Real;
  if (s == "test") return crypto::Algo::Test;
  return Error{Errc::IoError, "algo must be 'real' or 'test'"};
}

Expected<Bytes> hex_field(const Json& j, const char* key) {
  if (!j.contains(key)) return Error{Errc::IoError, std::string("missing field ") + key};
  auto bytes = from_hex(j[key].get<std::string>());
  if (!bytes) return Error{Errc::IoError, std::string("bad hex in ") + key};
  return *bytes;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

Expected<void> write_keypair(const crypto::KeyPair& kp, const std::string& prefix) {
  {
    std::ofstream out(prefix + ".key");
    if (!out) return Error{Errc::IoError, "cannot write " + prefix + ".key"};
    out << Json{{"algo", crypto::algo_name(kp.priv.algo)},
                {"private", to_hex(kp.priv.bytes)},
                {"public", to_hex(kp.pub.bytes)}}
               .dump(2)
        << "\n";
  }
  {
    std::ofstream out(prefix + ".pub");
    if (!out) return Error{Errc::IoError, "cannot write " + prefix + ".pub"};
    out << Json{{"algo", crypto::algo_name(kp.pub.algo)}, {"public", to_hex(kp.pub.bytes)}}
               .dump(2)
        << "\n";
  }
  return {};
}

Expected<crypto::KeyPair> load_keypair(const std::string& key_path) {
  auto j = load_json(key_path);
  if (!j.ok()) return j.error();
  auto algo = parse_algo(j->value("algo", ""));
  if (!algo.ok()) return algo.error();
  auto priv = hex_field(*j, "private");
  if (!priv.ok()) return priv.error();
  crypto::KeyPair kp;
  kp.priv = crypto::PrivateKey{*algo, *priv};
  kp.pub = crypto::backend(*algo).derive_public(kp.priv);
  return kp;
}

Expected<crypto::PublicKey> load_public(const std::string& pub_path) {
  auto j = load_json(pub_path);
  if (!j.ok()) return j.error();
  auto algo = parse_algo(j->value("algo", ""));
  if (!algo.ok()) return algo.error();
  auto pub = hex_field(*j, "public");
  if (!pub.ok()) return pub.error();
  return crypto::PublicKey{*algo, *pub};
}

Expected<certs::Certificate> load_certificate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Error{Errc::IoError, "cannot open " + path};
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return certs::Certificate::decode(bytes);
}

Expected<void> write_certificate(const certs::Certificate& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return Error{Errc::IoError, "cannot write " + path};
  const Bytes bytes = c.encode();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return {};
}

Expected<certs::TrustPolicy> load_policy(const std::string& path) {
  auto j = load_json(path);
  if (!j.ok()) return j.error();
  certs::TrustPolicy policy;
  if (j->contains("roots")) {
    for (const Json& rj : (*j)["roots"]) {
      auto algo = parse_algo(rj.value("algo", ""));
      if (!algo.ok()) return algo.error();
      auto key = hex_field(rj, "public");
      if (!key.ok()) return key.error();
      policy.roots.push_back(crypto::PublicKey{*algo, *key});
    }
  }
  if (j->contains("revoked")) {
    for (const Json& rj : (*j)["revoked"]) {
      auto digest = from_hex(rj.get<std::string>());
      if (!digest || digest->size() != 32)
        return Error{Errc::IoError, "revoked entries must be 32-byte hex digests"};
      crypto::Digest d;
      std::copy(digest->begin(), digest->end(), d.bytes.begin());
      policy.revoked.insert(d);
    }
  }
  auto parse_levels = [&](const char* key, std::map<certs::AssertionKind, uint8_t>& out) {
    if (!j->contains(key)) return;
    for (const auto& [name, level] : (*j)[key].items()) {
      for (int k = 1; k <= 0x40; ++k) {
        const auto kind = static_cast<certs::AssertionKind>(k);
        if (name == certs::assertion_kind_name(kind))
          out[kind] = static_cast<uint8_t>(level.get<int>());
      }
    }
  };
  parse_levels("min_crypto_security", policy.min_crypto_security);
  parse_levels("min_physical_security", policy.min_physical_security);
  if (j->contains("max_depth")) policy.max_depth = (*j)["max_depth"].get<int>();
  return policy;
}

Expected<certs::Assertion> parse_assertion(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    return Error{Errc::IoError, "assertion must look like kind=value: " + spec};
  const std::string kind = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);

  try {
    if (kind == "position") {
      const auto v = split_doubles(value);
      certs::PositionFunction f;
      if (v.size() == 3) {
        f.p0 = {v[0], v[1], v[2]};
      } else if (v.size() == 7) {
        f.p0 = {v[0], v[1], v[2]};
        f.velocity = {v[3], v[4], v[5]};
        f.t0 = SimTime{static_cast<int64_t>(v[6])};
        f.linear = true;
      } else {
        return Error{Errc::IoError, "position takes x,y,z or x,y,z,vx,vy,vz,t0"};
      }
      return certs::make_position_assertion(f);
    }
    if (kind == "direction") {
      const auto v = split_doubles(value);
      certs::DirectionSchedule sched;
      if (v.size() == 2) {
        sched.az0 = v[0];
        sched.elevation = v[1];
      } else if (v.size() == 4) {
        sched.az0 = v[0];
        sched.elevation = v[1];
        sched.spin_rate = v[2];
        sched.t0 = SimTime{static_cast<int64_t>(v[3])};
        sched.spinning = true;
      } else {
        return Error{Errc::IoError, "direction takes az,el or az,el,rate,t0"};
      }
      return certs::make_direction_assertion(sched);
    }
    if (kind == "delegate") {
      auto pub = load_public(value);
      if (!pub.ok()) return pub.error();
      return certs::make_delegation_assertion(*pub);
    }
    if (kind == "cryptosec")
      return certs::make_level_assertion(certs::AssertionKind::CryptoSecurityType,
                                         static_cast<uint8_t>(std::stoi(value)));
    if (kind == "physec")
      return certs::make_level_assertion(certs::AssertionKind::PhysicalSecurityLevel,
                                         static_cast<uint8_t>(std::stoi(value)));
    if (kind == "platform")
      return certs::make_level_assertion(certs::AssertionKind::PlatformType,
                                         static_cast<uint8_t>(std::stoi(value)));
    if (kind == "ownertype")
      return certs::make_level_assertion(certs::AssertionKind::OwnerType,
                                         static_cast<uint8_t>(std::stoi(value)));
    if (kind == "owner")
      return certs::make_string_assertion(certs::AssertionKind::Owner, value);
    if (kind == "tail")
      return certs::make_string_assertion(certs::AssertionKind::TailNumber, value);
    if (kind == "procdelay")
      return certs::make_processing_delay_assertion(std::stoll(value));
    if (kind == "raw") {
      const auto colon = value.find(':');
      if (colon == std::string::npos)
        return Error{Errc::IoError, "raw assertion takes KIND:HEX"};
      auto bytes = from_hex(value.substr(colon + 1));
      if (!bytes) return Error{Errc::IoError, "bad hex in raw assertion"};
      return certs::Assertion{static_cast<uint8_t>(std::stoi(value.substr(0, colon), nullptr, 0)),
                              *bytes};
    }
  } catch (const std::exception& e) {
    return Error{Errc::IoError, "bad assertion value: " + spec};
  }
  return Error{Errc::IoError, "unknown assertion kind: " + kind};
}

Json certificate_to_json(const certs::Certificate& c) {
  Json j;
  j["subject"] = c.subject.to_string();
  j["valid_from_ns"] = c.valid_from.ns;
  j["valid_to_ns"] = c.valid_to.ns;
  j["certifier"] = Json{{"algo", crypto::algo_name(c.certifier.algo)},
                        {"public", to_hex(c.certifier.bytes)}};
  Json as = Json::array();
  for (const auto& a : c.assertions) {
    Json aj;
    aj["kind"] = certs::assertion_kind_name(static_cast<certs::AssertionKind>(a.kind));
    aj["kind_byte"] = a.kind;
    aj["value_hex"] = to_hex(a.value);
    as.push_back(aj);
  }
  if (auto f = c.position_function()) {
    Json pj{{"p0", Json::array({f->p0.x, f->p0.y, f->p0.z})}};
    if (f->linear) {
      pj["velocity"] = Json::array({f->velocity.x, f->velocity.y, f->velocity.z});
      pj["t0_ns"] = f->t0.ns;
    }
    j["position_function"] = pj;
  }
  if (auto d = c.processing_delay_ns()) j["processing_delay_ns"] = *d;
  j["assertions"] = as;
  j["signature"] = Json{{"algo", crypto::algo_name(c.signature.algo)},
                        {"bytes", to_hex(c.signature.bytes)}};
  j["digest"] = to_hex(c.digest().bytes);
  return j;
}

}  // namespace navsec::cli::certio
