#include "navsec/wire.hpp"

#include <cmath>

namespace navsec::wire {

namespace {

void put_header(ByteWriter& w, MsgType t) {
  w.u8(static_cast<uint8_t>(t));
  w.u8(kVersion);
}

void put_position(ByteWriter& w, const Position& p) {
  w.f64(p.x);
  w.f64(p.y);
  w.f64(p.z);
}

Position get_position(ByteReader& r) {
  Position p;
  p.x = r.f64();
  p.y = r.f64();
  p.z = r.f64();
  return p;
}

void put_direction(ByteWriter& w, const Direction& d) {
  w.f64(d.azimuth);
  w.f64(d.elevation);
}

Direction get_direction(ByteReader& r) {
  Direction d;
  d.azimuth = r.f64();
  d.elevation = r.f64();
  return d;
}

void put_id(ByteWriter& w, const NodeId& id) { w.raw(id.bytes); }

NodeId get_id(ByteReader& r) {
  NodeId id;
  id.bytes = r.fixed<8>();
  return id;
}

// Field encoders shared between encode() and signed_prefix(): the signature
// is always the trailing field of a signed message.
void put_beacon_body(ByteWriter& w, const Beacon& m) {
  put_position(w, m.p);
  put_direction(w, m.d);
  w.u64(static_cast<uint64_t>(m.t.ns));
  put_id(w, m.i);
}

void put_commit_body(ByteWriter& w, const Commit& m) {
  w.raw(m.commitment);
  w.u64(static_cast<uint64_t>(m.t1.ns));
  put_id(w, m.i);
}

void put_auth_body(ByteWriter& w, const Auth& m) {
  put_position(w, m.p);
  put_direction(w, m.d);
  w.u64(static_cast<uint64_t>(m.t.ns));
  put_id(w, m.i);
  w.raw(m.r_c);
  w.raw(m.r_n);
}

void put_range_report_body(ByteWriter& w, const RangeReport& m) {
  w.f64(m.range_m);
  w.u64(static_cast<uint64_t>(m.t.ns));
  put_id(w, m.i);
}

void put_keyex_body(ByteWriter& w, const KeyExchange& m) {
  put_id(w, m.client);
  w.u64(static_cast<uint64_t>(m.t.ns));
  w.raw(m.key_id);
  w.raw(m.key);
}

// Walks a certificate's framing without interpreting it: subject, validity
// window, certifier key, assertion list, signature. Returns false if any
// length field is inconsistent.
bool walk_cert_frame(ByteReader& r) {
  r.fixed<8>();   // subject
  r.u64();        // valid_from
  r.u64();        // valid_to
  r.u8();         // certifier algo
  r.skip_var();   // certifier key bytes
  const uint16_t n_assertions = r.u16();
  for (uint16_t k = 0; k < n_assertions && !r.failed(); ++k) {
    r.u8();        // assertion kind
    r.skip_var();  // assertion value
  }
  r.u8();        // signature algo
  r.skip_var();  // signature bytes
  return !r.failed();
}

Error malformed(const std::string& why) { return Error{Errc::MalformedMessage, why}; }

}  // namespace

MsgType type_of(const Message& m) {
  struct V {
    MsgType operator()(const Beacon&) { return MsgType::Beacon; }
    MsgType operator()(const Commit&) { return MsgType::Commit; }
    MsgType operator()(const Reveal&) { return MsgType::Reveal; }
    MsgType operator()(const Interrogate&) { return MsgType::Interrogate; }
    MsgType operator()(const Respond&) { return MsgType::Respond; }
    MsgType operator()(const Auth&) { return MsgType::Auth; }
    MsgType operator()(const RangeReport&) { return MsgType::RangeReport; }
    MsgType operator()(const CertMsg&) { return MsgType::Cert; }
    MsgType operator()(const KeyExchange&) { return MsgType::KeyExchange; }
    MsgType operator()(const SymEnvelope&) { return MsgType::SymEnvelope; }
    MsgType operator()(const PkEnvelope&) { return MsgType::PkEnvelope; }
  };
  return std::visit(V{}, m);
}

const char* type_name(MsgType t) {
  switch (t) {
    case MsgType::Beacon: return "beacon";
    case MsgType::Commit: return "commit";
    case MsgType::Reveal: return "reveal";
    case MsgType::Interrogate: return "interrogate";
    case MsgType::Respond: return "respond";
    case MsgType::Auth: return "auth";
    case MsgType::RangeReport: return "range_report";
    case MsgType::Cert: return "cert";
    case MsgType::KeyExchange: return "key_exchange";
    case MsgType::SymEnvelope: return "sym_envelope";
    case MsgType::PkEnvelope: return "pk_envelope";
  }
  return "unknown";
}

Bytes encode(const Message& m) {
  ByteWriter w;
  if (const auto* b = std::get_if<Beacon>(&m)) {
    put_header(w, MsgType::Beacon);
    put_beacon_body(w, *b);
    w.var(b->sig);
  } else if (const auto* c = std::get_if<Commit>(&m)) {
    put_header(w, MsgType::Commit);
    put_commit_body(w, *c);
    w.var(c->sig);
  } else if (const auto* v = std::get_if<Reveal>(&m)) {
    put_header(w, MsgType::Reveal);
    w.raw(v->r);
    w.u64(static_cast<uint64_t>(v->t2.ns));
    put_id(w, v->i);
  } else if (const auto* q = std::get_if<Interrogate>(&m)) {
    put_header(w, MsgType::Interrogate);
    w.raw(q->r_c);
    w.u64(static_cast<uint64_t>(q->t.ns));
  } else if (const auto* p = std::get_if<Respond>(&m)) {
    put_header(w, MsgType::Respond);
    w.raw(p->r_c);
    w.raw(p->r_n);
  } else if (const auto* a = std::get_if<Auth>(&m)) {
    put_header(w, MsgType::Auth);
    put_auth_body(w, *a);
    w.var(a->sig);
  } else if (const auto* rr = std::get_if<RangeReport>(&m)) {
    put_header(w, MsgType::RangeReport);
    put_range_report_body(w, *rr);
    w.var(rr->sig);
  } else if (const auto* cm = std::get_if<CertMsg>(&m)) {
    return cm->encoded;  // already a complete message
  } else if (const auto* kx = std::get_if<KeyExchange>(&m)) {
    put_header(w, MsgType::KeyExchange);
    put_keyex_body(w, *kx);
    w.var(kx->sig);
  } else if (const auto* se = std::get_if<SymEnvelope>(&m)) {
    put_header(w, MsgType::SymEnvelope);
    w.u8(se->algo);
    w.raw(se->key_id);
    w.raw(se->nonce);
    w.var(se->ct);
  } else if (const auto* pe = std::get_if<PkEnvelope>(&m)) {
    put_header(w, MsgType::PkEnvelope);
    w.u8(pe->algo);
    w.raw(pe->recipient);
    w.var(pe->ct);
  }
  return w.take();
}

Expected<Message> decode(ConstBytes buf) {
  if (buf.empty()) return malformed("empty buffer");
  ByteReader r(buf);
  const uint8_t raw_type = r.u8();
  const uint8_t version = r.u8();
  if (r.failed()) return malformed("short header");
  if (version != kVersion) return malformed("unsupported version");

  Message out;
  switch (static_cast<MsgType>(raw_type)) {
    case MsgType::Beacon: {
      Beacon m;
      m.p = get_position(r);
      m.d = get_direction(r);
      m.t = SimTime{static_cast<int64_t>(r.u64())};
      m.i = get_id(r);
      m.sig = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::Commit: {
      Commit m;
      m.commitment = r.fixed<32>();
      m.t1 = SimTime{static_cast<int64_t>(r.u64())};
      m.i = get_id(r);
      m.sig = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::Reveal: {
      Reveal m;
      m.r = r.fixed<32>();
      m.t2 = SimTime{static_cast<int64_t>(r.u64())};
      m.i = get_id(r);
      out = m;
      break;
    }
    case MsgType::Interrogate: {
      Interrogate m;
      m.r_c = r.fixed<32>();
      m.t = SimTime{static_cast<int64_t>(r.u64())};
      out = m;
      break;
    }
    case MsgType::Respond: {
      Respond m;
      m.r_c = r.fixed<32>();
      m.r_n = r.fixed<32>();
      out = m;
      break;
    }
    case MsgType::Auth: {
      Auth m;
      m.p = get_position(r);
      m.d = get_direction(r);
      m.t = SimTime{static_cast<int64_t>(r.u64())};
      m.i = get_id(r);
      m.r_c = r.fixed<32>();
      m.r_n = r.fixed<32>();
      m.sig = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::RangeReport: {
      RangeReport m;
      m.range_m = r.f64();
      m.t = SimTime{static_cast<int64_t>(r.u64())};
      m.i = get_id(r);
      m.sig = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::Cert: {
      if (!walk_cert_frame(r)) return malformed("bad certificate framing");
      if (r.remaining() != 0) return malformed("trailing bytes");
      return Message{CertMsg{Bytes(buf.begin(), buf.end())}};
    }
    case MsgType::KeyExchange: {
      KeyExchange m;
      m.client = get_id(r);
      m.t = SimTime{static_cast<int64_t>(r.u64())};
      m.key_id = r.fixed<8>();
      m.key = r.fixed<32>();
      m.sig = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::SymEnvelope: {
      SymEnvelope m;
      m.algo = r.u8();
      m.key_id = r.fixed<8>();
      m.nonce = r.fixed<12>();
      m.ct = r.var();
      out = std::move(m);
      break;
    }
    case MsgType::PkEnvelope: {
      PkEnvelope m;
      m.algo = r.u8();
      m.recipient = r.fixed<8>();
      m.ct = r.var();
      out = std::move(m);
      break;
    }
    default:
      return malformed("unknown message type");
  }
  if (r.failed()) return malformed("truncated message");
  if (r.remaining() != 0) return malformed("trailing bytes");
  return out;
}

Bytes signed_prefix(const Message& m) {
  ByteWriter w;
  if (const auto* b = std::get_if<Beacon>(&m)) {
    put_header(w, MsgType::Beacon);
    put_beacon_body(w, *b);
  } else if (const auto* c = std::get_if<Commit>(&m)) {
    put_header(w, MsgType::Commit);
    put_commit_body(w, *c);
  } else if (const auto* a = std::get_if<Auth>(&m)) {
    put_header(w, MsgType::Auth);
    put_auth_body(w, *a);
  } else if (const auto* rr = std::get_if<RangeReport>(&m)) {
    put_header(w, MsgType::RangeReport);
    put_range_report_body(w, *rr);
  } else if (const auto* kx = std::get_if<KeyExchange>(&m)) {
    put_header(w, MsgType::KeyExchange);
    put_keyex_body(w, *kx);
  }
  return w.take();
}

}  // namespace navsec::wire
