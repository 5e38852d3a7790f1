#pragma once

// State machines for the five secure radionavigation protocols and their
// combiners, on both navaid and client sides.
//
//   P1  passive signal-content: signed (position, direction, timestamp, id)
//       beacons with a freshness gate against replay.
//   P2  passive time-of-flight: the same beacons consumed as pseudoranges.
//   P3  passive time-of-flight, pre-authenticated: a signed hash commitment
//       followed by a bare reveal, so the timing-critical packet needs no
//       signature check.
//   P4  active distance bounding under a pre-arranged symmetric key.
//   P5  active distance bounding, post-authenticated with a signed,
//       public-key-encrypted statement binding both nonces.
//
// Every function charges its cryptographic work to an OpCounters so callers
// can account simulated latency and assert which phases are free of
// asymmetric operations.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "navsec/certs.hpp"
#include "navsec/crypto.hpp"
#include "navsec/solver.hpp"
#include "navsec/types.hpp"
#include "navsec/wire.hpp"

namespace navsec::proto {

struct Config {
  int64_t freshness_window_ns = 5 * kMillisecondNs;  // beacon staleness gate
  int64_t clock_tolerance_ns = 2;                    // future-timestamp gate, see resolve_clock_tolerance
  int64_t p4_timestamp_window_ns = 10 * kMillisecondNs;
  int64_t nonce_cache_ttl_ns = 20 * kMillisecondNs;
  int64_t commit_ttl_ns = 100 * kMillisecondNs;
  int64_t response_timeout_ns = 20 * kMillisecondNs;

  // Simulated latency of cryptographic operations, charged as processing
  // time by the simulator. Asymmetric work is three orders of magnitude
  // slower than symmetric work.
  int64_t sign_latency_ns = 2 * kMillisecondNs;
  int64_t verify_latency_ns = 1 * kMillisecondNs;
  int64_t pk_latency_ns = 1 * kMillisecondNs;
  int64_t sym_latency_ns = 10 * kMicrosecondNs;

  double v_max_closure_mps = 1000.0;  // for the daisy-chain consistency bound
  double range_tolerance_m = 1.0;
  double ray_condition_limit = 1e6;  // bearing-fix degeneracy threshold
};

// clock_tolerance = 2 x quantization + worst configured bias.
int64_t resolve_clock_tolerance(int64_t quantization_ns, int64_t max_bias_ns);

// Tally of crypto operations charged to one phase of a protocol.
struct OpCounters {
  int sign = 0;
  int verify = 0;
  int sym = 0;
  int pk = 0;
  int hash = 0;

  int asymmetric() const { return sign + verify + pk; }
  int64_t charged_ns(const Config& cfg) const {
    return sign * cfg.sign_latency_ns + verify * cfg.verify_latency_ns +
           pk * cfg.pk_latency_ns + sym * cfg.sym_latency_ns;
  }
};

// ---------------------------------------------------------------------------
// Protocol 1 / 2: signed beacons

struct BeaconObservation {
  NodeId navaid;
  Position p;
  Direction d;
  SimTime t;    // signed transmit timestamp
  SimTime rx;   // local receive time, client clock
  bool sig_valid = false;
};

wire::Beacon p1_emit(const NodeId& id, const Position& p, const Direction& d,
                     SimTime navaid_now, const crypto::PrivateKey& key, OpCounters& ops);

// Accept iff the signature verifies and the signed timestamp is fresh:
// client_now - t within [-clock_tolerance, freshness_window].
Expected<BeaconObservation> p1_accept(const wire::Beacon& b, const crypto::PublicKey& navaid_key,
                                      SimTime client_now, const Config& cfg, OpCounters& ops);

struct BearingFix {
  Position position;
  double residual_rms_m = 0;
};

// Least-squares closest point to the observation rays (origin = signed
// position, direction = signed antenna direction).
Expected<BearingFix> p1_bearing_fix(std::span<const BeaconObservation> obs,
                                    const Config& cfg = {});

// Builds solver input from signature-valid observations. Duplicate navaid
// ids keep the earliest arrival; the duplicate count is reported so callers
// can flag it.
solver::PseudorangeSet p2_collect(std::span<const BeaconObservation> obs,
                                  int64_t client_quantization_ns, int* duplicates = nullptr);

// ---------------------------------------------------------------------------
// Protocol 3: commit / reveal

struct Commitment {
  crypto::Digest digest;  // H(r, t2)
  SimTime t1;
  NodeId navaid;
  SimTime rx;
  bool verified = false;
  bool matched = false;
};

struct TimingSample {
  NodeId navaid;
  SimTime t2;   // authenticated transmit time of the reveal
  SimTime rx;   // local receive time of the reveal
};

crypto::Digest commit_digest(const crypto::Backend& b, const wire::Nonce32& r, SimTime t2,
                             OpCounters& ops);

wire::Commit p3_emit_commit(const NodeId& id, const wire::Nonce32& r, SimTime t1, SimTime t2,
                            const crypto::PrivateKey& key, OpCounters& ops);
wire::Reveal p3_emit_reveal(const NodeId& id, const wire::Nonce32& r, SimTime t2);

class CommitStore {
 public:
  // Verifies the commitment signature (asymmetric; off the hot path).
  Expected<void> accept_commit(const wire::Commit& c, const crypto::PublicKey& navaid_key,
                               SimTime rx_local, const Config& cfg, OpCounters& ops);

  // Hot path: one hash plus a table lookup, no asymmetric work.
  Expected<TimingSample> accept_reveal(const wire::Reveal& rv, SimTime rx_local,
                                       const crypto::Backend& backend, OpCounters& ops);

  void purge(SimTime now, const Config& cfg);
  size_t pending() const { return store_.size(); }

 private:
  std::vector<Commitment> store_;
};

// ---------------------------------------------------------------------------
// Protocol 4 / 5: active ranging

enum class SessionState { Sent, Completed, Authenticated, Failed };

struct RangingSession {
  wire::Nonce32 r_c{};
  SimTime t;         // interrogation timestamp (client clock)
  SimTime tx_local;  // client clock at start of transmission
  SimTime rx_local;  // client clock at end of response reception
  wire::Nonce32 r_n{};
  int64_t processing_delay_ns = 0;  // certified navaid turnaround
  SessionState state = SessionState::Sent;
  double range_m = -1;
  bool encrypted = false;  // P4 (true) vs P5 (false)
};

// Replay filter on interrogation nonces.
class NonceCache {
 public:
  // True if r_c was already seen inside its expiry window; always records
  // the nonce as seen until `now + ttl`.
  bool seen_then_insert(const wire::Nonce32& r_c, SimTime now, int64_t ttl_ns);
  void purge(SimTime now);
  size_t size() const { return seen_.size(); }

 private:
  std::map<wire::Nonce32, SimTime> seen_;
};

struct Interrogation {
  wire::Message msg;  // SymEnvelope for P4, bare Interrogate for P5
  RangingSession session;
};

Interrogation p4_interrogate(const crypto::SymmetricKey& key, const wire::Nonce32& r_c,
                             const crypto::Nonce12& nonce, SimTime client_now,
                             int64_t certified_delay_ns, OpCounters& ops);

// Navaid side. Tries every valid key; anything that does not decrypt to a
// well-formed, current, fresh interrogation is silently dropped (nullopt).
std::optional<wire::SymEnvelope> p4_respond(const wire::SymEnvelope& env,
                                            std::span<const crypto::SymmetricKey> valid_keys,
                                            NonceCache& cache, SimTime navaid_now,
                                            const wire::Nonce32& r_n,
                                            const crypto::Nonce12& reply_nonce,
                                            const Config& cfg, OpCounters& ops);

// Client side: response already decrypted to a Respond by open_sym.
Expected<double> p4_complete(RangingSession& s, const wire::Respond& resp, SimTime rx_local,
                             OpCounters& ops);

Interrogation p5_interrogate(const wire::Nonce32& r_c, SimTime client_now,
                             int64_t certified_delay_ns);

std::optional<wire::Respond> p5_respond(const wire::Interrogate& q, NonceCache& cache,
                                        SimTime navaid_now, const wire::Nonce32& r_n,
                                        const Config& cfg);

wire::Auth p5_make_auth(const NodeId& id, const Position& p, const Direction& d,
                        const RangingSession& peer_view, const crypto::PrivateKey& key,
                        OpCounters& ops);

struct AuthenticatedRange {
  double range_m = 0;
  Position p;
  Direction d;
  SimTime t;
  NodeId navaid;
};

Expected<AuthenticatedRange> p5_authenticate(RangingSession& s, const wire::Auth& auth,
                                             const crypto::PublicKey& navaid_key,
                                             OpCounters& ops);

// ---------------------------------------------------------------------------
// Envelope helpers

wire::SymEnvelope seal_sym(const crypto::SymmetricKey& key, const crypto::Nonce12& nonce,
                           const wire::Message& inner, OpCounters& ops);
Expected<wire::Message> open_sym(const wire::SymEnvelope& env,
                                 std::span<const crypto::SymmetricKey> keys, OpCounters& ops);
wire::PkEnvelope seal_pk(const crypto::PublicKey& to, const crypto::Seed32& entropy,
                         const wire::Message& inner, OpCounters& ops);
Expected<wire::Message> open_pk(const wire::PkEnvelope& env, const crypto::PrivateKey& priv,
                                OpCounters& ops);

// ---------------------------------------------------------------------------
// Combiners

enum class DaisyVerdict { CLEAN, MEACONING_SUSPECTED };

struct DaisyResult {
  double delta_m = 0;
  double bound_m = 0;
  DaisyVerdict verdict = DaisyVerdict::CLEAN;
};

struct RangeMeasurement {
  double range_m = 0;
  SimTime t;  // when the measurement completed
  NodeId reporter;
};

// Mutual-range consistency: the two independently measured ranges may differ
// by no more than the closure the nodes could have flown between the two
// measurements, plus tolerance. Symmetric in argument order.
DaisyResult combine_daisy_chain(const RangeMeasurement& a, const RangeMeasurement& b,
                                const Config& cfg);

// One observation stream for both direction fixes and TOF fixes. P3 timing
// samples take precedence over P1 beacons from the same navaid (their hot
// path carries no signature latency); positions for P3-only navaids come
// from the certified position functions.
solver::PseudorangeSet combine_p1_p2(std::span<const BeaconObservation> beacons,
                                     std::span<const TimingSample> p3_samples,
                                     const std::map<NodeId, Position>& certified_positions,
                                     int64_t client_quantization_ns);

struct ConstraintPair {
  Position navaid_p;
  double range_m = 0;
  Direction bearing;  // from the navaid toward the client, as measured

  Position implied_position() const {
    return navaid_p + bearing.unit_vector() * range_m;
  }
};

// Active timing + angle: the authenticated exchange carries the direction
// the navaid measured the interrogation arriving from.
Expected<ConstraintPair> combine_timing_angle(const RangingSession& s, const wire::Auth& auth,
                                              const crypto::PublicKey& navaid_key,
                                              OpCounters& ops);

}  // namespace navsec::proto
