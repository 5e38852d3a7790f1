#pragma once

// Multilateration and fault detection over pseudoranges: Gauss-Newton with
// Levenberg damping for position + clock bias, single-meaconed-navaid delay
// recovery by hypothesis enumeration, pairwise timestamp bounds and a
// post-fit geometry consistency check.

#include <optional>
#include <vector>

#include "navsec/types.hpp"

namespace navsec::solver {

struct PseudorangeEntry {
  NodeId id;
  Position p;      // signed navaid position at transmit time
  SimTime t;       // signed transmit timestamp (navaid clock)
  SimTime rx;      // local receive timestamp (client clock)
  bool from_p3 = false;
};

struct PseudorangeSet {
  std::vector<PseudorangeEntry> entries;
  int64_t client_quantization_ns = 1;
  // Extra slack for the pairwise check on top of 2x quantization, for
  // scenarios whose navaid clocks are coarser than the client's.
  int64_t extra_slack_ns = 0;
};

enum class Verdict { CLEAN, MEACONING_DETECTED, INCONSISTENT, UNDERDETERMINED };

const char* verdict_name(Verdict v);

struct MeaconEstimate {
  NodeId navaid;
  double delay_ns = 0;
};

struct PositionFix {
  Position position;
  double bias_ns = 0;
  std::optional<MeaconEstimate> meacon;
  double residual_rms_m = 0;
  Verdict verdict = Verdict::CLEAN;
  int iterations = 0;
};

struct SolverConfig {
  double detection_ratio = 10.0;     // non-none hypothesis must cut residual this much
  double residual_threshold_m = 3.0; // geometry consistency gate
  int max_iterations = 50;
  double step_tolerance_m = 1e-10;
  double singular_condition_limit = 1e12;
};

struct PairViolation {
  NodeId a, b;
  int64_t discrepancy_ns = 0;  // |(rx_a - rx_b) - (t_a - t_b)|
  int64_t bound_ns = 0;        // distance(p_a, p_b)/c + slack
};

// Empty result means CLEAN: no pair of arrivals is further apart in time
// than the geometry between the two navaids allows.
std::vector<PairViolation> pairwise_timestamp_check(const PseudorangeSet& set);

// 3 entries: position with the clock bias pinned at zero. 4: position and
// bias. 5+: position, bias, and enumeration of single-meaconed-navaid delay
// hypotheses; the winning hypothesis must beat the no-fault residual by
// detection_ratio before MEACONING_DETECTED is declared.
Expected<PositionFix> solve_fix(const PseudorangeSet& set, const SolverConfig& cfg = {});

Verdict geometry_consistency(const PseudorangeSet& set, const PositionFix& fix,
                             const SolverConfig& cfg = {});

// Every signed transmit timestamp is a lower bound on true current time.
SimTime time_lower_bound(const PseudorangeSet& set);

// Residual of one entry at a candidate solution, in meters. Shared between
// the solver and the consistency check.
double entry_residual_m(const PseudorangeEntry& e, const Position& x, double bias_ns,
                        double delay_ns_for_entry);

}  // namespace navsec::solver
