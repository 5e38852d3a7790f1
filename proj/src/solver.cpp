#include "navsec/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace navsec::solver {

namespace {

constexpr double kHuge = std::numeric_limits<double>::infinity();

struct FitResult {
  Position x;
  double bias_ns = 0;
  double delay_ns = 0;
  double residual_rms = kHuge;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

double rms(const Eigen::VectorXd& r) { return std::sqrt(r.squaredNorm() / r.size()); }

Position centroid_of(const PseudorangeSet& set) {
  Position c;
  const double n = static_cast<double>(set.entries.size());
  for (const auto& e : set.entries) c = c + e.p * (1.0 / n);
  return c;
}

// Gauss-Newton with Levenberg damping on parameters
// [x y z (bias_ns) (delay_ns of one entry)].
FitResult fit(const PseudorangeSet& set, bool solve_bias, int delay_index,
              const SolverConfig& cfg, const Position& init) {
  const auto& e = set.entries;
  const int n = static_cast<int>(e.size());
  const int dims = 3 + (solve_bias ? 1 : 0) + (delay_index >= 0 ? 1 : 0);

  FitResult out;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dims);
  theta[0] = init.x;
  theta[1] = init.y;
  theta[2] = init.z;

  auto unpack = [&](const Eigen::VectorXd& th, Position& x, double& b, double& d) {
    x = {th[0], th[1], th[2]};
    b = solve_bias ? th[3] : 0.0;
    d = delay_index >= 0 ? th[dims - 1] : 0.0;
  };

  auto residuals = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r) {
    Position x;
    double b, d;
    unpack(th, x, b, d);
    r.resize(n);
    for (int i = 0; i < n; ++i)
      r[i] = entry_residual_m(e[i], x, b, i == delay_index ? d : 0.0);
  };

  Eigen::VectorXd r(n), r_try(n);
  residuals(theta, r);
  double cost = r.squaredNorm();
  double lambda = 0.0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    out.iterations = iter + 1;
    Position x;
    double b, d;
    unpack(theta, x, b, d);

    Eigen::MatrixXd J(n, dims);
    for (int i = 0; i < n; ++i) {
      const Position diff = x - e[i].p;
      double dist = norm(diff);
      if (dist < 1e-9) dist = 1e-9;  // client on top of a navaid
      J(i, 0) = -diff.x / dist;
      J(i, 1) = -diff.y / dist;
      J(i, 2) = -diff.z / dist;
      if (solve_bias) J(i, 3) = -kMetersPerNs;
      if (delay_index >= 0) J(i, dims - 1) = i == delay_index ? -kMetersPerNs : 0.0;
    }

    Eigen::MatrixXd H = J.transpose() * J;
    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const double emin = es.eigenvalues().minCoeff();
      const double emax = es.eigenvalues().maxCoeff();
      if (emin <= 0 || emax / emin > cfg.singular_condition_limit) {
        out.singular = true;
        break;
      }
    }
    const Eigen::VectorXd g = J.transpose() * r;

    // Try a step; on cost increase, raise damping and retry.
    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd Hd = H;
      for (int k = 0; k < dims; ++k) Hd(k, k) += lambda * H(k, k);
      const Eigen::VectorXd step = Hd.ldlt().solve(-g);
      residuals(theta + step, r_try);
      const double cost_try = r_try.squaredNorm();
      if (cost_try <= cost) {
        const double improvement = cost - cost_try;
        theta += step;
        r = r_try;
        cost = cost_try;
        lambda = lambda > 1e-12 ? lambda / 4 : 0.0;
        const double pos_step =
            std::sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2]);
        if (pos_step < cfg.step_tolerance_m) out.converged = true;
        // Stop once steps stop buying anything; near the optimum of
        // quantized data GN jitters within the noise floor.
        if (improvement <= 1e-14 * (cost + 1e-30)) out.converged = true;
        stepped = true;
        break;
      }
      lambda = lambda == 0.0 ? 1e-6 : lambda * 10;
    }
    if (!stepped) {
      // Damping exhausted without improvement: already at a minimum.
      out.converged = true;
    }
    if (out.converged) break;
  }

  unpack(theta, out.x, out.bias_ns, out.delay_ns);
  out.residual_rms = rms(r);
  return out;
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::CLEAN: return "CLEAN";
    case Verdict::MEACONING_DETECTED: return "MEACONING_DETECTED";
    case Verdict::INCONSISTENT: return "INCONSISTENT";
    case Verdict::UNDERDETERMINED: return "UNDERDETERMINED";
  }
  return "unknown";
}

double entry_residual_m(const PseudorangeEntry& e, const Position& x, double bias_ns,
                        double delay_ns_for_entry) {
  const double measured_m =
      (static_cast<double>(e.rx - e.t) - bias_ns - delay_ns_for_entry) * kMetersPerNs;
  return measured_m - distance(x, e.p);
}

std::vector<PairViolation> pairwise_timestamp_check(const PseudorangeSet& set) {
  std::vector<PairViolation> out;
  const auto& e = set.entries;
  const int64_t slack = 2 * set.client_quantization_ns + set.extra_slack_ns;
  for (size_t i = 0; i < e.size(); ++i) {
    for (size_t j = i + 1; j < e.size(); ++j) {
      const int64_t dt_rx = e[i].rx - e[j].rx;
      const int64_t dt_tx = e[i].t - e[j].t;
      const int64_t discrepancy = std::llabs(dt_rx - dt_tx);
      const int64_t bound = tof_ns(e[i].p, e[j].p) + slack;
      if (discrepancy > bound) out.push_back({e[i].id, e[j].id, discrepancy, bound});
    }
  }
  return out;
}

Expected<PositionFix> solve_fix(const PseudorangeSet& set, const SolverConfig& cfg) {
  const int n = static_cast<int>(set.entries.size());
  if (n < 3) {
    PositionFix fix;
    fix.verdict = Verdict::UNDERDETERMINED;
    return fix;
  }

  const bool solve_bias = n >= 4;
  const Position centroid = centroid_of(set);

  FitResult base;
  base.singular = true;  // overwritten below
  if (n == 3) {
    // The centroid of three navaids lies in their plane, where the line-of-
    // sight vectors are rank 2, so start off-plane. Both sides are tried:
    // three ranges admit mirror solutions across the navaid plane and the
    // lower-residual fit wins (ties keep the first side).
    const Position a = set.entries[1].p - set.entries[0].p;
    const Position b = set.entries[2].p - set.entries[0].p;
    Position normal{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    const double nn = norm(normal);
    double h = 0;
    for (const auto& en : set.entries) h += distance(en.p, centroid) / 3.0;
    if (nn < 1e-9 * h * h) {
      // collinear navaids: every start is rank-deficient
      return Error{Errc::SingularGeometry, "collinear navaid geometry"};
    }
    normal = normal * (1.0 / nn);
    base = fit(set, solve_bias, -1, cfg, centroid + normal * h);
    const FitResult mirror = fit(set, solve_bias, -1, cfg, centroid - normal * h);
    if (!mirror.singular && mirror.converged &&
        (base.singular || !base.converged || mirror.residual_rms < base.residual_rms))
      base = mirror;
  } else {
    base = fit(set, solve_bias, -1, cfg, centroid);
  }
  const bool base_ok = !base.singular && base.converged;
  // With fewer than five entries there is no fault hypothesis to fall back
  // on, so a degenerate no-fault fit is the final word. With five or more, a
  // large fault can legitimately wreck the no-fault fit (it drags the
  // solution far outside the constellation); the hypothesis fits below still
  // get their chance, and a wrecked base fit just means "none" lost.
  if (!base_ok && n < 5) {
    if (base.singular)
      return Error{Errc::SingularGeometry, "normal equations ill conditioned"};
    return Error{Errc::NoConvergence, "iteration cap reached"};
  }

  PositionFix fix;
  fix.position = base.x;
  fix.bias_ns = base.bias_ns;
  fix.residual_rms_m = base.residual_rms;
  fix.iterations = base.iterations;
  fix.verdict = Verdict::CLEAN;

  if (n >= 5) {
    // RAIM-style single-fault enumeration: try "navaid i is delayed" for
    // each i, keeping only physical hypotheses (a meaconer can add delay,
    // never remove it). With 5 entries every single-fault hypothesis is a
    // 0-DOF interpolation, so residuals alone cannot name the culprit; the
    // pairwise timestamp bound supplies identification whenever the delay
    // exceeds the inter-navaid travel-time bound, and takes precedence.
    std::vector<FitResult> fits(n);
    std::vector<bool> valid(n, false);
    for (int i = 0; i < n; ++i) {
      fits[i] = fit(set, true, i, cfg, centroid);
      valid[i] = !fits[i].singular && fits[i].converged && fits[i].delay_ns > 0;
    }

    // Unanimous pairwise indictment: one navaid present in every violating
    // pair, and every one of its pairs violating.
    int indicted = -1;
    {
      const auto violations = pairwise_timestamp_check(set);
      if (!violations.empty()) {
        for (int i = 0; i < n; ++i) {
          const NodeId& id = set.entries[i].id;
          size_t involving = 0;
          bool all_involve = true;
          for (const auto& v : violations) {
            if (v.a == id || v.b == id) ++involving;
            else all_involve = false;
          }
          if (all_involve && involving == static_cast<size_t>(n - 1)) {
            indicted = i;
            break;
          }
        }
      }
    }

    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      if (best < 0 || fits[i].residual_rms < fits[best].residual_rms) best = i;
    }
    if (indicted >= 0 && valid[indicted]) best = indicted;

    if (best >= 0) {
      // Floor keeps the ratio meaningful when both residuals sit at the
      // quantization noise level (or at raw float noise for ideal clocks).
      const double floor_m =
          std::max(kMetersPerNs * static_cast<double>(set.client_quantization_ns), 1e-6);
      const double none_rms =
          base_ok ? base.residual_rms : std::numeric_limits<double>::infinity();
      const bool decisive =
          none_rms >= cfg.detection_ratio * std::max(fits[best].residual_rms, floor_m);
      if (decisive) {
        fix.position = fits[best].x;
        fix.bias_ns = fits[best].bias_ns;
        fix.residual_rms_m = fits[best].residual_rms;
        fix.iterations = fits[best].iterations;
        fix.meacon = MeaconEstimate{set.entries[best].id, fits[best].delay_ns};
        fix.verdict = Verdict::MEACONING_DETECTED;
      }
    }
  }
  if (!base_ok && fix.verdict != Verdict::MEACONING_DETECTED) {
    if (base.singular)
      return Error{Errc::SingularGeometry, "normal equations ill conditioned"};
    return Error{Errc::NoConvergence, "iteration cap reached"};
  }
  return fix;
}

Verdict geometry_consistency(const PseudorangeSet& set, const PositionFix& fix,
                             const SolverConfig& cfg) {
  if (set.entries.empty()) return Verdict::UNDERDETERMINED;
  double sum = 0;
  for (const auto& e : set.entries) {
    double delay = 0;
    if (fix.meacon && e.id == fix.meacon->navaid) delay = fix.meacon->delay_ns;
    const double r = entry_residual_m(e, fix.position, fix.bias_ns, delay);
    sum += r * r;
  }
  const double rms_m = std::sqrt(sum / static_cast<double>(set.entries.size()));
  return rms_m > cfg.residual_threshold_m ? Verdict::INCONSISTENT : Verdict::CLEAN;
}

SimTime time_lower_bound(const PseudorangeSet& set) {
  SimTime bound{0};
  for (const auto& e : set.entries) bound = std::max(bound, e.t);
  return bound;
}

}  // namespace navsec::solver
