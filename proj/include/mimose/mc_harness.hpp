// SPDX-License-Identifier: Apache-2.0
//
// Full Monte Carlo simulation of the pilot / covariance-estimation /
// combining pipeline.  Per trial it draws disjoint block sets for Qhat and
// for Rddot (fresh phase shifts per block), forms the filter for the
// requested estimator kind and records the three trace statistics that
// enter the SINR expression; simulated SE plugs the sampled means into the
// same SINR formula the closed forms use.

#pragma once

#include "mimose/se_engine.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mimose {

/// Sampled means of the SINR expectation terms with standard errors and
/// the full covariance of the per-trial statistic vector
/// (num_re, num_im, den1_ul, den1_dl, den2_0 .. den2_{L-1}).
struct SimulatedTerms {
  int L = 0;
  long n_trials = 0;
  long aborted = 0;             // singular-Qhat trials (counted, skipped)
  long rhat_not_spd = 0;        // Rhat SPD violations (reported, not fatal)
  RVector mean;                 // length L + 4
  RVector stderr_;              // length L + 4
  RMatrix covariance;           // (L+4) x (L+4) sample covariance
  RMatrix trial_stats;          // n_trials x (L+4), usable trials only

  double num() const { return mean(0); }
  double num_imag() const { return mean(1); }
  double den1(Link link) const {
    return link == Link::kUplink ? mean(2) : mean(3);
  }
  double den2(int l) const { return mean(4 + l); }
  double num_stderr() const { return stderr_(0); }
  double den1_stderr(Link link) const {
    return link == Link::kUplink ? stderr_(2) : stderr_(3);
  }
  double den2_stderr(int l) const { return stderr_(4 + l); }
};

struct SimulateOptions {
  long n_trials = 500;
  std::uint64_t base_seed = 1;
  int threads = 0;       // 0: hardware concurrency
  bool check_rhat_spd = true;
};

SimulatedTerms simulate_terms(const CovarianceSet& cov, int u,
                              EstimatorKind kind, long n_q, long n_r,
                              const RegularizationR& reg,
                              const RegularizationP& reg_p,
                              const SimulateOptions& opt);

/// Simulated SINR / SE from the sampled term means plugged into the SINR
/// ratio.  The plug-in estimate of a smooth function of means carries an
/// O(1/n) small-sample bias, so the reported value is jackknife
/// bias-corrected and the standard error is the jackknife one; both fall
/// back to the plug-in value with a delta-method error when leave-one-out
/// evaluation is not possible.
struct SimulatedSE {
  double gamma = 0.0;  // plug-in SINR of the sampled means
  double se = 0.0;     // jackknife bias-corrected SE estimate
  double se_stderr = 0.0;
};
SimulatedSE simulated_se(const SimulatedTerms& sim, Link link, double lambda,
                         double prelog_factor);

struct SweepCell {
  EstimatorKind kind = EstimatorKind::kLmmse;
  Link link = Link::kUplink;
  long n_r = 0;
  long n_q = 0;
  double prelog = 0.0;
  double gamma_theory = 0.0;
  double se_theory = 0.0;
  double gamma_sim = 0.0;
  double se_sim = 0.0;
  double sim_stderr = 0.0;
  long n_trials = 0;
  bool has_sim = false;
  std::string status = "ok";  // per-cell failures recorded, never fatal
};

struct SweepSpec {
  std::vector<long> nr_grid;
  std::vector<long> nq_grid;
  std::vector<EstimatorKind> kinds;
  std::vector<Link> links;
  long n_trials = 500;         // 0: theory only
  std::uint64_t base_seed = 1;
  int threads = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

/// Fills the grid with theoretical SE and (when n_trials > 0) simulated SE.
/// Deterministic for a fixed (cov, spec) including the base seed.
SweepResult run_sweep(const CovarianceSet& cov, int u,
                      const PilotBudget& budget, const RegularizationR& reg,
                      const RegularizationP& reg_p, const SweepSpec& spec);

struct CurveSummary {
  double max_rel_gap = 0.0;       // max |se_sim - se_theory| / |se_theory|
  double coverage = 1.0;          // fraction of cells within 3 sim stderr
  long cells_with_sim = 0;
  /// Largest grid N_R at which the element-wise-type theory SE still
  /// exceeds the LMMSE-type one, per (link, N_Q); empty when the
  /// element-wise curve dominates the whole grid.
  struct Crossing {
    Link link = Link::kUplink;
    long n_q = 0;
    bool el_dominates_grid = true;
    long last_el_preferred_nr = 0;  // 0 when LMMSE-type wins already at min
  };
  std::vector<Crossing> crossings;
};

CurveSummary compare_curves(const SweepResult& sweep);

}  // namespace mimose
