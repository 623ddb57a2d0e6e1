// SPDX-License-Identifier: Apache-2.0
//
// Closed-form evaluation of the uplink/downlink SINR expectation terms for
// matched-filter combining with LMMSE-type and element-wise LMMSE-type
// channel estimation, the known-covariance baselines, and the N_R / N_Q
// selection thresholds.

#pragma once

#include "mimose/estimators.hpp"
#include "mimose/moments.hpp"
#include "mimose/scenario.hpp"

#include <optional>

namespace mimose {

enum class Link { kUplink, kDownlink };

std::string to_string(Link link);
Link link_from_string(const std::string& name);

/// Pilot and block budget entering the pre-log factor.
struct PilotBudget {
  int P = 10;
  int C_u = 100;
  long tau_s = 25000;
  long N_R = 0;
  long N_Q = 0;
};

struct RegularizationR {
  double alpha_R = 0.95;
  CMatrix R_b;  // Hermitian SPD bias; identity of matching size if empty
};

struct RegularizationP {
  double alpha_Q = 0.95;
  RVector P_b;  // positive diagonal bias; all-ones if empty
};

/// The three expectation quantities of the SINR expression, split into the
/// part constant in N_R and the coefficient of 1/N_R.  For fixed N_Q and
/// alpha_R the denominator minus num^2 is affine in 1/N_R, which is what
/// the threshold solver relies on.
struct TermSet {
  double num = 0.0;
  double den1_const = 0.0;
  double den1_over_nr = 0.0;
  std::vector<double> den2_const;
  std::vector<double> den2_over_nr;
  double n_r = 1.0;  // evaluation point used by den1()/den2()
  /// Worst relative imaginary residue among the trace expressions.
  double imag_residual = 0.0;

  double den1() const { return den1_const + den1_over_nr / n_r; }
  double den2(int l) const {
    return den2_const[static_cast<std::size_t>(l)] +
           den2_over_nr[static_cast<std::size_t>(l)] / n_r;
  }
  double den2_sum() const;
  /// b in gamma = num^2 / (b + c / N_R): den floor at N_R -> infinity.
  double den_floor(double d) const;
  /// c: the 1/N_R coefficient of the denominator.
  double den_slope() const;
};

/// Known-covariance baseline terms (kind must be kLmmse or kElLmmse).
TermSet known_cov_terms(const CovarianceSet& cov, int u, EstimatorKind kind,
                        Link link);

/// LMMSE-type terms; requires N_Q > M + 1.
TermSet thm1_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, Link link);

/// Element-wise LMMSE-type terms; requires N_Q > 2.
TermSet thm2_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, Link link);

/// Element-wise LMMSE-type terms with regularized Phat, evaluated through
/// the numerically computed E/G matrices.
TermSet thm3_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, const EGMatrices& eg, Link link);
TermSet thm3_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, const RegularizationP& reg_p,
                   Link link);

/// Terms for any estimator kind (dispatches to the functions above).
TermSet terms_for_kind(const CovarianceSet& cov, int u, EstimatorKind kind,
                       long n_q, double n_r, const RegularizationR& reg,
                       const RegularizationP& reg_p, Link link);

/// gamma = num^2 / (den1 + sum_l den2_l - num^2 + d), d = 0 uplink and
/// 1/lambda downlink.  A non-positive denominator is an invalid-regime
/// error, not a clamp.
double sinr(const TermSet& terms, Link link, double lambda);

/// 1 - P/C_u - N_R P / (C_u tau_s); throws when the budget is exhausted.
double prelog(const PilotBudget& budget);

/// UL: prelog * log2(1 + gamma); DL: log2(1 + gamma).
double spectral_efficiency(double gamma, double prelog_factor, Link link);

struct ThresholdCoeffs {
  double a = 0, b = 0, c = 0;  // LMMSE-type:        gamma = a / (b + c/N_R)
  double f = 0, g = 0, h = 0;  // el-LMMSE-type:     gamma = f / (g + h/N_R)
  double d = 0;                // 0 uplink, 1/lambda downlink
};

struct ThresholdResult {
  std::optional<double> n_r_bar;  // empty: no N_R favors the full filter
  ThresholdCoeffs coeffs;
  Link link = Link::kUplink;
};

/// N_R value where the LMMSE-type and element-wise LMMSE-type SINR curves
/// cross: (f c - a h) / (a g - f b), with the coefficients derived from
/// the TermSet affine decompositions.  Returns "none" for a degenerate or
/// non-positive crossing.
ThresholdResult nr_threshold(const CovarianceSet& cov, int u, long n_q,
                             const RegularizationR& reg, Link link);

/// Literal transcription of the printed coefficient formulas, kept only to
/// compare against the decomposition-derived path (which is authoritative).
ThresholdCoeffs literal_threshold_coeffs(const CovarianceSet& cov, int u,
                                         long n_q, const RegularizationR& reg,
                                         Link link);

/// Smallest N_Q in [lo, hi] for which nr_threshold is finite and positive;
/// below it the element-wise estimator is always preferable.
std::optional<long> nq_threshold(const CovarianceSet& cov, int u,
                                 const RegularizationR& reg, Link link,
                                 long lo, long hi);

/// Resolves an empty R_b / P_b to identity / all-ones of dimension m.
CMatrix resolve_bias_r(const RegularizationR& reg, int m);
RVector resolve_bias_p(const RegularizationP& reg, int m);

}  // namespace mimose
