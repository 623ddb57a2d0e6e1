// SPDX-License-Identifier: Apache-2.0
//
// Closed-form moment identities for Gaussian quartics, inverse Wishart
// matrices, inverse chi-square diagonals and the sample cross-covariance
// estimators, plus the numerically evaluated E/G expectation matrices.
// Each identity has a brute-force Monte Carlo counterpart in oracles.hpp.

#pragma once

#include "mimose/numkit.hpp"

namespace mimose {

template <class T>
struct MCEstimate {
  T mean{};
  T stderr_{};  // same shape as mean, entrywise standard error
  long n_samples = 0;
};

using MCScalar = MCEstimate<double>;

struct MCMatrix {
  CMatrix mean;
  RMatrix stderr_;  // entrywise standard error of |mean - truth| comparisons
  long n_samples = 0;
};

/// E{h h^H A h h^H} = R A R + R tr(A R) and
/// E{|h^H A h|^2} = |tr(A^H R)|^2 + tr(A R A^H R) for h ~ CN(0, R).
struct GaussianQuartic {
  CMatrix outer;    // E{h h^H A h h^H}
  double abs_quad;  // E{|h^H A h|^2}
};
GaussianQuartic gaussian_quartic(const CMatrix& r, const CMatrix& a);

/// Inverse moments of X ~ W(N, I), M x M complex Wishart.  All listed
/// moments are finite iff N > M + 1.
class InvWishartMoments {
 public:
  InvWishartMoments(long n, int m);

  long n() const { return n_; }
  int m() const { return m_; }

  /// E{[X^-1]_ij}
  double mean_entry(int i, int j) const;
  CMatrix mean() const;
  /// E{[X^-1]_ij [X^-1]_lk}
  double second_moment(int i, int j, int l, int k) const;
  /// E{tr(X^-2 C)} for Hermitian C
  double tr_inv2(const CMatrix& c) const;
  /// E{|tr(X^-1 A)|^2}
  double abs_tr_inv(const CMatrix& a) const;

 private:
  long n_;
  int m_;
  double nm_;  // N - M
};

/// Second moments of the cross-covariance estimate Rddot built from N_R
/// pairs with contamination-plus-noise covariance Q - R:
///   E{Rddot A Rddot} and E{|tr(Rddot A)|^2}.
struct RddotMoments {
  CMatrix outer;
  double abs_tr;
};
RddotMoments rddot_moments(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                           double n_r);

/// Inverse moments of Y = Z/2 with Z diagonal of i.i.d. chi-square(2N)
/// entries:  E{tr(Y^-1 A1 Y^-1 A2)} and E{|tr(Y^-1 A)|^2}.  Needs N > 2.
struct InvChi2Moments {
  Complex tr_two_factor;
  double abs_tr;
};
InvChi2Moments inv_chi2_moments(long n, const CMatrix& a1, const CMatrix& a2,
                                const CMatrix& a);

/// Element-wise analogue of rddot_moments for the diagonal estimate Sddot:
///   E{Sddot A Sddot} and E{|tr(Sddot D)|^2} with diagonal real D.
/// The Hadamard penalty terms use squared magnitudes (A o Q o Q* etc.),
/// the variant the Monte Carlo oracle confirms.
struct SddotMoments {
  CMatrix outer;
  double abs_tr;
};
SddotMoments sddot_moments(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                           const RVector& d_diag, double n_r);

struct QuadratureSpec {
  double rel_tol = 1e-9;
  int max_refinements = 14;
};

/// Diagonal matrices of first and second inverse moments of the
/// regularized Phat entries,
///   E_pp = E{ 1 / (alpha_Q P_pp g / N_Q + (1 - alpha_Q) Pb_pp) },
///   G_pp = E{ (...)^-2 },  g ~ Gamma(N_Q, 1)  (i.e. chi2_{2 N_Q} / 2),
/// evaluated by adaptive Gauss-Legendre quadrature against the Gamma
/// density.  alpha_Q = 1 requires N_Q > 2 for finite G.
struct EGMatrices {
  RVector E;
  RVector G;
  long n_q = 0;
  double alpha_q = 0.0;
  double quad_rel_err = 0.0;  // worst relative change at the final refinement
};
EGMatrices eg_matrices(const RVector& p_diag, double alpha_q,
                       const RVector& pb_diag, long n_q,
                       const QuadratureSpec& spec = {});

/// Lemma-7 style expectations for the regularized inverse diagonal:
///   E{tr(Phat^-1 A1 Phat^-1 A2)} = tr(E A1 E A2) + tr((G - E^2) A1d A2d)
///   E{|tr(Phat^-1 A)|^2} = |tr(E A)|^2 + tr((G - E^2) A_d^H A_d).
struct RegPMoments {
  Complex tr_two_factor;
  double abs_tr;
};
RegPMoments regP_moments(const EGMatrices& eg, const CMatrix& a1,
                         const CMatrix& a2, const CMatrix& a);

/// Sample mean and standard error of a scalar statistic over n draws.
MCScalar mc_expectation(long n, RngStream& rng,
                        const std::function<double(RngStream&)>& draw);

/// Entrywise sample mean and standard error of a matrix statistic.
MCMatrix mc_expectation_matrix(long n, RngStream& rng,
                               const std::function<CMatrix(RngStream&)>& draw);

/// |closed_form - estimate.mean| <= n_sigma * stderr (entrywise for
/// matrices), with abs_floor guarding zero-variance statistics.
bool agrees(double closed_form, const MCScalar& est, double n_sigma = 3.0,
            double abs_floor = 1e-12);
bool agrees(const CMatrix& closed_form, const MCMatrix& est,
            double n_sigma = 3.0, double abs_floor = 1e-12);
/// Largest |closed-form - mean| / stderr over entries.
double max_sigma_distance(double closed_form, const MCScalar& est,
                          double abs_floor = 1e-12);
double max_sigma_distance(const CMatrix& closed_form, const MCMatrix& est,
                          double abs_floor = 1e-12);

}  // namespace mimose
