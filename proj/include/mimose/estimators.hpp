// SPDX-License-Identifier: Apache-2.0
//
// Pilot synthesis, LS channel estimation and the covariance estimators
// built from phase-shifted pilot pairs.

#pragma once

#include "mimose/numkit.hpp"

#include <span>
#include <string>
#include <vector>

namespace mimose {

enum class EstimatorKind {
  kLmmse,          // W = R Q^-1, true covariances
  kElLmmse,        // W = S P^-1, true diagonals
  kLmmseType,      // W = Rhat Qhat^-1
  kElLmmseType,    // W = Shat Phat^-1 (unregularized Phat)
  kElLmmseTypeRegP // W = Shat Phat_reg^-1
};

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);
bool is_elementwise(EstimatorKind kind);
bool uses_estimated_cov(EstimatorKind kind);

/// Orthogonal ChEst pilots: column k is pilot p_k with p_k^H p_m = P delta.
struct PilotBook {
  int P = 0;
  CMatrix pilots;  // P x K, rows of a scaled DFT matrix
};

PilotBook gen_pilots(int P, int K);

/// i.i.d. uniform [0, 2pi) phase shifts theta(l, n), one per (cell, block).
RMatrix gen_phase_shifts(int L, long n_r, RngStream& rng);

/// LS estimates of one CovEst coherence block: h1 from the ChEst pilot,
/// h2 from the phase-shifted CovEst pilot.
struct LsPair {
  CVector h1;
  CVector h2;
};

/// Direct synthesis from per-cell channel draws of the target user's pilot:
///   h1 = sum_l ch[l] + n1
///   h2 = ch[j] + sum_{l != j} e^{i(theta_l - theta_j)} ch[l] + e^{-i theta_j} n2
/// where n1, n2 are the pilot-projected noise vectors (covariance
/// I/(P mu) each).  Skips the M x P received-matrix synthesis; the grid
/// path below exists for end-to-end fidelity checks.
LsPair ls_pair_direct(std::span<const CVector> channels_per_cell, int target_cell,
                      const RVector& theta, const CVector& noise1,
                      const CVector& noise2);

/// Full received pilot matrix Y^(p) = sum_{l,k} sqrt(mu) h_lk p_k^T + N.
CMatrix received_chest_grid(const std::vector<std::vector<CVector>>& channels,
                            const PilotBook& pilots, double mu,
                            const CMatrix& noise);

/// Received CovEst matrix with phase-shifted pilots phi_lk = e^{i theta_l} p_k.
CMatrix received_covest_grid(const std::vector<std::vector<CVector>>& channels,
                             const PilotBook& pilots, const RVector& theta,
                             double mu, const CMatrix& noise);

/// LS projection (1 / (P sqrt(mu))) Y p*.
CVector ls_from_grid(const CMatrix& y, const CVector& pilot, double mu);

struct SampleCovQP {
  CMatrix Qhat;
  RVector Phat;  // diagonal of Qhat, exactly
};

/// Sample covariance of N_Q LS estimates: Qhat = (1/N_Q) sum h h^H.
SampleCovQP sample_cov_QP(std::span<const CVector> ls_estimates);

struct CrossCovRS {
  CMatrix Rddot;  // Hermitian by construction
  RVector Sddot;  // real diagonal of Rddot
};

/// Hermitian-symmetric sample cross-covariance over N_R block pairs:
/// Rddot = (1/(2 N_R)) sum (h1 h2^H + h2 h1^H).
CrossCovRS cross_cov_RS(std::span<const LsPair> pairs);

/// Affine shrinkage alpha * raw + (1 - alpha) * bias.
CMatrix regularize(const CMatrix& raw, double alpha, const CMatrix& bias);
RVector regularize(const RVector& raw, double alpha, const RVector& bias);

/// Receive filter.  Element-wise kinds are stored (and built) purely from
/// diagonal data and never read off-diagonal entries of any estimate.
struct FilterMatrix {
  EstimatorKind kind = EstimatorKind::kLmmse;
  CMatrix full;  // empty for element-wise kinds
  RVector diag;  // empty for full kinds
  bool is_diagonal() const { return diag.size() > 0; }
};

/// W = R Q^-1 for full-matrix kinds.  Throws std::domain_error on a
/// numerically singular Q (possible for sample Qhat with N_Q < M).
FilterMatrix build_filter(EstimatorKind kind, const CMatrix& r_num,
                          const CMatrix& q_den);

/// w_p = s_p / p_p for element-wise kinds.  Throws on p_p <= 0.
FilterMatrix build_filter(EstimatorKind kind, const RVector& s_num,
                          const RVector& p_den);

/// Applies the filter to an LS estimate.
CVector apply_filter(const FilterMatrix& w, const CVector& h_ls);

}  // namespace mimose
