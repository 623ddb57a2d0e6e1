// SPDX-License-Identifier: Apache-2.0
//
// Brute-force Monte Carlo counterparts of the closed-form identities in
// moments.hpp.  Everything here samples the defining random objects
// directly and never calls back into the closed forms, so the two sides
// stay independent.

#pragma once

#include "mimose/moments.hpp"

namespace mimose {
namespace oracles {

/// X = sum of N outer products of CN(0, I) vectors, i.e. W(N, I).
CMatrix sample_wishart_identity(long n, int m, RngStream& rng);

/// Gamma(shape, 1) with integer shape via a sum of exponentials.
double sample_gamma_int(long shape, RngStream& rng);

struct QuarticOracle {
  MCMatrix outer;
  MCScalar abs_quad;
};
QuarticOracle gaussian_quartic(const CMatrix& r, const CMatrix& a, long n,
                               RngStream& rng);

struct InvWishartOracle {
  MCMatrix mean;
  MCScalar second_0000;  // E{[X^-1]_00 [X^-1]_00}
  MCScalar second_0101;  // E{[X^-1]_01 [X^-1]_01} (real part)
  MCScalar second_0110;  // E{[X^-1]_01 [X^-1]_10} (real part)
  MCScalar second_0011;  // E{[X^-1]_00 [X^-1]_11}
  MCScalar tr_inv2;
  MCScalar abs_tr_inv;
};
InvWishartOracle inv_wishart(long n_dof, int m, const CMatrix& c,
                             const CMatrix& a, long n, RngStream& rng);

struct RddotOracle {
  MCMatrix outer;
  MCScalar abs_tr;
};
/// Simulates the cross-covariance estimate directly: per realization draws
/// N_R pairs (h + g1, h + g2) with h ~ CN(0, R) and independent
/// contamination-plus-noise g1, g2 ~ CN(0, Q - R), the random model of the
/// identity being checked.
RddotOracle rddot(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                  long n_r, long n, RngStream& rng);

struct InvChi2Oracle {
  MCScalar tr_two_factor;  // real part
  MCScalar abs_tr;
};
InvChi2Oracle inv_chi2(long n_dof, const CMatrix& a1, const CMatrix& a2,
                       const CMatrix& a, long n, RngStream& rng);

struct SddotOracle {
  MCMatrix outer;
  MCScalar abs_tr;
};
SddotOracle sddot(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                  const RVector& d_diag, long n_r, long n, RngStream& rng);

struct EGOracle {
  MCScalar e_entry;  // E_pp for the requested entry
  MCScalar g_entry;
};
EGOracle eg_entry(double p_pp, double alpha_q, double pb_pp, long n_q, long n,
                  RngStream& rng);

struct RegPOracle {
  MCScalar tr_two_factor;  // real part
  MCScalar abs_tr;
};
/// Samples synthetic independent diagonal inverses matching (E, G) entrywise
/// (two-point distributions), the exact hypothesis of the identity.
RegPOracle regP(const RVector& e, const RVector& g, const CMatrix& a1,
                const CMatrix& a2, const CMatrix& a, long n, RngStream& rng);

/// One row of the lemma-vs-oracle suite.
struct LemmaCheckRow {
  std::string lemma;
  std::string identity;
  int m = 0;
  int instances = 0;
  long samples = 0;
  double max_sigma = 0.0;
  bool pass = false;
};

/// Runs the full suite: every identity of the Gaussian-quartic,
/// inverse-Wishart, cross-covariance, inverse-chi-square, element-wise and
/// regularized-P lemmas against its oracle on random instances with
/// M in {2, 4, 8}, n_sigma acceptance 3.
std::vector<LemmaCheckRow> run_lemma_suite(std::uint64_t seed,
                                           int instances_per_lemma = 20,
                                           int threads = 0);

}  // namespace oracles
}  // namespace mimose
