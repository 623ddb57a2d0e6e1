// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mimose/estimators.hpp"
#include "mimose/moments.hpp"

#include <cmath>

using namespace mimose;

namespace {

CMatrix random_psd(int m, RngStream& rng, double scale = 1.0) {
  CMatrix g(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) g(i, j) = rng.cgauss();
  return scale * (g * g.adjoint()) / static_cast<double>(m);
}

}  // namespace

TEST_CASE("gen_pilots builds orthogonal pilots with squared norm P") {
  const PilotBook book = gen_pilots(10, 10);
  const CMatrix gram = book.pilots.adjoint() * book.pilots;
  CHECK(max_abs(gram - 10.0 * CMatrix::Identity(10, 10)) < 1e-10);

  const PilotBook one = gen_pilots(1, 1);
  CHECK(std::abs(std::abs(one.pilots(0, 0)) - 1.0) < 1e-14);

  const PilotBook two = gen_pilots(4, 2);
  CHECK(std::abs(two.pilots.col(0).dot(two.pilots.col(1))) < 1e-10);

  CHECK_THROWS_AS(gen_pilots(5, 10), std::invalid_argument);
}

TEST_CASE("phase shifts are centered, reproducible and independent") {
  RngStream rng(99, 0);
  const long n = 100000;
  const RMatrix theta = gen_phase_shifts(2, n, rng);
  Complex mean0 = 0.0, mean1 = 0.0, cross = 0.0;
  for (long i = 0; i < n; ++i) {
    const Complex e0 = std::polar(1.0, theta(0, i));
    const Complex e1 = std::polar(1.0, theta(1, i));
    mean0 += e0;
    mean1 += e1;
    cross += e0 * std::conj(e1);
  }
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean0) / n < bound);
  CHECK(std::abs(mean1) / n < bound);
  CHECK(std::abs(cross) / n < bound);  // independent streams decorrelate

  RngStream rng_a(5, 5), rng_b(5, 5);
  CHECK(max_abs(CMatrix(gen_phase_shifts(3, 10, rng_a).cast<Complex>()) -
                CMatrix(gen_phase_shifts(3, 10, rng_b).cast<Complex>())) ==
        0.0);
}

TEST_CASE("ls_pair_direct noise-free identities") {
  RngStream rng(21, 0);
  const int m = 4;
  const CVector zero = CVector::Zero(m);

  std::vector<CVector> single{rng.cgauss_vector(m)};
  RVector theta1(1);
  theta1 << 1.2;
  const LsPair p1 = ls_pair_direct(single, 0, theta1, zero, zero);
  CHECK(max_abs(p1.h1 - single[0]) == 0.0);
  CHECK(max_abs(p1.h2 - single[0]) == 0.0);

  std::vector<CVector> two{rng.cgauss_vector(m), rng.cgauss_vector(m)};
  RVector theta2(2);
  theta2 << 0.3, 2.1;
  const LsPair p2 = ls_pair_direct(two, 0, theta2, zero, zero);
  const Complex fac = 1.0 - std::polar(1.0, theta2(1) - theta2(0));
  CHECK(max_abs((p2.h1 - p2.h2) - fac * two[1]) < 1e-14);
}

TEST_CASE("direct LS path equals the full received-matrix path") {
  RngStream rng(23, 0);
  const int L = 3, K = 2, m = 5, P = 4;
  const double mu = 0.7;
  const PilotBook book = gen_pilots(P, K);
  std::vector<std::vector<CVector>> channels(L);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) channels[l].push_back(rng.cgauss_vector(m));
  RVector theta(L);
  for (int l = 0; l < L; ++l) theta(l) = rng.angle();
  CMatrix noise_p(m, P), noise_r(m, P);
  for (int j = 0; j < P; ++j)
    for (int i = 0; i < m; ++i) {
      noise_p(i, j) = rng.cgauss();
      noise_r(i, j) = rng.cgauss();
    }

  const int u = 1;
  const CMatrix yp = received_chest_grid(channels, book, mu, noise_p);
  const CMatrix yr = received_covest_grid(channels, book, theta, mu, noise_r);
  const CVector h1_grid = ls_from_grid(yp, book.pilots.col(u), mu);
  const CVector h2_grid =
      std::polar(1.0, -theta(0)) * ls_from_grid(yr, book.pilots.col(u), mu);

  std::vector<CVector> user_channels;
  for (int l = 0; l < L; ++l) user_channels.push_back(channels[l][u]);
  const CVector n1 = ls_from_grid(noise_p, book.pilots.col(u), mu);
  const CVector n2 = ls_from_grid(noise_r, book.pilots.col(u), mu);
  const LsPair direct = ls_pair_direct(user_channels, 0, theta, n1, n2);

  CHECK(max_abs(direct.h1 - h1_grid) < 1e-12);
  CHECK(max_abs(direct.h2 - h2_grid) < 1e-12);
}

TEST_CASE("decontamination: mean of h1 h2^H converges to the own covariance") {
  RngStream rng(31, 0);
  const int m = 4;
  const CMatrix r_own = random_psd(m, rng);
  const CMatrix r_int = random_psd(m, rng, 0.5);
  const CMatrix b_own = psd_sqrt(r_own);
  const CMatrix b_int = psd_sqrt(r_int);
  const double noise_std = 0.4;

  const long n = 10000;
  const MCMatrix est = mc_expectation_matrix(n, rng, [&](RngStream& rg) {
    std::vector<CVector> ch{b_own * rg.cgauss_vector(m),
                            b_int * rg.cgauss_vector(m)};
    RVector theta(2);
    theta << rg.angle(), rg.angle();
    const CVector n1 = noise_std * rg.cgauss_vector(m);
    const CVector n2 = noise_std * rg.cgauss_vector(m);
    const LsPair p = ls_pair_direct(ch, 0, theta, n1, n2);
    return CMatrix(p.h1 * p.h2.adjoint());
  });
  CHECK(agrees(r_own, est, 3.0, 1e-9));
}

TEST_CASE("sample covariance of LS estimates") {
  RngStream rng(37, 0);
  const CVector v = rng.cgauss_vector(3);
  std::vector<CVector> same(4, v);
  const SampleCovQP qp = sample_cov_QP(same);
  CHECK(max_abs(qp.Qhat - v * v.adjoint()) < 1e-12);
  CHECK(max_abs(CMatrix(qp.Phat.cast<Complex>().asDiagonal()) -
                CMatrix(qp.Qhat.diagonal().asDiagonal())) == 0.0);
  CHECK_THROWS_AS(sample_cov_QP(std::vector<CVector>{}),
                  std::invalid_argument);
}

TEST_CASE("sample covariance is unbiased and concentrates") {
  RngStream rng(41, 0);
  const int m = 4;
  const CMatrix q = random_psd(m, rng) + 0.3 * CMatrix::Identity(m, m);
  const CMatrix b = psd_sqrt(q);

  const long n_q = 100000;
  std::vector<CVector> draws;
  draws.reserve(n_q);
  for (long i = 0; i < n_q; ++i) draws.push_back(b * rng.cgauss_vector(m));
  const SampleCovQP qp = sample_cov_QP(draws);
  const double rel = (qp.Qhat - q).norm() / q.norm();
  CHECK(rel < 3.0 * std::sqrt(static_cast<double>(m * m) / n_q));

  const MCMatrix repeats = mc_expectation_matrix(50, rng, [&](RngStream& rg) {
    std::vector<CVector> ds;
    for (int i = 0; i < 200; ++i) ds.push_back(b * rg.cgauss_vector(m));
    return sample_cov_QP(ds).Qhat;
  });
  CHECK(agrees(q, repeats, 3.0, 1e-9));
}

TEST_CASE("cross covariance basics") {
  RngStream rng(43, 0);
  const CVector v = rng.cgauss_vector(3);
  std::vector<LsPair> one{{v, v}};
  const CrossCovRS rs = cross_cov_RS(one);
  CHECK(max_abs(rs.Rddot - v * v.adjoint()) < 1e-12);
  CHECK(max_abs(rs.Rddot - rs.Rddot.adjoint()) == 0.0);
  CHECK_THROWS_AS(cross_cov_RS(std::vector<LsPair>{}), std::invalid_argument);
}

TEST_CASE("cross covariance is unbiased under the pilot protocol") {
  RngStream rng(47, 0);
  const int m = 4;
  const CMatrix r_own = random_psd(m, rng);
  const CMatrix r_int = random_psd(m, rng, 0.4);
  const CMatrix b_own = psd_sqrt(r_own);
  const CMatrix b_int = psd_sqrt(r_int);

  const long n_rep = 100;
  const long n_r = 100;
  const MCMatrix est = mc_expectation_matrix(n_rep, rng, [&](RngStream& rg) {
    std::vector<LsPair> pairs;
    pairs.reserve(n_r);
    for (long i = 0; i < n_r; ++i) {
      std::vector<CVector> ch{b_own * rg.cgauss_vector(m),
                              b_int * rg.cgauss_vector(m)};
      RVector theta(2);
      theta << rg.angle(), rg.angle();
      pairs.push_back(ls_pair_direct(ch, 0, theta, 0.3 * rg.cgauss_vector(m),
                                     0.3 * rg.cgauss_vector(m)));
    }
    return cross_cov_RS(pairs).Rddot;
  });
  CHECK(agrees(r_own, est, 3.0, 1e-9));
}

TEST_CASE("regularize blends toward the bias matrix") {
  RngStream rng(53, 0);
  const CMatrix raw = random_psd(4, rng);
  const CMatrix bias = CMatrix::Identity(4, 4);
  CHECK(max_abs(regularize(raw, 1.0, bias) - raw) == 0.0);
  CHECK(max_abs(regularize(raw, 0.0, bias) - bias) == 0.0);
  const CMatrix mix = regularize(raw, 0.95, bias);
  CHECK(max_abs(mix - (0.95 * raw + 0.05 * bias)) < 1e-15);
  CHECK_THROWS_AS(regularize(raw, 1.5, bias), std::invalid_argument);
  RVector draw = RVector::Ones(4), bad = RVector::Zero(4);
  CHECK_THROWS_AS(regularize(draw, 0.5, bad), std::invalid_argument);
}

TEST_CASE("build_filter known-covariance identities") {
  RngStream rng(59, 0);
  const CMatrix r = random_psd(4, rng) + 0.1 * CMatrix::Identity(4, 4);
  const FilterMatrix w = build_filter(EstimatorKind::kLmmse, r, r);
  CHECK(max_abs(w.full - CMatrix::Identity(4, 4)) < 1e-10);
  CHECK_FALSE(w.is_diagonal());

  RVector p = RVector::Ones(5) * 2.0;
  RVector s = 0.6 * p;
  const FilterMatrix we = build_filter(EstimatorKind::kElLmmse, s, p);
  CHECK(we.is_diagonal());
  CHECK(we.full.size() == 0);  // diagonal storage only
  for (int i = 0; i < 5; ++i) CHECK(we.diag(i) == doctest::Approx(0.6));
}

TEST_CASE("build_filter rejects singular sample covariance") {
  RngStream rng(61, 0);
  const int m = 5;
  // N_Q = 2 < M outer products: rank-deficient Qhat.
  std::vector<CVector> draws{rng.cgauss_vector(m), rng.cgauss_vector(m)};
  const SampleCovQP qp = sample_cov_QP(draws);
  const CMatrix rhat = random_psd(m, rng);
  CHECK_THROWS_AS(build_filter(EstimatorKind::kLmmseType, rhat, qp.Qhat),
                  std::domain_error);
  RVector zerop = RVector::Zero(m);
  CHECK_THROWS_AS(
      build_filter(EstimatorKind::kElLmmseType, RVector::Ones(m), zerop),
      std::domain_error);
}

TEST_CASE("LMMSE filtering beats raw LS in mean squared error") {
  RngStream rng(67, 0);
  const int m = 4;
  const CMatrix r = random_psd(m, rng);
  const CMatrix b = psd_sqrt(r);
  const double noise_std = 0.8;
  const CMatrix q = r + noise_std * noise_std * CMatrix::Identity(m, m);
  const FilterMatrix w = build_filter(EstimatorKind::kLmmse, r, q);

  double mse_ls = 0.0, mse_lmmse = 0.0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) {
    const CVector h = b * rng.cgauss_vector(m);
    const CVector h_ls = h + noise_std * rng.cgauss_vector(m);
    mse_ls += (h_ls - h).squaredNorm();
    mse_lmmse += (apply_filter(w, h_ls) - h).squaredNorm();
  }
  CHECK(mse_lmmse < mse_ls);
}
