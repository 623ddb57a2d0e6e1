// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mimose/moments.hpp"
#include "mimose/oracles.hpp"

#include <cmath>

using namespace mimose;

namespace {

CMatrix random_cmatrix(int m, RngStream& rng) {
  CMatrix a(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) a(i, j) = rng.cgauss();
  return a;
}

CMatrix random_psd(int m, RngStream& rng) {
  const CMatrix g = random_cmatrix(m, rng);
  return g * g.adjoint() / static_cast<double>(m);
}

}  // namespace

TEST_CASE("gaussian quartic closed forms on identity inputs") {
  const int m = 5;
  const CMatrix eye = CMatrix::Identity(m, m);
  const GaussianQuartic gq = gaussian_quartic(eye, eye);
  CHECK(max_abs(gq.outer - (m + 1.0) * eye) < 1e-12);
  CHECK(gq.abs_quad == doctest::Approx(m * m + m));

  CMatrix e11 = CMatrix::Zero(m, m);
  e11(0, 0) = 1.0;
  const GaussianQuartic gq2 = gaussian_quartic(eye, e11);
  CHECK(max_abs(gq2.outer - (e11 + eye)) < 1e-12);
  CHECK(gq2.abs_quad == doctest::Approx(2.0));
}

TEST_CASE("gaussian quartic agrees with the brute-force oracle") {
  RngStream rng(101, 0);
  const CMatrix r = random_psd(4, rng);
  const CMatrix a = random_cmatrix(4, rng);
  const GaussianQuartic cf = gaussian_quartic(r, a);
  const auto mc = oracles::gaussian_quartic(r, a, 200000, rng);
  CHECK(agrees(cf.outer, mc.outer));
  CHECK(agrees(cf.abs_quad, mc.abs_quad));
}

TEST_CASE("inverse Wishart closed forms and pole") {
  const int m = 4;
  CHECK_THROWS_AS(InvWishartMoments(m + 1, m), std::domain_error);
  const InvWishartMoments at_boundary(m + 2, m);
  CHECK(max_abs(at_boundary.mean() - 0.5 * CMatrix::Identity(m, m)) < 1e-15);

  const long n = 12;
  const InvWishartMoments iw(n, m);
  const double nm = static_cast<double>(n - m);
  CHECK(iw.tr_inv2(CMatrix::Identity(m, m)) ==
        doctest::Approx(m * n / (nm * nm * nm - nm)));
}

TEST_CASE("inverse Wishart agrees with the brute-force oracle") {
  RngStream rng(103, 0);
  const int m = 4;
  const long n_dof = 12;
  const CMatrix c = random_psd(m, rng);
  const CMatrix a = random_cmatrix(m, rng);
  const InvWishartMoments cf(n_dof, m);
  const auto mc = oracles::inv_wishart(n_dof, m, c, a, 100000, rng);
  CHECK(agrees(cf.mean(), mc.mean));
  CHECK(agrees(cf.second_moment(0, 0, 0, 0), mc.second_0000, 3.0, 1e-9));
  CHECK(agrees(cf.second_moment(0, 1, 0, 1), mc.second_0101, 3.0, 1e-9));
  CHECK(agrees(cf.second_moment(0, 1, 1, 0), mc.second_0110, 3.0, 1e-9));
  CHECK(agrees(cf.second_moment(0, 0, 1, 1), mc.second_0011, 3.0, 1e-9));
  CHECK(agrees(cf.tr_inv2(c), mc.tr_inv2));
  CHECK(agrees(cf.abs_tr_inv(a), mc.abs_tr_inv));
}

TEST_CASE("cross-covariance moments: limits and oracle") {
  RngStream rng(107, 0);
  const int m = 4;
  const CMatrix r = random_psd(m, rng);
  const CMatrix q = r + CMatrix::Identity(m, m);
  const CMatrix a = random_cmatrix(m, rng);

  const RddotMoments inf_nr = rddot_moments(r, q, a, 1e12);
  CHECK(max_abs(inf_nr.outer - r * a * r) <= 1e-10 * max_abs(r * a * r));
  CHECK(inf_nr.abs_tr ==
        doctest::Approx(std::norm(trace_prod(r, a))).epsilon(1e-10));

  const RddotMoments zero_a =
      rddot_moments(r, q, CMatrix::Zero(m, m), 8.0);
  CHECK(max_abs(zero_a.outer) == 0.0);
  CHECK(zero_a.abs_tr == 0.0);

  const RddotMoments cf = rddot_moments(r, q, a, 8.0);
  const auto mc = oracles::rddot(r, q, a, 8, 20000, rng);
  CHECK(agrees(cf.outer, mc.outer));
  CHECK(agrees(cf.abs_tr, mc.abs_tr));

  CHECK_THROWS_AS(rddot_moments(q, r, a, 8.0), std::invalid_argument);
}

TEST_CASE("inverse chi-square moments: specializations, pole, oracle") {
  const int m = 4;
  const long n = 10;
  const CMatrix eye = CMatrix::Identity(m, m);
  const double nd = static_cast<double>(n);
  const double tau1 = 1.0 / ((nd - 1) * (nd - 1));
  const double tau2 = tau1 / (nd - 2);

  const InvChi2Moments ii = inv_chi2_moments(n, eye, eye, eye);
  CHECK(ii.tr_two_factor.real() ==
        doctest::Approx(m / ((nd - 1) * (nd - 2))));
  CHECK(ii.abs_tr == doctest::Approx(m * m * tau1 + m * tau2));

  CHECK_THROWS_AS(inv_chi2_moments(2, eye, eye, eye), std::domain_error);
  CHECK_NOTHROW(inv_chi2_moments(3, eye, eye, eye));

  RngStream rng(109, 0);
  const CMatrix a1 = random_cmatrix(m, rng);
  const CMatrix a2 = random_cmatrix(m, rng);
  const CMatrix a = random_cmatrix(m, rng);
  const InvChi2Moments cf = inv_chi2_moments(n, a1, a2, a);
  const auto mc = oracles::inv_chi2(n, a1, a2, a, 200000, rng);
  CHECK(agrees(cf.tr_two_factor.real(), mc.tr_two_factor));
  CHECK(agrees(cf.abs_tr, mc.abs_tr));
}

TEST_CASE("element-wise cross-covariance moments") {
  RngStream rng(113, 0);
  const int m = 4;
  const CMatrix r = random_psd(m, rng);
  const CMatrix q = r + CMatrix::Identity(m, m);
  const CMatrix a = random_cmatrix(m, rng);
  RVector d(m);
  for (int i = 0; i < m; ++i) d(i) = rng.uniform(-1.0, 1.0);

  const RVector s = r.diagonal().real();
  const SddotMoments inf_nr = sddot_moments(r, q, a, d, 1e12);
  const CMatrix sas =
      s.cast<Complex>().asDiagonal() * a * s.cast<Complex>().asDiagonal();
  CHECK(max_abs(inf_nr.outer - sas) <= 1e-10 * max_abs(sas));
  const double tr_sd = s.dot(d);
  CHECK(inf_nr.abs_tr == doctest::Approx(tr_sd * tr_sd).epsilon(1e-10));

  // M = 1: the element-wise and full lemmas coincide.
  const CMatrix r1 = r.topLeftCorner(1, 1);
  const CMatrix q1 = q.topLeftCorner(1, 1);
  const CMatrix a1 = a.topLeftCorner(1, 1).real().cast<Complex>();
  RVector d1(1);
  d1 << a1(0, 0).real();
  const SddotMoments el = sddot_moments(r1, q1, a1, d1, 6.0);
  const RddotMoments full = rddot_moments(r1, q1, a1, 6.0);
  CHECK(max_abs(el.outer - full.outer) <= 1e-12 * max_abs(full.outer));
  CHECK(el.abs_tr == doctest::Approx(full.abs_tr).epsilon(1e-12));

  const SddotMoments cf = sddot_moments(r, q, a, d, 8.0);
  const auto mc = oracles::sddot(r, q, a, d, 8, 20000, rng);
  CHECK(agrees(cf.outer, mc.outer));
  CHECK(agrees(cf.abs_tr, mc.abs_tr));
}

TEST_CASE("E/G matrices: analytic ends, Jensen, quadrature vs MC") {
  RVector p(3), pb(3);
  p << 0.5, 1.0, 2.5;
  pb << 1.0, 0.7, 1.3;

  const EGMatrices zero = eg_matrices(p, 0.0, pb, 50);
  for (int i = 0; i < 3; ++i) {
    CHECK(zero.E(i) == doctest::Approx(1.0 / pb(i)));
    CHECK(zero.G(i) == doctest::Approx(1.0 / (pb(i) * pb(i))));
  }

  const long n_q = 12;
  const EGMatrices one = eg_matrices(p, 1.0, pb, n_q);
  for (int i = 0; i < 3; ++i) {
    const double nd = static_cast<double>(n_q);
    CHECK(one.E(i) == doctest::Approx(nd / ((nd - 1.0) * p(i))).epsilon(1e-8));
    CHECK(one.G(i) ==
          doctest::Approx(nd * nd / ((nd - 1.0) * (nd - 2.0) * p(i) * p(i)))
              .epsilon(1e-8));
  }

  const EGMatrices mid = eg_matrices(p, 0.95, pb, 125);
  for (int i = 0; i < 3; ++i)
    CHECK(mid.G(i) >= mid.E(i) * mid.E(i) - 1e-12);

  RngStream rng(127, 0);
  const auto mc = oracles::eg_entry(p(1), 0.95, pb(1), 125, 200000, rng);
  CHECK(agrees(mid.E(1), mc.e_entry));
  CHECK(agrees(mid.G(1), mc.g_entry));

  CHECK_THROWS_AS(eg_matrices(p, 1.0, pb, 2), std::domain_error);
  CHECK_THROWS_AS(eg_matrices(p, 1.5, pb, 10), std::invalid_argument);
}

TEST_CASE("regularized-P moments: reductions and oracle") {
  RngStream rng(131, 0);
  const int m = 4;
  const CMatrix a1 = random_cmatrix(m, rng);
  const CMatrix a2 = random_cmatrix(m, rng);
  const CMatrix a = random_cmatrix(m, rng);

  // Deterministic Phat (G = E^2) drops the diagonal corrections.
  EGMatrices det;
  det.E = RVector::LinSpaced(m, 0.5, 1.1);
  det.G = det.E.cwiseAbs2();
  const RegPMoments rd = regP_moments(det, a1, a2, a);
  const CMatrix e = det.E.cast<Complex>().asDiagonal();
  CHECK(std::abs(rd.tr_two_factor - trace_prod(CMatrix(e * a1), CMatrix(e * a2))) <
        1e-12);
  CHECK(rd.abs_tr == doctest::Approx(std::norm((e * a).trace())));

  // alpha_Q = 1 must reproduce the inverse chi-square lemma after the
  // P^-1 change of variables.
  RVector p(m), pb(m);
  for (int i = 0; i < m; ++i) {
    p(i) = 0.4 + 0.3 * i;
    pb(i) = 1.0;
  }
  const long n_q = 9;
  const EGMatrices eg1 = eg_matrices(p, 1.0, pb, n_q);
  const RegPMoments lhs = regP_moments(eg1, a1, a2, a);
  const double nd = static_cast<double>(n_q);
  const CMatrix pinv = p.cwiseInverse().cast<Complex>().asDiagonal();
  const InvChi2Moments rhs = inv_chi2_moments(
      n_q, CMatrix(nd * pinv * a1), CMatrix(nd * pinv * a2), CMatrix(nd * pinv * a));
  CHECK(std::abs(lhs.tr_two_factor - rhs.tr_two_factor) <=
        1e-8 * std::abs(rhs.tr_two_factor));
  CHECK(lhs.abs_tr == doctest::Approx(rhs.abs_tr).epsilon(1e-8));

  // Synthetic oracle with matching first/second inverse moments.
  EGMatrices synth;
  synth.E = RVector::LinSpaced(m, 0.6, 1.4);
  synth.G = synth.E.cwiseAbs2() * 1.35;
  const RegPMoments cf = regP_moments(synth, a1, a2, a);
  const auto mc = oracles::regP(synth.E, synth.G, a1, a2, a, 200000, rng);
  CHECK(agrees(cf.tr_two_factor.real(), mc.tr_two_factor));
  CHECK(agrees(cf.abs_tr, mc.abs_tr));

  EGMatrices bad;
  bad.E = RVector::Ones(m);
  bad.G = RVector::Ones(m) * 0.5;  // G < E^2: impossible second moment
  CHECK_THROWS_AS(regP_moments(bad, a1, a2, a), std::runtime_error);
}

TEST_CASE("mc_expectation basics") {
  RngStream rng(137, 0);
  const MCScalar constant =
      mc_expectation(100, rng, [](RngStream&) { return 2.5; });
  CHECK(constant.mean == doctest::Approx(2.5));
  CHECK(constant.stderr_ == doctest::Approx(0.0));

  const MCScalar centered = mc_expectation(
      1000000, rng, [](RngStream& rg) { return rg.cgauss().real(); });
  CHECK(std::abs(centered.mean) < 3e-3);

  RngStream a(7, 7), b(7, 7);
  const MCScalar ra =
      mc_expectation(1000, a, [](RngStream& rg) { return rg.uniform(); });
  const MCScalar rb =
      mc_expectation(1000, b, [](RngStream& rg) { return rg.uniform(); });
  CHECK(ra.mean == rb.mean);
  CHECK(ra.stderr_ == rb.stderr_);
}
