// SPDX-License-Identifier: Apache-2.0

#include "mimose/moments.hpp"

#include "detail/gauss_legendre.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace mimose {

namespace {

void check_square_same(const CMatrix& a, const CMatrix& b, const char* who) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

// q - r must be PSD for the contamination covariance to be valid.
void check_residual_psd(const CMatrix& r, const CMatrix& q, const char* who) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(q - r,
                                             Eigen::EigenvaluesOnly);
  const double lam_min = eig.eigenvalues().minCoeff();
  const double scale = std::max(max_abs(q), 1e-300);
  if (lam_min < -1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": Q - R is not PSD");
}

}  // namespace

GaussianQuartic gaussian_quartic(const CMatrix& r, const CMatrix& a) {
  check_square_same(r, a, "gaussian_quartic");
  GaussianQuartic out;
  const Complex tr_ar = trace_prod(a, r);
  out.outer = r * a * r + tr_ar * r;
  const Complex tr_ahr = trace_prod(a.adjoint().eval(), r);
  out.abs_quad = std::norm(tr_ahr) + (a * r * a.adjoint() * r).trace().real();
  return out;
}

InvWishartMoments::InvWishartMoments(long n, int m) : n_(n), m_(m) {
  if (m < 1) throw std::invalid_argument("inv_wishart: M must be >= 1");
  if (n <= m + 1)
    throw std::domain_error(
        "inv_wishart: moments require N > M + 1 (pole at N <= M + 1)");
  nm_ = static_cast<double>(n - m);
}

double InvWishartMoments::mean_entry(int i, int j) const {
  return (i == j) ? 1.0 / nm_ : 0.0;
}

CMatrix InvWishartMoments::mean() const {
  return CMatrix::Identity(m_, m_) / nm_;
}

double InvWishartMoments::second_moment(int i, int j, int l, int k) const {
  const double d_ij = (i == j) ? 1.0 : 0.0;
  const double d_lk = (l == k) ? 1.0 : 0.0;
  const double d_lj = (l == j) ? 1.0 : 0.0;
  const double d_ik = (i == k) ? 1.0 : 0.0;
  return (d_ij * d_lk + d_lj * d_ik / nm_) / (nm_ * nm_ - 1.0);
}

double InvWishartMoments::tr_inv2(const CMatrix& c) const {
  if (c.rows() != m_ || c.cols() != m_)
    throw std::invalid_argument("inv_wishart: C dimension mismatch");
  if (!is_hermitian(c))
    throw std::invalid_argument("inv_wishart: C must be Hermitian");
  const double den = nm_ * nm_ * nm_ - nm_;
  return static_cast<double>(n_) / den * c.trace().real();
}

double InvWishartMoments::abs_tr_inv(const CMatrix& a) const {
  if (a.rows() != m_ || a.cols() != m_)
    throw std::invalid_argument("inv_wishart: A dimension mismatch");
  const double tr_aah = (a.cwiseProduct(a.conjugate())).sum().real();
  return (std::norm(a.trace()) + tr_aah / nm_) / (nm_ * nm_ - 1.0);
}

RddotMoments rddot_moments(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                           double n_r) {
  check_square_same(r, a, "rddot_moments");
  check_square_same(r, q, "rddot_moments");
  if (n_r < 1) throw std::invalid_argument("rddot_moments: N_R must be >= 1");
  check_residual_psd(r, q, "rddot_moments");
  RddotMoments out;
  const double half_nr = 2.0 * n_r;
  out.outer = r * a * r + (trace_prod(a, q) / half_nr) * q +
              (trace_prod(a, r) / half_nr) * r;
  out.abs_tr = std::norm(trace_prod(r, a)) +
               (a * q * a.adjoint() * q).trace().real() / half_nr +
               (a * r * a.adjoint() * r).trace().real() / half_nr;
  return out;
}

InvChi2Moments inv_chi2_moments(long n, const CMatrix& a1, const CMatrix& a2,
                                const CMatrix& a) {
  if (n <= 2)
    throw std::domain_error("inv_chi2_moments: requires N > 2 (pole at N <= 2)");
  check_square_same(a1, a2, "inv_chi2_moments");
  check_square_same(a1, a, "inv_chi2_moments");
  const double nd = static_cast<double>(n);
  const double tau1 = 1.0 / ((nd - 1.0) * (nd - 1.0));
  const double tau2 = tau1 / (nd - 2.0);
  InvChi2Moments out;
  const CVector a1d = a1.diagonal();
  const CVector a2d = a2.diagonal();
  out.tr_two_factor =
      tau1 * trace_prod(a1, a2) + tau2 * a1d.cwiseProduct(a2d).sum();
  const CVector ad = a.diagonal();
  out.abs_tr = tau1 * std::norm(a.trace()) + tau2 * ad.squaredNorm();
  return out;
}

SddotMoments sddot_moments(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                           const RVector& d_diag, double n_r) {
  check_square_same(r, a, "sddot_moments");
  check_square_same(r, q, "sddot_moments");
  if (d_diag.size() != r.rows())
    throw std::invalid_argument("sddot_moments: D dimension mismatch");
  if (n_r < 1) throw std::invalid_argument("sddot_moments: N_R must be >= 1");
  check_residual_psd(r, q, "sddot_moments");

  const RVector s = r.diagonal().real();
  // Squared-magnitude Hadamard terms (Q o Q*, R o R*).
  const RMatrix hq = q.cwiseAbs2();
  const RMatrix hr = r.cwiseAbs2();
  const RMatrix pen = (hq + hr) / (2.0 * n_r);

  SddotMoments out;
  out.outer = s.cast<Complex>().asDiagonal() * a * s.cast<Complex>().asDiagonal();
  out.outer += a.cwiseProduct(pen.cast<Complex>());

  const double tr_sd = (s.array() * d_diag.array()).sum();
  out.abs_tr = tr_sd * tr_sd + d_diag.dot(pen * d_diag);
  return out;
}

namespace {

struct GammaIntegrand {
  double shape;  // N_Q
  double log_norm;
  double a;  // alpha_Q * P_pp / N_Q
  double b;  // (1 - alpha_Q) * Pb_pp

  double density(double g) const {
    return std::exp((shape - 1.0) * std::log(g) - g + log_norm);
  }
};

// Composite 20-point Gauss-Legendre over [lo, hi] split into n_seg
// segments; returns (mass, first inverse moment, second inverse moment).
std::array<double, 3> eg_pass(const GammaIntegrand& f, double lo, double hi,
                              int n_seg) {
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  const double seg_w = (hi - lo) / n_seg;
  for (int s = 0; s < n_seg; ++s) {
    const double mid = lo + seg_w * (s + 0.5);
    const double half = seg_w / 2.0;
    for (std::size_t k = 0; k < detail::kGl20Nodes.size(); ++k) {
      for (int sign = -1; sign <= 1; sign += 2) {
        const double g = mid + sign * half * detail::kGl20Nodes[k];
        if (g <= 0.0) continue;
        const double w = half * detail::kGl20Weights[k];
        const double fg = f.density(g) * w;
        const double den = f.a * g + f.b;
        acc[0] += fg;
        acc[1] += fg / den;
        acc[2] += fg / (den * den);
      }
    }
  }
  return acc;
}

}  // namespace

EGMatrices eg_matrices(const RVector& p_diag, double alpha_q,
                       const RVector& pb_diag, long n_q,
                       const QuadratureSpec& spec) {
  if (!(alpha_q >= 0.0 && alpha_q <= 1.0))
    throw std::invalid_argument("eg_matrices: alpha_Q must be in [0, 1]");
  if (n_q < 1) throw std::invalid_argument("eg_matrices: N_Q must be >= 1");
  if (p_diag.size() != pb_diag.size())
    throw std::invalid_argument("eg_matrices: P and P_b dimension mismatch");
  if ((p_diag.array() <= 0.0).any())
    throw std::invalid_argument("eg_matrices: P must have positive entries");
  if (alpha_q < 1.0 && (pb_diag.array() <= 0.0).any())
    throw std::invalid_argument("eg_matrices: P_b must have positive entries");
  if (alpha_q == 1.0 && n_q <= 2)
    throw std::domain_error(
        "eg_matrices: alpha_Q = 1 requires N_Q > 2 (divergent integral)");

  const Eigen::Index m = p_diag.size();
  EGMatrices out;
  out.E.resize(m);
  out.G.resize(m);
  out.n_q = n_q;
  out.alpha_q = alpha_q;
  out.quad_rel_err = 0.0;

  if (alpha_q == 0.0) {
    out.E = pb_diag.cwiseInverse();
    out.G = out.E.cwiseAbs2();
    return out;
  }

  const double nd = static_cast<double>(n_q);
  const double sd = std::sqrt(nd);
  const double lo = std::max(0.0, nd - 12.0 * sd - 10.0);
  const double hi = nd + 14.0 * sd + 30.0;
  const double log_norm = -std::lgamma(nd);

  for (Eigen::Index p = 0; p < m; ++p) {
    GammaIntegrand f{nd, log_norm, alpha_q * p_diag(p) / nd,
                     (1.0 - alpha_q) * pb_diag(p)};
    int n_seg = 8;
    auto prev = eg_pass(f, lo, hi, n_seg);
    double rel = 1.0;
    for (int it = 0; it < spec.max_refinements; ++it) {
      n_seg *= 2;
      const auto cur = eg_pass(f, lo, hi, n_seg);
      rel = 0.0;
      for (int i = 0; i < 3; ++i)
        rel = std::max(rel, std::abs(cur[i] - prev[i]) /
                                std::max(std::abs(cur[i]), 1e-300));
      prev = cur;
      if (rel < spec.rel_tol) break;
    }
    if (!(rel < spec.rel_tol * 64))
      throw std::runtime_error(
          "eg_matrices: quadrature failed to converge (divergent "
          "configuration?)");
    out.quad_rel_err = std::max(out.quad_rel_err, rel);
    // Normalizing by the quadrature mass cancels the truncated tails.
    out.E(p) = prev[1] / prev[0];
    out.G(p) = prev[2] / prev[0];
  }
  return out;
}

RegPMoments regP_moments(const EGMatrices& eg, const CMatrix& a1,
                         const CMatrix& a2, const CMatrix& a) {
  check_square_same(a1, a2, "regP_moments");
  check_square_same(a1, a, "regP_moments");
  if (eg.E.size() != a1.rows())
    throw std::invalid_argument("regP_moments: E/G dimension mismatch");
  RVector ge = eg.G - eg.E.cwiseAbs2();
  for (Eigen::Index p = 0; p < ge.size(); ++p) {
    if (ge(p) < -1e-12 * std::max(eg.G(p), 1e-300))
      throw std::runtime_error(
          "regP_moments: G - E^2 negative beyond tolerance (quadrature "
          "quality)");
    if (ge(p) < 0.0) ge(p) = 0.0;
  }
  RegPMoments out;
  const CMatrix ea1 = eg.E.cast<Complex>().asDiagonal() * a1;
  const CMatrix ea2 = eg.E.cast<Complex>().asDiagonal() * a2;
  Complex diag12 = 0.0;
  Complex tr_ea = 0.0;
  double diag_aa = 0.0;
  for (Eigen::Index p = 0; p < ge.size(); ++p) {
    diag12 += ge(p) * a1(p, p) * a2(p, p);
    tr_ea += eg.E(p) * a(p, p);
    diag_aa += ge(p) * std::norm(a(p, p));
  }
  out.tr_two_factor = trace_prod(ea1, ea2) + diag12;
  out.abs_tr = std::norm(tr_ea) + diag_aa;
  return out;
}

MCScalar mc_expectation(long n, RngStream& rng,
                        const std::function<double(RngStream&)>& draw) {
  if (n < 2) throw std::invalid_argument("mc_expectation: n must be >= 2");
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = draw(rng);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  MCScalar out;
  out.mean = mean;
  out.stderr_ = std::sqrt(m2 / static_cast<double>(n - 1) /
                          static_cast<double>(n));
  out.n_samples = n;
  return out;
}

MCMatrix mc_expectation_matrix(long n, RngStream& rng,
                               const std::function<CMatrix(RngStream&)>& draw) {
  if (n < 2) throw std::invalid_argument("mc_expectation_matrix: n must be >= 2");
  CMatrix mean;
  RMatrix m2;  // sum of |x - mean_old| .* |x - mean_new| per entry
  for (long i = 0; i < n; ++i) {
    CMatrix x = draw(rng);
    if (i == 0) {
      mean = CMatrix::Zero(x.rows(), x.cols());
      m2 = RMatrix::Zero(x.rows(), x.cols());
    }
    const CMatrix delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct((x - mean).conjugate()).real();
  }
  MCMatrix out;
  out.mean = mean;
  out.stderr_ = (m2 / static_cast<double>(n - 1) / static_cast<double>(n))
                    .cwiseSqrt();
  out.n_samples = n;
  return out;
}

double max_sigma_distance(double closed_form, const MCScalar& est,
                          double abs_floor) {
  const double tol = std::max(est.stderr_, abs_floor);
  return std::abs(closed_form - est.mean) / tol;
}

double max_sigma_distance(const CMatrix& closed_form, const MCMatrix& est,
                          double abs_floor) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < closed_form.cols(); ++j)
    for (Eigen::Index i = 0; i < closed_form.rows(); ++i) {
      const double tol = std::max(est.stderr_(i, j), abs_floor);
      worst = std::max(worst,
                       std::abs(closed_form(i, j) - est.mean(i, j)) / tol);
    }
  return worst;
}

bool agrees(double closed_form, const MCScalar& est, double n_sigma,
            double abs_floor) {
  return max_sigma_distance(closed_form, est, abs_floor) <= n_sigma;
}

bool agrees(const CMatrix& closed_form, const MCMatrix& est, double n_sigma,
            double abs_floor) {
  return max_sigma_distance(closed_form, est, abs_floor) <= n_sigma;
}

}  // namespace mimose
