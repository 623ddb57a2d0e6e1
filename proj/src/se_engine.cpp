// SPDX-License-Identifier: Apache-2.0

#include "mimose/se_engine.hpp"

#include <cmath>
#include <stdexcept>

namespace mimose {

namespace {

void check_user(const CovarianceSet& cov, int u) {
  if (u < 0 || u >= cov.K)
    throw std::invalid_argument("target user index out of range");
}

double real_checked(Complex z, double* residual) {
  const double scale = std::max(std::abs(z), 1e-300);
  *residual = std::max(*residual, std::abs(z.imag()) / scale);
  return z.real();
}

struct Thm1Workspace {
  CMatrix Qi, W, Wbar, Rbar;
  double tr_w = 0.0;
};

Thm1Workspace thm1_workspace(const CovarianceSet& cov, int u,
                             const RegularizationR& reg, double* residual) {
  Thm1Workspace ws;
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];
  ws.Qi = q.llt().solve(CMatrix::Identity(cov.M, cov.M));
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  ws.Rbar = regularize(r, reg.alpha_R, resolve_bias_r(reg, cov.M));
  ws.W = r * ws.Qi;
  ws.Wbar = ws.Rbar * ws.Qi;
  ws.tr_w = real_checked(ws.W.trace(), residual);
  return ws;
}

}  // namespace

std::string to_string(Link link) {
  return link == Link::kUplink ? "ul" : "dl";
}

Link link_from_string(const std::string& name) {
  if (name == "ul") return Link::kUplink;
  if (name == "dl") return Link::kDownlink;
  throw std::invalid_argument("unknown link: " + name);
}

double TermSet::den2_sum() const {
  double s = 0.0;
  for (std::size_t l = 0; l < den2_const.size(); ++l)
    s += den2_const[l] + den2_over_nr[l] / n_r;
  return s;
}

double TermSet::den_floor(double d) const {
  double s = den1_const + d - num * num;
  for (double v : den2_const) s += v;
  return s;
}

double TermSet::den_slope() const {
  double s = den1_over_nr;
  for (double v : den2_over_nr) s += v;
  return s;
}

CMatrix resolve_bias_r(const RegularizationR& reg, int m) {
  if (reg.R_b.size() == 0) return CMatrix::Identity(m, m);
  if (reg.R_b.rows() != m || reg.R_b.cols() != m)
    throw std::invalid_argument("R_b dimension mismatch");
  return reg.R_b;
}

RVector resolve_bias_p(const RegularizationP& reg, int m) {
  if (reg.P_b.size() == 0) return RVector::Ones(m);
  if (reg.P_b.size() != m)
    throw std::invalid_argument("P_b dimension mismatch");
  return reg.P_b;
}

TermSet known_cov_terms(const CovarianceSet& cov, int u, EstimatorKind kind,
                        Link link) {
  check_user(cov, u);
  const bool dl = link == Link::kDownlink;
  const CMatrix& r_s = cov.interference(dl);
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];

  TermSet t;
  t.den2_const.assign(static_cast<std::size_t>(cov.L), 0.0);
  t.den2_over_nr.assign(static_cast<std::size_t>(cov.L), 0.0);

  if (kind == EstimatorKind::kLmmse) {
    const CMatrix qi = q.llt().solve(CMatrix::Identity(cov.M, cov.M));
    const CMatrix w = r * qi;
    t.num = real_checked(trace_prod(w.adjoint().eval(), r), &t.imag_residual);
    t.den1_const = real_checked(trace_prod((w * q * w.adjoint()).eval(), r_s),
                                &t.imag_residual);
    for (int l = 0; l < cov.L; ++l)
      t.den2_const[static_cast<std::size_t>(l)] = std::norm(
          trace_prod(w.adjoint().eval(), cov.R[static_cast<std::size_t>(l)]
                                                [static_cast<std::size_t>(u)]));
  } else if (kind == EstimatorKind::kElLmmse) {
    const RVector& s = cov.S[0][static_cast<std::size_t>(u)];
    const RVector& pd = cov.P_diag[static_cast<std::size_t>(u)];
    const RVector w = s.cwiseQuotient(pd);
    t.num = w.dot(s);
    const CMatrix wq = w.cast<Complex>().asDiagonal() * q *
                       w.cast<Complex>().asDiagonal();
    t.den1_const = real_checked(trace_prod(wq, r_s), &t.imag_residual);
    for (int l = 0; l < cov.L; ++l) {
      const double tr =
          w.dot(cov.S[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)]);
      t.den2_const[static_cast<std::size_t>(l)] = tr * tr;
    }
  } else {
    throw std::invalid_argument(
        "known_cov_terms: kind must be lmmse or el-lmmse");
  }
  return t;
}

TermSet thm1_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, Link link) {
  check_user(cov, u);
  if (n_q <= cov.M + 1)
    throw std::domain_error(
        "thm1_terms: N_Q must exceed M + 1 (inverse-Wishart pole)");
  if (n_r < 1) throw std::invalid_argument("thm1_terms: N_R must be >= 1");

  const double nq = static_cast<double>(n_q);
  const double m = static_cast<double>(cov.M);
  const double kn = nq / (nq - m);
  const double k2 = nq * nq / ((nq - m) * (nq - m) - 1.0);
  const double k1 = nq * k2 / (nq - m);
  const double a2 = reg.alpha_R * reg.alpha_R;

  const bool dl = link == Link::kDownlink;
  const CMatrix& r_s = cov.interference(dl);
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];

  TermSet t;
  t.n_r = n_r;
  Thm1Workspace ws = thm1_workspace(cov, u, reg, &t.imag_residual);

  t.num = kn * real_checked(trace_prod(ws.Wbar.adjoint().eval(), r),
                            &t.imag_residual);

  const CMatrix wbar_q_wbar = ws.Rbar * ws.Qi * ws.Rbar;
  t.den1_const =
      k1 * real_checked(trace_prod(wbar_q_wbar, r_s), &t.imag_residual);
  t.den1_over_nr =
      a2 * k1 / 2.0 *
      (m * real_checked(trace_prod(r_s, q), &t.imag_residual) +
       ws.tr_w * real_checked(trace_prod(r_s, r), &t.imag_residual));

  const CMatrix qi_r_qi = ws.Qi * r * ws.Qi;
  t.den2_const.resize(static_cast<std::size_t>(cov.L));
  t.den2_over_nr.resize(static_cast<std::size_t>(cov.L));
  for (int l = 0; l < cov.L; ++l) {
    const CMatrix& rl =
        cov.R[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)];
    const CMatrix x_l = rl * ws.Qi * rl;  // W_l Q W_l^H and friends
    const Complex t_a = trace_prod(ws.Wbar.adjoint().eval(), rl);
    const double t_b =
        real_checked(trace_prod(wbar_q_wbar, x_l), &t.imag_residual);
    const double t_c = real_checked(trace_prod(x_l, q), &t.imag_residual);
    const double t_d =
        real_checked(trace_prod(qi_r_qi, (rl * r * rl).eval()),
                     &t.imag_residual);
    const double t_e = real_checked(trace_prod(x_l, r), &t.imag_residual);
    t.den2_const[static_cast<std::size_t>(l)] =
        k2 * std::norm(t_a) + k1 / nq * t_b;
    t.den2_over_nr[static_cast<std::size_t>(l)] =
        a2 * k2 / 2.0 * (t_c + t_d) +
        a2 * k1 / (2.0 * nq) * (m * t_c + ws.tr_w * t_e);
  }
  return t;
}

TermSet thm2_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, Link link) {
  check_user(cov, u);
  if (n_q <= 2)
    throw std::domain_error(
        "thm2_terms: N_Q must exceed 2 (inverse chi-square pole)");
  if (n_r < 1) throw std::invalid_argument("thm2_terms: N_R must be >= 1");

  const double nq = static_cast<double>(n_q);
  const double k3 = nq * nq / ((nq - 1.0) * (nq - 1.0));
  const double k4 = k3 / (nq - 2.0);
  const double a2 = reg.alpha_R * reg.alpha_R;

  const bool dl = link == Link::kDownlink;
  const CMatrix& r_s = cov.interference(dl);
  const RVector& ss = cov.interference_diag(dl);
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];
  const RVector& s = cov.S[0][static_cast<std::size_t>(u)];
  const RVector& pd = cov.P_diag[static_cast<std::size_t>(u)];
  const RVector rb_diag =
      resolve_bias_r(reg, cov.M).diagonal().real();
  const RVector sb = reg.alpha_R * s + (1.0 - reg.alpha_R) * rb_diag;
  const RVector wb = sb.cwiseQuotient(pd);
  const RVector w = s.cwiseQuotient(pd);

  const RMatrix hpen = q.cwiseAbs2() + r.cwiseAbs2();  // Q o Q* + R o R*

  TermSet t;
  t.n_r = n_r;

  t.num = nq / (nq - 1.0) * wb.dot(s);

  const CMatrix wb_q_wb = wb.cast<Complex>().asDiagonal() * q *
                          wb.cast<Complex>().asDiagonal();
  const RVector pd_inv = pd.cwiseInverse();
  const CMatrix pi_q_pi = pd_inv.cast<Complex>().asDiagonal() * q *
                          pd_inv.cast<Complex>().asDiagonal();
  const CMatrix h_s = r_s.cwiseProduct(hpen.cast<Complex>());
  t.den1_const =
      k3 * real_checked(trace_prod(wb_q_wb, r_s), &t.imag_residual) +
      k4 * (wb.array().square() * pd.array() * ss.array()).sum();
  t.den1_over_nr =
      a2 * k3 / 2.0 * real_checked(trace_prod(pi_q_pi, h_s), &t.imag_residual) +
      a2 * k4 / 2.0 *
          ((ss.array() * pd.array()).sum() +
           (w.array() * ss.array() * s.array()).sum());

  t.den2_const.resize(static_cast<std::size_t>(cov.L));
  t.den2_over_nr.resize(static_cast<std::size_t>(cov.L));
  for (int l = 0; l < cov.L; ++l) {
    const RVector& sl =
        cov.S[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)];
    const RVector wl = sl.cwiseQuotient(pd);
    const double tr_a = wb.dot(sl);
    t.den2_const[static_cast<std::size_t>(l)] =
        k3 * tr_a * tr_a +
        k4 * (wb.array().square() * sl.array().square()).sum();
    t.den2_over_nr[static_cast<std::size_t>(l)] =
        a2 * k3 / 2.0 * wl.dot(hpen * wl) +
        a2 * k4 / 2.0 *
            (sl.squaredNorm() +
             (wl.array().square() * s.array().square()).sum());
  }
  return t;
}

TermSet thm3_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, const EGMatrices& eg,
                   Link link) {
  check_user(cov, u);
  if (eg.E.size() != cov.M)
    throw std::invalid_argument("thm3_terms: E/G dimension mismatch");
  if (n_r < 1) throw std::invalid_argument("thm3_terms: N_R must be >= 1");

  const double a2 = reg.alpha_R * reg.alpha_R;
  const bool dl = link == Link::kDownlink;
  const CMatrix& r_s = cov.interference(dl);
  const RVector& ss = cov.interference_diag(dl);
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];
  const RVector& s = cov.S[0][static_cast<std::size_t>(u)];
  const RVector& pd = cov.P_diag[static_cast<std::size_t>(u)];
  const RVector rb_diag = resolve_bias_r(reg, cov.M).diagonal().real();
  const RVector sb = reg.alpha_R * s + (1.0 - reg.alpha_R) * rb_diag;

  RVector ge = eg.G - eg.E.cwiseAbs2();
  ge = ge.cwiseMax(0.0);

  const RMatrix hpen = q.cwiseAbs2() + r.cwiseAbs2();

  TermSet t;
  t.n_r = n_r;
  t.num = (eg.E.array() * sb.array() * s.array()).sum();

  const CMatrix e_q_e = eg.E.cast<Complex>().asDiagonal() * q *
                        eg.E.cast<Complex>().asDiagonal();
  const CMatrix sb_rs_sb = sb.cast<Complex>().asDiagonal() * r_s *
                           sb.cast<Complex>().asDiagonal();
  const CMatrix h_s = r_s.cwiseProduct(hpen.cast<Complex>());
  t.den1_const =
      real_checked(trace_prod(e_q_e, sb_rs_sb), &t.imag_residual) +
      (ge.array() * pd.array() * sb.array().square() * ss.array()).sum();
  t.den1_over_nr =
      a2 / 2.0 *
      (real_checked(trace_prod(e_q_e, h_s), &t.imag_residual) +
       (ge.array() * pd.array().pow(3) * ss.array()).sum() +
       (ge.array() * pd.array() * s.array().square() * ss.array()).sum());

  t.den2_const.resize(static_cast<std::size_t>(cov.L));
  t.den2_over_nr.resize(static_cast<std::size_t>(cov.L));
  for (int l = 0; l < cov.L; ++l) {
    const RVector& sl =
        cov.S[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)];
    const double tr_a = (eg.E.array() * sb.array() * sl.array()).sum();
    const RVector esl = eg.E.cwiseProduct(sl);
    t.den2_const[static_cast<std::size_t>(l)] =
        tr_a * tr_a +
        (ge.array() * sb.array().square() * sl.array().square()).sum();
    t.den2_over_nr[static_cast<std::size_t>(l)] =
        a2 / 2.0 *
        (esl.dot(hpen * esl) +
         (ge.array() * pd.array().square() * sl.array().square()).sum() +
         (ge.array() * s.array().square() * sl.array().square()).sum());
  }
  return t;
}

TermSet thm3_terms(const CovarianceSet& cov, int u, long n_q, double n_r,
                   const RegularizationR& reg, const RegularizationP& reg_p,
                   Link link) {
  check_user(cov, u);
  const EGMatrices eg =
      eg_matrices(cov.P_diag[static_cast<std::size_t>(u)], reg_p.alpha_Q,
                  resolve_bias_p(reg_p, cov.M), n_q);
  return thm3_terms(cov, u, n_q, n_r, reg, eg, link);
}

TermSet terms_for_kind(const CovarianceSet& cov, int u, EstimatorKind kind,
                       long n_q, double n_r, const RegularizationR& reg,
                       const RegularizationP& reg_p, Link link) {
  switch (kind) {
    case EstimatorKind::kLmmse:
    case EstimatorKind::kElLmmse:
      return known_cov_terms(cov, u, kind, link);
    case EstimatorKind::kLmmseType:
      return thm1_terms(cov, u, n_q, n_r, reg, link);
    case EstimatorKind::kElLmmseType:
      return thm2_terms(cov, u, n_q, n_r, reg, link);
    case EstimatorKind::kElLmmseTypeRegP:
      return thm3_terms(cov, u, n_q, n_r, reg, reg_p, link);
  }
  throw std::logic_error("terms_for_kind: unknown kind");
}

double sinr(const TermSet& terms, Link link, double lambda) {
  const double d = link == Link::kDownlink ? 1.0 / lambda : 0.0;
  const double den =
      terms.den1() + terms.den2_sum() - terms.num * terms.num + d;
  if (!(den > 0.0))
    throw std::domain_error(
        "sinr: non-positive denominator (invalid modeling regime)");
  return terms.num * terms.num / den;
}

double prelog(const PilotBudget& budget) {
  const double p = static_cast<double>(budget.P);
  const double cu = static_cast<double>(budget.C_u);
  const double nr = static_cast<double>(budget.N_R);
  const double ts = static_cast<double>(budget.tau_s);
  const double value = 1.0 - p / cu - (nr * p) / (cu * ts);
  if (!(value > 0.0))
    throw std::domain_error("prelog: pilot budget exhausted (prelog <= 0)");
  return value;
}

double spectral_efficiency(double gamma, double prelog_factor, Link link) {
  if (gamma < 0.0)
    throw std::invalid_argument("spectral_efficiency: gamma must be >= 0");
  const double rate = std::log2(1.0 + gamma);
  return link == Link::kUplink ? prelog_factor * rate : rate;
}

namespace {

ThresholdCoeffs coeffs_from_terms(const TermSet& t1, const TermSet& t2,
                                  Link link, double lambda) {
  ThresholdCoeffs c;
  c.d = link == Link::kDownlink ? 1.0 / lambda : 0.0;
  c.a = t1.num * t1.num;
  c.b = t1.den_floor(c.d);
  c.c = t1.den_slope();
  c.f = t2.num * t2.num;
  c.g = t2.den_floor(c.d);
  c.h = t2.den_slope();
  return c;
}

}  // namespace

ThresholdResult nr_threshold(const CovarianceSet& cov, int u, long n_q,
                             const RegularizationR& reg, Link link) {
  const TermSet t1 = thm1_terms(cov, u, n_q, 1.0, reg, link);
  const TermSet t2 = thm2_terms(cov, u, n_q, 1.0, reg, link);
  ThresholdResult out;
  out.link = link;
  out.coeffs = coeffs_from_terms(t1, t2, link, cov.lambda);
  const auto& c = out.coeffs;
  const double numer = c.f * c.c - c.a * c.h;
  const double denom = c.a * c.g - c.f * c.b;
  const double denom_scale = std::abs(c.a * c.g) + std::abs(c.f * c.b);
  if (std::abs(denom) <= 1e-12 * std::max(std::abs(numer), denom_scale))
    return out;  // degenerate: curves parallel or identical
  const double n_r_bar = numer / denom;
  if (!std::isfinite(n_r_bar) || n_r_bar <= 0.0) return out;
  out.n_r_bar = n_r_bar;
  return out;
}

ThresholdCoeffs literal_threshold_coeffs(const CovarianceSet& cov, int u,
                                         long n_q, const RegularizationR& reg,
                                         Link link) {
  check_user(cov, u);
  if (n_q <= cov.M + 1)
    throw std::domain_error("literal_threshold_coeffs: N_Q must exceed M + 1");
  const double nq = static_cast<double>(n_q);
  const double m = static_cast<double>(cov.M);
  const double kn = nq / (nq - m);
  const double k2 = nq * nq / ((nq - m) * (nq - m) - 1.0);
  const double k1 = nq * k2 / (nq - m);
  const double k3 = nq * nq / ((nq - 1.0) * (nq - 1.0));
  const double k4 = k3 / (nq - 2.0);
  const double a2 = reg.alpha_R * reg.alpha_R;

  const bool dl = link == Link::kDownlink;
  const CMatrix& rbar_s = cov.interference(dl);
  const RVector& sbar_s = cov.interference_diag(dl);
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(u)];
  const RVector& s = cov.S[0][static_cast<std::size_t>(u)];
  const RVector& pd = cov.P_diag[static_cast<std::size_t>(u)];

  double residual = 0.0;
  Thm1Workspace ws = thm1_workspace(cov, u, reg, &residual);
  // W-bar Q W-bar^H = Rbar Qi Rbar for Hermitian Q.
  const CMatrix wqw = ws.Rbar * ws.Qi * ws.Rbar;

  ThresholdCoeffs out;
  out.d = dl ? 1.0 / cov.lambda : 0.0;

  const double tr_wbar_r =
      real_checked(trace_prod(ws.Wbar.adjoint().eval(), r), &residual);
  out.a = kn * tr_wbar_r * kn * tr_wbar_r;

  out.b = k1 * real_checked(trace_prod(wqw, rbar_s), &residual) - out.a + out.d;
  out.c = a2 * k1 / 2.0 *
          (m * real_checked(trace_prod(rbar_s, q), &residual) +
           ws.tr_w * real_checked(trace_prod(rbar_s, r), &residual));
  for (int l = 0; l < cov.L; ++l) {
    const CMatrix& rl =
        cov.R[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)];
    const CMatrix x_l = rl * ws.Qi * rl;
    out.b += k2 * std::norm(trace_prod(ws.Wbar.adjoint().eval(), rl)) +
             k1 / nq * real_checked(trace_prod(wqw, x_l), &residual);
    const double t_c = real_checked(trace_prod(x_l, q), &residual);
    out.c += a2 * k2 / 2.0 *
                 (t_c + real_checked(trace_prod((ws.Qi * r * ws.Qi).eval(),
                                                (rl * r * rl).eval()),
                                     &residual)) +
             a2 * k1 / (2.0 * nq) *
                 (m * t_c +
                  ws.tr_w * real_checked(trace_prod(x_l, r), &residual));
  }

  const RVector rb_diag = resolve_bias_r(reg, cov.M).diagonal().real();
  const RVector sb = reg.alpha_R * s + (1.0 - reg.alpha_R) * rb_diag;
  const RVector wb = sb.cwiseQuotient(pd);
  const RVector w_el = s.cwiseQuotient(pd);
  const RMatrix hpen = q.cwiseAbs2() + r.cwiseAbs2();

  const double tr_wbar_r_el = wb.dot(s);
  out.f = nq / (nq - 1.0) * tr_wbar_r_el * nq / (nq - 1.0) * tr_wbar_r_el;

  const CMatrix wb_q_wb = wb.cast<Complex>().asDiagonal() * q *
                          wb.cast<Complex>().asDiagonal();
  out.g = k3 * real_checked(trace_prod(wb_q_wb, rbar_s), &residual) +
          k4 * (wb.array().square() * pd.array() * sbar_s.array()).sum() -
          out.f + out.d;
  const RVector pd_inv = pd.cwiseInverse();
  const CMatrix pi_q_pi = pd_inv.cast<Complex>().asDiagonal() * q *
                          pd_inv.cast<Complex>().asDiagonal();
  out.h = a2 * k3 / 2.0 *
              real_checked(
                  trace_prod(pi_q_pi,
                             rbar_s.cwiseProduct(hpen.cast<Complex>())),
                  &residual) +
          a2 * k4 / 2.0 *
              ((sbar_s.array() * pd.array()).sum() +
               (w_el.array() * sbar_s.array() * s.array()).sum());
  for (int l = 0; l < cov.L; ++l) {
    const RVector& sl =
        cov.S[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)];
    const RVector wl = sl.cwiseQuotient(pd);
    const double tr_a = wb.dot(sl);
    out.g += k3 * tr_a * tr_a +
             k4 * (wb.array().square() * sl.array().square()).sum();
    out.h += a2 * k4 / 2.0 *
                 (sl.squaredNorm() +
                  (wl.array().square() * s.array().square()).sum()) +
             a2 * k3 / 2.0 * wl.dot(hpen * wl);
  }
  return out;
}

std::optional<long> nq_threshold(const CovarianceSet& cov, int u,
                                 const RegularizationR& reg, Link link,
                                 long lo, long hi) {
  const long valid_lo = std::max<long>(lo, std::max<long>(cov.M + 2, 3));
  if (valid_lo > hi)
    throw std::invalid_argument(
        "nq_threshold: search range is empty or entirely below the theorem "
        "validity bound N_Q > M + 1");
  for (long n_q = valid_lo; n_q <= hi; ++n_q) {
    const ThresholdResult res = nr_threshold(cov, u, n_q, reg, link);
    if (res.n_r_bar.has_value()) return n_q;
  }
  return std::nullopt;
}

}  // namespace mimose
