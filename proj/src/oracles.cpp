// SPDX-License-Identifier: Apache-2.0

#include "mimose/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace mimose {
namespace oracles {

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

CMatrix sample_wishart_identity(long n, int m, RngStream& rng) {
  CMatrix x = CMatrix::Zero(m, m);
  for (long i = 0; i < n; ++i) {
    const CVector g = rng.cgauss_vector(m);
    x.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0);
  }
  return x.selfadjointView<Eigen::Lower>();
}

double sample_gamma_int(long shape, RngStream& rng) {
  if (shape < 1) throw std::invalid_argument("sample_gamma_int: shape >= 1");
  // Sum of `shape` Exp(1) draws; chunked products keep one log per 64 draws.
  double acc = 0.0;
  long left = shape;
  while (left > 0) {
    const long chunk = std::min<long>(left, 64);
    double prod = 1.0;
    for (long i = 0; i < chunk; ++i) prod *= 1.0 - rng.uniform();
    acc += -std::log(prod);
    left -= chunk;
  }
  return acc;
}

QuarticOracle gaussian_quartic(const CMatrix& r, const CMatrix& a, long n,
                               RngStream& rng) {
  const CMatrix b = psd_sqrt(r);
  const Eigen::Index m = r.rows();
  QuarticOracle out;
  // h h^H A h h^H = (h^H A h) h h^H: rank-1 per draw.
  CMatrix mean = CMatrix::Zero(m, m);
  RMatrix m2 = RMatrix::Zero(m, m);
  double smean = 0.0, sm2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const CVector h = b * rng.cgauss_vector(m);
    const Complex quad = h.dot(a * h);  // h^H (A h)
    const CMatrix x = quad * (h * h.adjoint());
    const CMatrix delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct((x - mean).conjugate()).real();
    const double s = std::norm(quad);
    const double sdelta = s - smean;
    smean += sdelta / static_cast<double>(i + 1);
    sm2 += sdelta * (s - smean);
  }
  out.outer.mean = mean;
  out.outer.stderr_ =
      (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  out.outer.n_samples = n;
  out.abs_quad.mean = smean;
  out.abs_quad.stderr_ = std::sqrt(sm2 / static_cast<double>(n - 1) /
                                   static_cast<double>(n));
  out.abs_quad.n_samples = n;
  return out;
}

InvWishartOracle inv_wishart(long n_dof, int m, const CMatrix& c,
                             const CMatrix& a, long n, RngStream& rng) {
  struct Acc {
    double mean = 0.0, m2 = 0.0;
    void add(long i, double x) {
      const double d = x - mean;
      mean += d / static_cast<double>(i + 1);
      m2 += d * (x - mean);
    }
    MCScalar finish(long n) const {
      return {mean,
              std::sqrt(m2 / static_cast<double>(n - 1) /
                        static_cast<double>(n)),
              n};
    }
  };
  Acc s0000, s0101, s0110, s0011, str2, sabs;
  CMatrix mean = CMatrix::Zero(m, m);
  RMatrix m2 = RMatrix::Zero(m, m);
  for (long i = 0; i < n; ++i) {
    const CMatrix x = sample_wishart_identity(n_dof, m, rng);
    const CMatrix xi = x.inverse();
    const CMatrix delta = xi - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct((xi - mean).conjugate()).real();
    s0000.add(i, std::real(xi(0, 0) * xi(0, 0)));
    if (m > 1) {
      s0101.add(i, std::real(xi(0, 1) * xi(0, 1)));
      s0110.add(i, std::real(xi(0, 1) * xi(1, 0)));
      s0011.add(i, std::real(xi(0, 0) * xi(1, 1)));
    }
    str2.add(i, (xi * xi * c).trace().real());
    sabs.add(i, std::norm((xi * a).trace()));
  }
  InvWishartOracle out;
  out.mean.mean = mean;
  out.mean.stderr_ =
      (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  out.mean.n_samples = n;
  out.second_0000 = s0000.finish(n);
  out.second_0101 = s0101.finish(n);
  out.second_0110 = s0110.finish(n);
  out.second_0011 = s0011.finish(n);
  out.tr_inv2 = str2.finish(n);
  out.abs_tr_inv = sabs.finish(n);
  return out;
}

RddotOracle rddot(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                  long n_r, long n, RngStream& rng) {
  const Eigen::Index m = r.rows();
  const CMatrix bh = psd_sqrt(r);
  const CMatrix bg = psd_sqrt((q - r).eval());
  CMatrix mean = CMatrix::Zero(m, m);
  RMatrix m2 = RMatrix::Zero(m, m);
  double smean = 0.0, sm2 = 0.0;
  for (long i = 0; i < n; ++i) {
    CMatrix rdd = CMatrix::Zero(m, m);
    for (long p = 0; p < n_r; ++p) {
      const CVector h = bh * rng.cgauss_vector(m);
      const CVector h1 = h + bg * rng.cgauss_vector(m);
      const CVector h2 = h + bg * rng.cgauss_vector(m);
      rdd += h1 * h2.adjoint();
    }
    rdd /= 2.0 * static_cast<double>(n_r);
    rdd = (rdd + rdd.adjoint()).eval();
    const CMatrix x = rdd * a * rdd;
    const CMatrix delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct((x - mean).conjugate()).real();
    const double s = std::norm(trace_prod(rdd, a));
    const double sd = s - smean;
    smean += sd / static_cast<double>(i + 1);
    sm2 += sd * (s - smean);
  }
  RddotOracle out;
  out.outer.mean = mean;
  out.outer.stderr_ =
      (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  out.outer.n_samples = n;
  out.abs_tr.mean = smean;
  out.abs_tr.stderr_ = std::sqrt(sm2 / static_cast<double>(n - 1) /
                                 static_cast<double>(n));
  out.abs_tr.n_samples = n;
  return out;
}

InvChi2Oracle inv_chi2(long n_dof, const CMatrix& a1, const CMatrix& a2,
                       const CMatrix& a, long n, RngStream& rng) {
  const Eigen::Index m = a1.rows();
  double m1 = 0.0, m1m2 = 0.0, m2 = 0.0, m2m2 = 0.0;
  RVector y(m);
  for (long i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < m; ++p) y(p) = sample_gamma_int(n_dof, rng);
    // tr(Y^-1 A1 Y^-1 A2) = sum_pq A1_pq A2_qp / (y_p y_q)
    Complex t = 0.0;
    Complex tr_a = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index qy = 0; qy < m; ++qy)
        t += a1(p, qy) * a2(qy, p) / (y(p) * y(qy));
      tr_a += a(p, p) / y(p);
    }
    const double x1 = t.real();
    const double x2 = std::norm(tr_a);
    double d = x1 - m1;
    m1 += d / static_cast<double>(i + 1);
    m1m2 += d * (x1 - m1);
    d = x2 - m2;
    m2 += d / static_cast<double>(i + 1);
    m2m2 += d * (x2 - m2);
  }
  InvChi2Oracle out;
  out.tr_two_factor = {m1,
                       std::sqrt(m1m2 / static_cast<double>(n - 1) /
                                 static_cast<double>(n)),
                       n};
  out.abs_tr = {m2,
                std::sqrt(m2m2 / static_cast<double>(n - 1) /
                          static_cast<double>(n)),
                n};
  return out;
}

SddotOracle sddot(const CMatrix& r, const CMatrix& q, const CMatrix& a,
                  const RVector& d_diag, long n_r, long n, RngStream& rng) {
  const Eigen::Index m = r.rows();
  const CMatrix bh = psd_sqrt(r);
  const CMatrix bg = psd_sqrt((q - r).eval());
  CMatrix mean = CMatrix::Zero(m, m);
  RMatrix m2 = RMatrix::Zero(m, m);
  double smean = 0.0, sm2 = 0.0;
  RVector sdd(m);
  for (long i = 0; i < n; ++i) {
    sdd.setZero();
    for (long p = 0; p < n_r; ++p) {
      const CVector h = bh * rng.cgauss_vector(m);
      const CVector h1 = h + bg * rng.cgauss_vector(m);
      const CVector h2 = h + bg * rng.cgauss_vector(m);
      sdd += h1.cwiseProduct(h2.conjugate()).real();
    }
    sdd /= static_cast<double>(n_r);
    const CMatrix x =
        sdd.cast<Complex>().asDiagonal() * a * sdd.cast<Complex>().asDiagonal();
    const CMatrix delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct((x - mean).conjugate()).real();
    const double s_tr = sdd.dot(d_diag);
    const double s = s_tr * s_tr;
    const double sd = s - smean;
    smean += sd / static_cast<double>(i + 1);
    sm2 += sd * (s - smean);
  }
  SddotOracle out;
  out.outer.mean = mean;
  out.outer.stderr_ =
      (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  out.outer.n_samples = n;
  out.abs_tr.mean = smean;
  out.abs_tr.stderr_ = std::sqrt(sm2 / static_cast<double>(n - 1) /
                                 static_cast<double>(n));
  out.abs_tr.n_samples = n;
  return out;
}

EGOracle eg_entry(double p_pp, double alpha_q, double pb_pp, long n_q, long n,
                  RngStream& rng) {
  double me = 0.0, m2e = 0.0, mg = 0.0, m2g = 0.0;
  for (long i = 0; i < n; ++i) {
    const double g = sample_gamma_int(n_q, rng);
    const double den = alpha_q * p_pp * g / static_cast<double>(n_q) +
                       (1.0 - alpha_q) * pb_pp;
    const double x = 1.0 / den;
    const double y = x * x;
    double d = x - me;
    me += d / static_cast<double>(i + 1);
    m2e += d * (x - me);
    d = y - mg;
    mg += d / static_cast<double>(i + 1);
    m2g += d * (y - mg);
  }
  EGOracle out;
  out.e_entry = {me,
                 std::sqrt(m2e / static_cast<double>(n - 1) /
                           static_cast<double>(n)),
                 n};
  out.g_entry = {mg,
                 std::sqrt(m2g / static_cast<double>(n - 1) /
                           static_cast<double>(n)),
                 n};
  return out;
}

RegPOracle regP(const RVector& e, const RVector& g, const CMatrix& a1,
                const CMatrix& a2, const CMatrix& a, long n, RngStream& rng) {
  const Eigen::Index m = e.size();
  RVector spread(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const double var = g(p) - e(p) * e(p);
    if (var < 0)
      throw std::invalid_argument("regP oracle: G < E^2 has no distribution");
    spread(p) = std::sqrt(var);
  }
  double m1 = 0.0, m1m2 = 0.0, m2 = 0.0, m2m2 = 0.0;
  RVector d(m);
  for (long i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < m; ++p)
      d(p) = e(p) + (rng.uniform() < 0.5 ? -spread(p) : spread(p));
    Complex t = 0.0;
    Complex tr_a = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index qy = 0; qy < m; ++qy)
        t += a1(p, qy) * a2(qy, p) * d(p) * d(qy);
      tr_a += a(p, p) * d(p);
    }
    const double x1 = t.real();
    const double x2 = std::norm(tr_a);
    double dd = x1 - m1;
    m1 += dd / static_cast<double>(i + 1);
    m1m2 += dd * (x1 - m1);
    dd = x2 - m2;
    m2 += dd / static_cast<double>(i + 1);
    m2m2 += dd * (x2 - m2);
  }
  RegPOracle out;
  out.tr_two_factor = {m1,
                       std::sqrt(m1m2 / static_cast<double>(n - 1) /
                                 static_cast<double>(n)),
                       n};
  out.abs_tr = {m2,
                std::sqrt(m2m2 / static_cast<double>(n - 1) /
                          static_cast<double>(n)),
                n};
  return out;
}

namespace {

struct SigmaTable {
  std::vector<std::vector<double>> per_identity;
  explicit SigmaTable(std::size_t identities, std::size_t instances)
      : per_identity(identities, std::vector<double>(instances, 0.0)) {}
};

int m_for_instance(int instance) {
  constexpr int kSizes[] = {2, 4, 8};
  return kSizes[instance % 3];
}

}  // namespace

std::vector<LemmaCheckRow> run_lemma_suite(std::uint64_t seed, int instances,
                                           int threads) {
  if (threads <= 0) threads = default_threads();
  std::vector<LemmaCheckRow> rows;

  auto push_rows = [&](const std::string& lemma,
                       const std::vector<std::string>& identities,
                       const SigmaTable& table, long samples) {
    for (std::size_t i = 0; i < identities.size(); ++i) {
      LemmaCheckRow row;
      row.lemma = lemma;
      row.identity = identities[i];
      row.m = 0;  // mixed sizes
      row.instances = instances;
      row.samples = samples;
      row.max_sigma = 0.0;
      for (double s : table.per_identity[i])
        row.max_sigma = std::max(row.max_sigma, s);
      row.pass = row.max_sigma <= 3.0;
      rows.push_back(row);
    }
  };

  {  // Gaussian quartic moments
    const long n = 100000;
    SigmaTable table(2, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/gaussian-quartic", i);
      const int m = m_for_instance(static_cast<int>(i));
      const CMatrix r = random_psd(m, rng);
      const CMatrix a = random_cmatrix(m, rng);
      const auto cf = mimose::gaussian_quartic(r, a);
      const auto mc = gaussian_quartic(r, a, n, rng);
      table.per_identity[0][i] = max_sigma_distance(cf.outer, mc.outer);
      table.per_identity[1][i] = max_sigma_distance(cf.abs_quad, mc.abs_quad);
    });
    push_rows("gaussian-quartic", {"outer-moment", "abs-quadratic"}, table, n);
  }

  {  // Bivariate magnitude moment E{|h1|^2 |h2|^2}
    const long n = 200000;
    SigmaTable table(1, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/bivariate", i);
      const CMatrix r = random_psd(2, rng);
      const CMatrix b = psd_sqrt(r);
      const double cf =
          std::real(r(0, 0) * r(1, 1) + r(0, 1) * r(1, 0));
      const auto mc = mc_expectation(n, rng, [&](RngStream& rg) {
        const CVector h = b * rg.cgauss_vector(2);
        return std::norm(h(0)) * std::norm(h(1));
      });
      table.per_identity[0][i] = max_sigma_distance(cf, mc);
    });
    push_rows("bivariate-quartic", {"abs-product"}, table, n);
  }

  {  // Inverse Wishart moments
    const long n = 100000;
    SigmaTable table(4, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/inv-wishart", i);
      const int m = m_for_instance(static_cast<int>(i));
      const long n_dof = m + 2 + static_cast<long>(rng.uniform() * (2 * m + 4));
      const CMatrix c = random_psd(m, rng);
      const CMatrix a = random_cmatrix(m, rng);
      const InvWishartMoments cf(n_dof, m);
      const auto mc = inv_wishart(n_dof, m, c, a, n, rng);
      table.per_identity[0][i] = max_sigma_distance(cf.mean(), mc.mean);
      double worst = max_sigma_distance(cf.second_moment(0, 0, 0, 0),
                                        mc.second_0000, 1e-9);
      if (m > 1) {
        worst = std::max(worst, max_sigma_distance(cf.second_moment(0, 1, 0, 1),
                                                   mc.second_0101, 1e-9));
        worst = std::max(worst, max_sigma_distance(cf.second_moment(0, 1, 1, 0),
                                                   mc.second_0110, 1e-9));
        worst = std::max(worst, max_sigma_distance(cf.second_moment(0, 0, 1, 1),
                                                   mc.second_0011, 1e-9));
      }
      table.per_identity[1][i] = worst;
      table.per_identity[2][i] =
          max_sigma_distance(cf.tr_inv2(c), mc.tr_inv2);
      table.per_identity[3][i] =
          max_sigma_distance(cf.abs_tr_inv(a), mc.abs_tr_inv);
    });
    push_rows("inv-wishart",
              {"inverse-mean", "second-moments", "tr-inv2", "abs-tr-inv"},
              table, n);
  }

  {  // Cross-covariance second moments
    const long n = 100000;
    SigmaTable table(2, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/cross-cov", i);
      const int m = m_for_instance(static_cast<int>(i));
      const CMatrix r = random_psd(m, rng);
      const CMatrix q =
          r + random_psd(m, rng) + 0.2 * CMatrix::Identity(m, m);
      const CMatrix a = random_cmatrix(m, rng);
      const long n_r = 2 + static_cast<long>(rng.uniform() * 6);
      const auto cf = rddot_moments(r, q, a, static_cast<double>(n_r));
      const auto mc = rddot(r, q, a, n_r, n, rng);
      table.per_identity[0][i] = max_sigma_distance(cf.outer, mc.outer);
      table.per_identity[1][i] = max_sigma_distance(cf.abs_tr, mc.abs_tr);
    });
    push_rows("cross-cov", {"outer-moment", "abs-trace"}, table, n);
  }

  {  // Inverse chi-square diagonal moments
    const long n = 200000;
    SigmaTable table(2, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/inv-chi2", i);
      const int m = m_for_instance(static_cast<int>(i));
      const long n_dof = 4 + static_cast<long>(rng.uniform() * 20);
      const CMatrix a1 = random_cmatrix(m, rng);
      const CMatrix a2 = random_cmatrix(m, rng);
      const CMatrix a = random_cmatrix(m, rng);
      const auto cf = inv_chi2_moments(n_dof, a1, a2, a);
      const auto mc = inv_chi2(n_dof, a1, a2, a, n, rng);
      table.per_identity[0][i] =
          max_sigma_distance(cf.tr_two_factor.real(), mc.tr_two_factor);
      table.per_identity[1][i] = max_sigma_distance(cf.abs_tr, mc.abs_tr);
    });
    push_rows("inv-chi2", {"two-factor-trace", "abs-trace"}, table, n);
  }

  {  // Element-wise cross-covariance second moments
    const long n = 100000;
    SigmaTable table(2, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/el-cross-cov", i);
      const int m = m_for_instance(static_cast<int>(i));
      const CMatrix r = random_psd(m, rng);
      const CMatrix q =
          r + random_psd(m, rng) + 0.2 * CMatrix::Identity(m, m);
      const CMatrix a = random_cmatrix(m, rng);
      RVector d(m);
      for (int p = 0; p < m; ++p) d(p) = rng.uniform(-1.0, 1.0);
      const long n_r = 2 + static_cast<long>(rng.uniform() * 6);
      const auto cf = sddot_moments(r, q, a, d, static_cast<double>(n_r));
      const auto mc = sddot(r, q, a, d, n_r, n, rng);
      table.per_identity[0][i] = max_sigma_distance(cf.outer, mc.outer);
      table.per_identity[1][i] = max_sigma_distance(cf.abs_tr, mc.abs_tr);
    });
    push_rows("el-cross-cov", {"outer-moment", "abs-trace"}, table, n);
  }

  {  // E/G quadrature and the regularized-P trace identities
    const long n = 200000;
    SigmaTable table(4, instances);
    parallel_for(instances, threads, [&](long i) {
      RngStream rng = RngStream::derive(seed, "suite/reg-p", i);
      const int m = m_for_instance(static_cast<int>(i));
      const long n_q = 4 + static_cast<long>(rng.uniform() * 60);
      const double alpha_q = 0.5 + 0.5 * rng.uniform();
      RVector p(m), pb(m);
      for (int j = 0; j < m; ++j) {
        p(j) = 0.2 + 2.0 * rng.uniform();
        pb(j) = 0.2 + 2.0 * rng.uniform();
      }
      const auto eg = eg_matrices(p, alpha_q, pb, n_q);
      const auto mc_eg = eg_entry(p(0), alpha_q, pb(0), n_q, n, rng);
      table.per_identity[0][i] = max_sigma_distance(eg.E(0), mc_eg.e_entry);
      table.per_identity[1][i] = max_sigma_distance(eg.G(0), mc_eg.g_entry);
      const CMatrix a1 = random_cmatrix(m, rng);
      const CMatrix a2 = random_cmatrix(m, rng);
      const CMatrix a = random_cmatrix(m, rng);
      const auto cf = regP_moments(eg, a1, a2, a);
      const auto mc = regP(eg.E, eg.G, a1, a2, a, n, rng);
      table.per_identity[2][i] =
          max_sigma_distance(cf.tr_two_factor.real(), mc.tr_two_factor);
      table.per_identity[3][i] = max_sigma_distance(cf.abs_tr, mc.abs_tr);
    });
    push_rows("reg-p",
              {"first-inverse-moment", "second-inverse-moment",
               "two-factor-trace", "abs-trace"},
              table, n);
  }

  return rows;
}

}  // namespace oracles
}  // namespace mimose
