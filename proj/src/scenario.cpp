// SPDX-License-Identifier: Apache-2.0

#include "mimose/scenario.hpp"

#include "detail/gauss_legendre.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mimose {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSpeedOfLight = 3.0e8;
constexpr double kBoltzmann = 1.380649e-23;
constexpr double kNominalTempK = 290.0;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

PathlossModel PathlossModel::from_physical(double exponent, double frequency_hz,
                                           double tx_power_dbm,
                                           double bandwidth_hz,
                                           double noise_figure_db) {
  require(exponent > 0 && frequency_hz > 0 && bandwidth_hz > 0,
          "pathloss: exponent, frequency_hz and bandwidth_hz must be positive");
  const double pl_const =
      20.0 * std::log10(4.0 * kPi * frequency_hz / kSpeedOfLight);
  const double noise_db =
      10.0 * std::log10(kBoltzmann * kNominalTempK * bandwidth_hz);
  PathlossModel pl;
  pl.offset_db = tx_power_dbm - pl_const - noise_db - noise_figure_db;
  pl.slope_db_per_decade = -10.0 * exponent;
  return pl;
}

double snr_from_distance(double d, const PathlossModel& pl) {
  require(d > 0, "snr_from_distance: distance must be positive");
  return pl.offset_db + pl.slope_db_per_decade * std::log10(d);
}

CMatrix one_ring_covariance(double beta, double theta0, double spread, int m,
                            int quadrature_points) {
  require(spread >= 0, "one_ring_covariance: spread must be >= 0");
  require(m >= 1, "one_ring_covariance: M must be >= 1");
  CVector a(m);
  if (spread == 0.0) {
    const double s = std::sin(theta0);
    for (int i = 0; i < m; ++i)
      a(i) = std::polar(1.0, kPi * static_cast<double>(i) * s);
    return beta * (a * a.adjoint());
  }
  require(quadrature_points >= 2,
          "one_ring_covariance: quadrature_points must be >= 2 for spread > 0");
  // Composite Gauss-Legendre panels; positive weights keep the sum PSD.
  const int panels =
      std::max(1, quadrature_points / (2 * static_cast<int>(
                                               detail::kGl20Nodes.size())));
  const double panel_w = spread / panels;
  CMatrix r = CMatrix::Zero(m, m);
  for (int seg = 0; seg < panels; ++seg) {
    const double mid = theta0 - spread / 2 + panel_w * (seg + 0.5);
    const double half = panel_w / 2.0;
    for (std::size_t k = 0; k < detail::kGl20Nodes.size(); ++k) {
      for (int sign = -1; sign <= 1; sign += 2) {
        const double theta = mid + sign * half * detail::kGl20Nodes[k];
        const double s = std::sin(theta);
        for (int i = 0; i < m; ++i)
          a(i) = std::polar(1.0, kPi * static_cast<double>(i) * s);
        r.selfadjointView<Eigen::Lower>().rankUpdate(
            a, half * detail::kGl20Weights[k]);
      }
    }
  }
  r = r.selfadjointView<Eigen::Lower>();
  return (beta / spread) * r;
}

void SystemConfig::validate() const {
  require(L >= 1, "scenario.L: must be >= 1");
  require(K >= 1, "scenario.K: must be >= 1");
  require(M >= 1, "scenario.M: must be >= 1");
  require(P >= K, "budget.P: must satisfy P >= K");
  require(C_u >= P, "budget.C_u: must satisfy C_u >= P");
  require(C_d >= 1, "budget.C_d: must be >= 1");
  require(tau_s >= 1, "budget.tau_s: must be >= 1");
  require(mu > 0, "power.mu: must be > 0");
  require(lambda > 0, "power.lambda: must be > 0");
  require(inter_bs_distance > 0, "scenario.inter_bs_distance_m: must be > 0");
  require(user_radius > 0, "scenario.user_radius_m: must be > 0");
  require(angular_spread_deg >= 0, "scenario.angular_spread_deg: must be >= 0");
  require(quadrature_points >= 2, "scenario.quadrature_points: must be >= 2");
  require(target_user >= 0 && target_user < K,
          "scenario.target_user: must be in [0, K)");
}

CovarianceSet build_covariance_set(const SystemConfig& cfg) {
  cfg.validate();
  const int L = cfg.L, K = cfg.K, M = cfg.M;
  const double spread = cfg.angular_spread_deg * kPi / 180.0;

  std::vector<std::array<double, 2>> bs(L);
  bs[0] = {0.0, 0.0};
  for (int l = 1; l < L; ++l) {
    const double ang = 2.0 * kPi * (l - 1) / (L - 1);
    bs[l] = {cfg.inter_bs_distance * std::cos(ang),
             cfg.inter_bs_distance * std::sin(ang)};
  }

  CovarianceSet cov;
  cov.L = L;
  cov.K = K;
  cov.M = M;
  cov.mu = cfg.mu;
  cov.lambda = cfg.lambda;
  cov.pilot_len = cfg.P;
  cov.R.assign(L, std::vector<CMatrix>(K));
  cov.S.assign(L, std::vector<RVector>(K));

  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      // Same azimuth offsets in every cell: pilot-sharing users sit at
      // identical positions relative to their own BS.
      const double phi = kPi / (2.0 * K) + 2.0 * kPi * k / K;
      const double ux = bs[l][0] + cfg.user_radius * std::cos(phi);
      const double uy = bs[l][1] + cfg.user_radius * std::sin(phi);
      const double d = std::hypot(ux, uy);  // distance to target BS (origin)
      if (d <= 0.0)
        throw std::invalid_argument(
            "build_covariance_set: user coincides with the target BS");
      const double beta =
          std::pow(10.0, snr_from_distance(d, cfg.pathloss) / 10.0);
      const double theta0 = std::atan2(uy, ux);
      cov.R[l][k] = one_ring_covariance(beta, theta0, spread, M,
                                        cfg.quadrature_points);
      cov.S[l][k] = cov.R[l][k].diagonal().real();
    }
  }

  cov.Q.resize(K);
  cov.P_diag.resize(K);
  const CMatrix eye = CMatrix::Identity(M, M);
  for (int k = 0; k < K; ++k) {
    CMatrix q = eye / (static_cast<double>(cfg.P) * cfg.mu);
    for (int l = 0; l < L; ++l) q += cov.R[l][k];
    cov.Q[k] = q;
    cov.P_diag[k] = q.diagonal().real();
  }

  CMatrix sum = CMatrix::Zero(M, M);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) sum += cov.R[l][k];
  cov.R_s_dl = sum;
  cov.R_s = sum + eye / cfg.mu;
  cov.S_s = cov.R_s.diagonal().real();
  cov.S_s_dl = cov.R_s_dl.diagonal().real();
  return cov;
}

}  // namespace mimose
