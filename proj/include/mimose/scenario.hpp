// SPDX-License-Identifier: Apache-2.0
//
// Multi-cell geometry and ground-truth second-order channel statistics.

#pragma once

#include "mimose/numkit.hpp"

#include <vector>

namespace mimose {

/// Affine mean-SNR model in dB: snr(d) = offset_db + slope * log10(d).
struct PathlossModel {
  double offset_db = 71.89;
  double slope_db_per_decade = -37.6;

  /// Builds the affine form from a physical link budget:
  /// PL(f,d) = 20 log10(4 pi f / c) + 10 n log10 d and
  /// SNR = P_T - PL - 10 log10(k T0 B) - NF with T0 = 290 K.
  static PathlossModel from_physical(double exponent, double frequency_hz,
                                     double tx_power_dbm, double bandwidth_hz,
                                     double noise_figure_db);
};

/// Mean received SNR in dB at distance d (meters).
double snr_from_distance(double d, const PathlossModel& pl);

/// One-ring covariance for a half-wavelength ULA:
///   R = (beta / spread) * integral over [theta0 +- spread/2] of a(t) a(t)^H
/// with a_m(t) = exp(i pi (m-1) sin t).  Midpoint rule with
/// quadrature_points panels; spread = 0 gives the rank-1 point source.
/// All diagonal entries equal beta.
CMatrix one_ring_covariance(double beta, double theta0, double spread, int m,
                            int quadrature_points = 200);

struct SystemConfig {
  int L = 7;   // cells
  int K = 10;  // users per cell
  int M = 100; // BS antennas
  int P = 10;  // pilot length (symbols)
  int C_u = 100;
  int C_d = 100;
  long tau_s = 25000;
  double mu = 1.0;      // UL transmit power (linear)
  double lambda = 10.0; // DL transmit power (linear)
  double inter_bs_distance = 300.0;
  double user_radius = 120.0;
  double angular_spread_deg = 20.0;
  int quadrature_points = 200;
  int target_user = 0;
  PathlossModel pathloss;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
};

/// Ground-truth statistics seen by the target BS (cell 0): per-user
/// covariances, their aggregates, and the interference sums entering the
/// SINR expressions.  Immutable after construction.
struct CovarianceSet {
  int L = 0, K = 0, M = 0;
  int target_cell = 0;
  double mu = 1.0;
  double lambda = 1.0;
  int pilot_len = 0;

  std::vector<std::vector<CMatrix>> R; // [l][k], M x M Hermitian PSD
  std::vector<CMatrix> Q;              // per user index k: sum_l R + I/(P mu)
  std::vector<RVector> P_diag;         // diag(Q[k])
  std::vector<std::vector<RVector>> S; // diag(R[l][k])
  CMatrix R_s;                         // sum_{l,k} R + I/mu
  CMatrix R_s_dl;                      // sum_{l,k} R
  RVector S_s;                         // diag(R_s)
  RVector S_s_dl;                      // diag(R_s_dl)

  const CMatrix& interference(bool downlink) const {
    return downlink ? R_s_dl : R_s;
  }
  const RVector& interference_diag(bool downlink) const {
    return downlink ? S_s_dl : S_s;
  }
};

/// Builds the hexagonal-style layout of the simulation setup: cell 0 at
/// the origin, cells 1..L-1 equally spaced on a ring of radius
/// inter_bs_distance; K users per cell equally spaced in azimuth at
/// user_radius, with the same azimuth offsets in every cell so that
/// pilot-sharing users occupy identical relative positions.
CovarianceSet build_covariance_set(const SystemConfig& cfg);

}  // namespace mimose
