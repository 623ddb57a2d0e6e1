// SPDX-License-Identifier: Apache-2.0

#include "mimose/estimators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mimose {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kLmmse: return "lmmse";
    case EstimatorKind::kElLmmse: return "el-lmmse";
    case EstimatorKind::kLmmseType: return "lmmse-type";
    case EstimatorKind::kElLmmseType: return "el-lmmse-type";
    case EstimatorKind::kElLmmseTypeRegP: return "el-lmmse-type-regp";
  }
  throw std::logic_error("to_string: unknown estimator kind");
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "lmmse") return EstimatorKind::kLmmse;
  if (name == "el-lmmse") return EstimatorKind::kElLmmse;
  if (name == "lmmse-type") return EstimatorKind::kLmmseType;
  if (name == "el-lmmse-type") return EstimatorKind::kElLmmseType;
  if (name == "el-lmmse-type-regp") return EstimatorKind::kElLmmseTypeRegP;
  throw std::invalid_argument("unknown estimator kind: " + name);
}

bool is_elementwise(EstimatorKind kind) {
  return kind == EstimatorKind::kElLmmse ||
         kind == EstimatorKind::kElLmmseType ||
         kind == EstimatorKind::kElLmmseTypeRegP;
}

bool uses_estimated_cov(EstimatorKind kind) {
  return kind == EstimatorKind::kLmmseType ||
         kind == EstimatorKind::kElLmmseType ||
         kind == EstimatorKind::kElLmmseTypeRegP;
}

PilotBook gen_pilots(int P, int K) {
  if (P < K)
    throw std::invalid_argument("gen_pilots: pilot length P must be >= K");
  PilotBook book;
  book.P = P;
  book.pilots.resize(P, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < P; ++n)
      book.pilots(n, k) = std::polar(1.0, -2.0 * kPi * n * k / P);
  return book;
}

RMatrix gen_phase_shifts(int L, long n_r, RngStream& rng) {
  if (L < 1 || n_r < 1)
    throw std::invalid_argument("gen_phase_shifts: L and N_R must be >= 1");
  RMatrix theta(L, n_r);
  for (int l = 0; l < L; ++l)
    for (long n = 0; n < n_r; ++n) theta(l, n) = rng.angle();
  return theta;
}

LsPair ls_pair_direct(std::span<const CVector> channels_per_cell,
                      int target_cell, const RVector& theta,
                      const CVector& noise1, const CVector& noise2) {
  const int L = static_cast<int>(channels_per_cell.size());
  if (theta.size() != L)
    throw std::invalid_argument("ls_pair_direct: theta size must equal L");
  if (target_cell < 0 || target_cell >= L)
    throw std::invalid_argument("ls_pair_direct: bad target cell");
  const Eigen::Index m = noise1.size();
  for (const auto& h : channels_per_cell)
    if (h.size() != m)
      throw std::invalid_argument("ls_pair_direct: channel dimension mismatch");

  LsPair out;
  out.h1 = noise1;
  out.h2 = std::polar(1.0, -theta(target_cell)) * noise2;
  for (int l = 0; l < L; ++l) {
    out.h1 += channels_per_cell[l];
    if (l == target_cell)
      out.h2 += channels_per_cell[l];
    else
      out.h2 += std::polar(1.0, theta(l) - theta(target_cell)) *
                channels_per_cell[l];
  }
  return out;
}

CMatrix received_chest_grid(const std::vector<std::vector<CVector>>& channels,
                            const PilotBook& pilots, double mu,
                            const CMatrix& noise) {
  CMatrix y = noise;
  const double root_mu = std::sqrt(mu);
  for (std::size_t l = 0; l < channels.size(); ++l)
    for (std::size_t k = 0; k < channels[l].size(); ++k)
      y += root_mu * channels[l][k] *
           pilots.pilots.col(static_cast<Eigen::Index>(k)).transpose();
  return y;
}

CMatrix received_covest_grid(const std::vector<std::vector<CVector>>& channels,
                             const PilotBook& pilots, const RVector& theta,
                             double mu, const CMatrix& noise) {
  CMatrix y = noise;
  const double root_mu = std::sqrt(mu);
  for (std::size_t l = 0; l < channels.size(); ++l) {
    const Complex shift = std::polar(1.0, theta(static_cast<Eigen::Index>(l)));
    for (std::size_t k = 0; k < channels[l].size(); ++k)
      y += root_mu * shift * channels[l][k] *
           pilots.pilots.col(static_cast<Eigen::Index>(k)).transpose();
  }
  return y;
}

CVector ls_from_grid(const CMatrix& y, const CVector& pilot, double mu) {
  if (y.cols() != pilot.size())
    throw std::invalid_argument("ls_from_grid: pilot length mismatch");
  const double p = static_cast<double>(pilot.size());
  return (y * pilot.conjugate()) / (p * std::sqrt(mu));
}

SampleCovQP sample_cov_QP(std::span<const CVector> ls_estimates) {
  if (ls_estimates.empty())
    throw std::invalid_argument("sample_cov_QP: N_Q must be >= 1");
  const Eigen::Index m = ls_estimates.front().size();
  CMatrix q = CMatrix::Zero(m, m);
  for (const auto& h : ls_estimates)
    q.selfadjointView<Eigen::Lower>().rankUpdate(h, 1.0);
  q = q.selfadjointView<Eigen::Lower>();
  q /= static_cast<double>(ls_estimates.size());
  return {q, q.diagonal().real()};
}

CrossCovRS cross_cov_RS(std::span<const LsPair> pairs) {
  if (pairs.empty())
    throw std::invalid_argument("cross_cov_RS: N_R must be >= 1");
  const Eigen::Index m = pairs.front().h1.size();
  CMatrix r = CMatrix::Zero(m, m);
  for (const auto& p : pairs) r += p.h1 * p.h2.adjoint();
  r /= 2.0 * static_cast<double>(pairs.size());
  r = (r + r.adjoint()).eval();
  return {r, r.diagonal().real()};
}

CMatrix regularize(const CMatrix& raw, double alpha, const CMatrix& bias) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("regularize: alpha must be in [0, 1]");
  if (raw.rows() != bias.rows() || raw.cols() != bias.cols())
    throw std::invalid_argument("regularize: bias dimension mismatch");
  if (!is_hermitian(bias))
    throw std::invalid_argument("regularize: bias matrix must be Hermitian");
  return alpha * raw + (1.0 - alpha) * bias;
}

RVector regularize(const RVector& raw, double alpha, const RVector& bias) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("regularize: alpha must be in [0, 1]");
  if (raw.size() != bias.size())
    throw std::invalid_argument("regularize: bias dimension mismatch");
  if (alpha < 1.0 && (bias.array() <= 0.0).any())
    throw std::invalid_argument("regularize: diagonal bias must be positive");
  return alpha * raw + (1.0 - alpha) * bias;
}

FilterMatrix build_filter(EstimatorKind kind, const CMatrix& r_num,
                          const CMatrix& q_den) {
  if (is_elementwise(kind))
    throw std::invalid_argument(
        "build_filter: element-wise kinds take diagonal inputs");
  if (r_num.rows() != q_den.rows() || q_den.rows() != q_den.cols())
    throw std::invalid_argument("build_filter: dimension mismatch");
  Eigen::FullPivLU<CMatrix> lu(q_den);
  if (!lu.isInvertible())
    throw std::domain_error("build_filter: Q is numerically singular");
  FilterMatrix w;
  w.kind = kind;
  // W = R Q^-1 with Hermitian Q: solve Q X = R^H, then W = X^H.
  w.full = lu.solve(r_num.adjoint()).adjoint();
  return w;
}

FilterMatrix build_filter(EstimatorKind kind, const RVector& s_num,
                          const RVector& p_den) {
  if (!is_elementwise(kind))
    throw std::invalid_argument(
        "build_filter: full-matrix kinds take matrix inputs");
  if (s_num.size() != p_den.size())
    throw std::invalid_argument("build_filter: dimension mismatch");
  if ((p_den.array() <= 0.0).any())
    throw std::domain_error("build_filter: P has non-positive entries");
  FilterMatrix w;
  w.kind = kind;
  w.diag = s_num.cwiseQuotient(p_den);
  return w;
}

CVector apply_filter(const FilterMatrix& w, const CVector& h_ls) {
  if (w.is_diagonal()) return w.diag.cast<Complex>().cwiseProduct(h_ls);
  return w.full * h_ls;
}

}  // namespace mimose
