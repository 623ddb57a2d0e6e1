// SPDX-License-Identifier: Apache-2.0

#include "mimose/mc_harness.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimose {

namespace {

struct TrialContext {
  const CovarianceSet* cov = nullptr;
  int u = 0;
  EstimatorKind kind = EstimatorKind::kLmmseType;
  long n_q = 0;
  long n_r = 0;
  double alpha_r = 0.95;
  CMatrix r_b;
  double alpha_q = 0.95;
  RVector p_b;
  bool check_rhat_spd = true;
  bool need_full_q = false;
  std::uint64_t base_seed = 0;

  std::vector<CMatrix> factors;  // psd_sqrt(R[l][u]) per cell
  double noise_std = 0.0;        // sqrt(1 / (P mu))
};

// One LS draw of the target user's pilot across all cells (ChEst block).
CVector draw_h1(const TrialContext& ctx, RngStream& rng) {
  const int m = ctx.cov->M;
  CVector h = ctx.noise_std * rng.cgauss_vector(m);
  for (const CMatrix& b : ctx.factors) h += b * rng.cgauss_vector(m);
  return h;
}

LsPair draw_pair(const TrialContext& ctx, RngStream& rng) {
  const int L = ctx.cov->L;
  const int m = ctx.cov->M;
  std::vector<CVector> channels(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l)
    channels[static_cast<std::size_t>(l)] =
        ctx.factors[static_cast<std::size_t>(l)] * rng.cgauss_vector(m);
  RVector theta(L);
  for (int l = 0; l < L; ++l) theta(l) = rng.angle();
  const CVector n1 = ctx.noise_std * rng.cgauss_vector(m);
  const CVector n2 = ctx.noise_std * rng.cgauss_vector(m);
  return ls_pair_direct(channels, ctx.cov->target_cell, theta, n1, n2);
}

struct TrialOutcome {
  bool aborted = false;
  bool rhat_not_spd = false;
  RVector stats;
};

TrialOutcome run_trial(const TrialContext& ctx, long trial) {
  const CovarianceSet& cov = *ctx.cov;
  const int L = cov.L;
  const int m = cov.M;
  TrialOutcome out;
  out.stats = RVector::Zero(L + 4);

  FilterMatrix w;
  if (!uses_estimated_cov(ctx.kind)) {
    // Known-covariance kinds have nothing to sample.
    if (ctx.kind == EstimatorKind::kLmmse)
      w = build_filter(ctx.kind, cov.R[0][static_cast<std::size_t>(ctx.u)],
                       cov.Q[static_cast<std::size_t>(ctx.u)]);
    else
      w = build_filter(ctx.kind, cov.S[0][static_cast<std::size_t>(ctx.u)],
                       cov.P_diag[static_cast<std::size_t>(ctx.u)]);
  } else {
    // Disjoint, independently seeded streams per the independence protocol:
    // Qhat blocks and Rddot blocks never share randomness.
    RngStream rng_q = RngStream::derive(ctx.base_seed, "mc/q-blocks",
                                        static_cast<std::uint64_t>(trial));
    RngStream rng_r = RngStream::derive(ctx.base_seed, "mc/r-blocks",
                                        static_cast<std::uint64_t>(trial));

    CMatrix qhat;
    RVector phat(m);
    if (ctx.need_full_q) {
      CMatrix acc = CMatrix::Zero(m, m);
      for (long n = 0; n < ctx.n_q; ++n) {
        const CVector h = draw_h1(ctx, rng_q);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(h, 1.0);
      }
      qhat = acc.selfadjointView<Eigen::Lower>();
      qhat /= static_cast<double>(ctx.n_q);
      phat = qhat.diagonal().real();
    } else {
      phat.setZero();
      for (long n = 0; n < ctx.n_q; ++n)
        phat += draw_h1(ctx, rng_q).cwiseAbs2();
      phat /= static_cast<double>(ctx.n_q);
    }

    CMatrix rddot = CMatrix::Zero(m, m);
    RVector sddot = RVector::Zero(m);
    if (ctx.kind == EstimatorKind::kLmmseType) {
      for (long n = 0; n < ctx.n_r; ++n) {
        const LsPair pair = draw_pair(ctx, rng_r);
        rddot += pair.h1 * pair.h2.adjoint();
      }
      rddot /= 2.0 * static_cast<double>(ctx.n_r);
      rddot = (rddot + rddot.adjoint()).eval();
    } else {
      for (long n = 0; n < ctx.n_r; ++n) {
        const LsPair pair = draw_pair(ctx, rng_r);
        sddot += pair.h1.cwiseProduct(pair.h2.conjugate()).real();
      }
      sddot /= static_cast<double>(ctx.n_r);
    }

    try {
      switch (ctx.kind) {
        case EstimatorKind::kLmmseType: {
          const CMatrix rhat = regularize(rddot, ctx.alpha_r, ctx.r_b);
          if (ctx.check_rhat_spd) {
            Eigen::SelfAdjointEigenSolver<CMatrix> eig(rhat,
                                                       Eigen::EigenvaluesOnly);
            if (eig.eigenvalues().minCoeff() <=
                -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
              out.rhat_not_spd = true;
          }
          w = build_filter(ctx.kind, rhat, qhat);
          break;
        }
        case EstimatorKind::kElLmmseType: {
          const RVector shat =
              ctx.alpha_r * sddot +
              (1.0 - ctx.alpha_r) * ctx.r_b.diagonal().real();
          w = build_filter(ctx.kind, shat, phat);
          break;
        }
        case EstimatorKind::kElLmmseTypeRegP: {
          const RVector shat =
              ctx.alpha_r * sddot +
              (1.0 - ctx.alpha_r) * ctx.r_b.diagonal().real();
          const RVector phat_reg = regularize(phat, ctx.alpha_q, ctx.p_b);
          w = build_filter(ctx.kind, shat, phat_reg);
          break;
        }
        default:
          throw std::logic_error("run_trial: unexpected kind");
      }
    } catch (const std::domain_error&) {
      out.aborted = true;
      return out;
    }
  }

  // The three trace statistics of the SINR expression.
  const CMatrix& r = cov.R[0][static_cast<std::size_t>(ctx.u)];
  const CMatrix& q = cov.Q[static_cast<std::size_t>(ctx.u)];
  Complex num;
  double den1_ul, den1_dl;
  if (w.is_diagonal()) {
    const RVector& wd = w.diag;
    num = Complex(
        (wd.array() * r.diagonal().real().array()).sum(),
        (wd.array() * r.diagonal().imag().array()).sum());
    const CMatrix wqw = wd.cast<Complex>().asDiagonal() * q *
                        wd.cast<Complex>().asDiagonal();
    den1_ul = trace_prod(wqw, cov.R_s).real();
    den1_dl = trace_prod(wqw, cov.R_s_dl).real();
    for (int l = 0; l < L; ++l) {
      const double tr = wd.dot(
          cov.S[static_cast<std::size_t>(l)][static_cast<std::size_t>(ctx.u)]);
      out.stats(4 + l) = tr * tr;
    }
  } else {
    num = trace_prod(w.full.adjoint().eval(), r);
    const CMatrix wqw = w.full * q * w.full.adjoint();
    den1_ul = trace_prod(wqw, cov.R_s).real();
    den1_dl = trace_prod(wqw, cov.R_s_dl).real();
    for (int l = 0; l < L; ++l)
      out.stats(4 + l) = std::norm(trace_prod(
          w.full.adjoint().eval(),
          cov.R[static_cast<std::size_t>(l)][static_cast<std::size_t>(ctx.u)]));
  }
  out.stats(0) = num.real();
  out.stats(1) = num.imag();
  out.stats(2) = den1_ul;
  out.stats(3) = den1_dl;
  return out;
}

}  // namespace

SimulatedTerms simulate_terms(const CovarianceSet& cov, int u,
                              EstimatorKind kind, long n_q, long n_r,
                              const RegularizationR& reg,
                              const RegularizationP& reg_p,
                              const SimulateOptions& opt) {
  if (u < 0 || u >= cov.K)
    throw std::invalid_argument("simulate_terms: user index out of range");
  if (opt.n_trials < 1)
    throw std::invalid_argument("simulate_terms: n_trials must be >= 1");
  if (uses_estimated_cov(kind)) {
    if (n_q < 1 || n_r < 1)
      throw std::invalid_argument("simulate_terms: N_Q and N_R must be >= 1");
  }

  TrialContext ctx;
  ctx.cov = &cov;
  ctx.u = u;
  ctx.kind = kind;
  ctx.n_q = n_q;
  ctx.n_r = n_r;
  ctx.alpha_r = reg.alpha_R;
  ctx.r_b = resolve_bias_r(reg, cov.M);
  ctx.alpha_q = reg_p.alpha_Q;
  ctx.p_b = resolve_bias_p(reg_p, cov.M);
  ctx.check_rhat_spd = opt.check_rhat_spd;
  ctx.need_full_q = kind == EstimatorKind::kLmmseType;
  ctx.noise_std =
      std::sqrt(1.0 / (static_cast<double>(cov.pilot_len) * cov.mu));
  for (int l = 0; l < cov.L; ++l)
    ctx.factors.push_back(
        psd_sqrt(cov.R[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)]));

  ctx.base_seed = opt.base_seed;

  const long n = opt.n_trials;
  const int dim = cov.L + 4;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n));
  parallel_for(n, opt.threads > 0 ? opt.threads : default_threads(),
               [&](long t) {
                 outcomes[static_cast<std::size_t>(t)] = run_trial(ctx, t);
               });

  SimulatedTerms out;
  out.L = cov.L;
  out.mean = RVector::Zero(dim);
  out.stderr_ = RVector::Zero(dim);
  out.covariance = RMatrix::Zero(dim, dim);

  long kept = 0;
  for (const auto& o : outcomes) {
    if (o.aborted) {
      ++out.aborted;
      continue;
    }
    if (o.rhat_not_spd) ++out.rhat_not_spd;
    ++kept;
    out.mean += o.stats;
  }
  if (kept == 0)
    throw std::runtime_error("simulate_terms: every trial aborted");
  out.mean /= static_cast<double>(kept);
  out.n_trials = kept;
  out.trial_stats.resize(kept, dim);
  {
    long row = 0;
    for (const auto& o : outcomes)
      if (!o.aborted) out.trial_stats.row(row++) = o.stats.transpose();
  }
  if (kept >= 2) {
    for (const auto& o : outcomes) {
      if (o.aborted) continue;
      const RVector d = o.stats - out.mean;
      out.covariance += d * d.transpose();
    }
    out.covariance /= static_cast<double>(kept - 1);
    out.stderr_ =
        (out.covariance.diagonal() / static_cast<double>(kept)).cwiseSqrt();
  } else {
    // A single trial carries no variance information.
    out.stderr_.setConstant(std::numeric_limits<double>::infinity());
  }
  return out;
}

namespace {

// SE value from a stat vector (num_re, num_im, den1_ul, den1_dl, den2...).
double se_from_stats(const RVector& stats, int L, Link link, double lambda,
                     double prelog_factor) {
  const double d = link == Link::kDownlink ? 1.0 / lambda : 0.0;
  const double num = stats(0);
  double den = (link == Link::kUplink ? stats(2) : stats(3)) + d - num * num;
  for (int l = 0; l < L; ++l) den += stats(4 + l);
  if (!(den > 0.0))
    throw std::domain_error("simulated_se: non-positive denominator");
  const double gamma = num * num / den;
  return spectral_efficiency(gamma, prelog_factor, link);
}

}  // namespace

SimulatedSE simulated_se(const SimulatedTerms& sim, Link link, double lambda,
                         double prelog_factor) {
  const int L = sim.L;
  const double d = link == Link::kDownlink ? 1.0 / lambda : 0.0;
  const double num = sim.num();
  double den = sim.den1(link) + d - num * num;
  for (int l = 0; l < L; ++l) den += sim.den2(l);
  if (!(den > 0.0))
    throw std::domain_error("simulated_se: non-positive denominator");
  const double gamma = num * num / den;

  SimulatedSE out;
  out.gamma = gamma;
  out.se = spectral_efficiency(gamma, prelog_factor, link);

  const long n = sim.n_trials;
  const bool have_trials =
      sim.trial_stats.rows() == n && n >= 3;
  if (have_trials) {
    // Jackknife over trials: leave-one-out means are cheap updates of the
    // full mean, and the correction removes the O(1/n) plug-in bias.
    bool usable = true;
    const RVector total = sim.mean * static_cast<double>(n);
    RVector loo(sim.mean.size());
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> values(static_cast<std::size_t>(n));
    for (long i = 0; i < n && usable; ++i) {
      loo = (total - sim.trial_stats.row(i).transpose()) /
            static_cast<double>(n - 1);
      try {
        values[static_cast<std::size_t>(i)] =
            se_from_stats(loo, L, link, lambda, prelog_factor);
      } catch (const std::domain_error&) {
        usable = false;
      }
    }
    if (usable) {
      for (double v : values) sum += v;
      const double mbar = sum / static_cast<double>(n);
      for (double v : values) sum2 += (v - mbar) * (v - mbar);
      out.se = static_cast<double>(n) * out.se -
               static_cast<double>(n - 1) * mbar;
      out.se_stderr = std::sqrt(sum2 * static_cast<double>(n - 1) /
                                static_cast<double>(n));
      return out;
    }
  }

  // Fallback: first-order delta method through gamma = num^2 / den.
  RVector grad = RVector::Zero(L + 4);
  grad(0) = 2.0 * num / den + 2.0 * num * num * num / (den * den);
  grad(link == Link::kUplink ? 2 : 3) = -num * num / (den * den);
  for (int l = 0; l < L; ++l) grad(4 + l) = -num * num / (den * den);
  const double gamma_var =
      grad.dot(sim.covariance * grad) / static_cast<double>(sim.n_trials);
  const double se_scale =
      (link == Link::kUplink ? prelog_factor : 1.0) /
      ((1.0 + gamma) * std::log(2.0));
  out.se_stderr = se_scale * std::sqrt(std::max(gamma_var, 0.0));
  return out;
}

SweepResult run_sweep(const CovarianceSet& cov, int u,
                      const PilotBudget& budget, const RegularizationR& reg,
                      const RegularizationP& reg_p, const SweepSpec& spec) {
  SweepResult result;
  std::uint64_t cell_index = 0;
  for (long n_q : spec.nq_grid) {
    for (long n_r : spec.nr_grid) {
      for (EstimatorKind kind : spec.kinds) {
        // One draw set per (n_q, n_r, kind) cell, shared by both links.
        SimulatedTerms sim;
        bool sim_ok = false;
        std::string sim_status;
        if (spec.n_trials > 0 && uses_estimated_cov(kind)) {
          SimulateOptions opt;
          opt.n_trials = spec.n_trials;
          opt.base_seed = spec.base_seed + 0x1000 * cell_index;
          opt.threads = spec.threads;
          try {
            sim = simulate_terms(cov, u, kind, n_q, n_r, reg, reg_p, opt);
            sim_ok = true;
          } catch (const std::exception& e) {
            sim_status = e.what();
          }
        }
        for (Link link : spec.links) {
          SweepCell cell;
          cell.kind = kind;
          cell.link = link;
          cell.n_r = n_r;
          cell.n_q = n_q;
          cell.n_trials = spec.n_trials;
          try {
            PilotBudget b = budget;
            b.N_R = n_r;
            b.N_Q = n_q;
            cell.prelog = prelog(b);
            const TermSet t = terms_for_kind(cov, u, kind, n_q,
                                             static_cast<double>(n_r), reg,
                                             reg_p, link);
            cell.gamma_theory = sinr(t, link, cov.lambda);
            cell.se_theory =
                spectral_efficiency(cell.gamma_theory, cell.prelog, link);
            if (spec.n_trials > 0 && !uses_estimated_cov(kind)) {
              // Known-covariance kinds: no sampling enters the filter, the
              // simulated SE coincides with the theoretical one.
              cell.gamma_sim = cell.gamma_theory;
              cell.se_sim = cell.se_theory;
              cell.sim_stderr = 0.0;
              cell.has_sim = true;
            } else if (sim_ok) {
              const SimulatedSE s =
                  simulated_se(sim, link, cov.lambda, cell.prelog);
              cell.gamma_sim = s.gamma;
              cell.se_sim = s.se;
              cell.sim_stderr = s.se_stderr;
              cell.has_sim = true;
            } else if (!sim_status.empty()) {
              cell.status = sim_status;
            }
          } catch (const std::exception& e) {
            cell.status = e.what();
          }
          result.cells.push_back(std::move(cell));
        }
        ++cell_index;
      }
    }
  }
  return result;
}

CurveSummary compare_curves(const SweepResult& sweep) {
  if (sweep.cells.empty())
    throw std::invalid_argument("compare_curves: empty sweep");
  CurveSummary summary;
  long covered = 0;
  for (const auto& cell : sweep.cells) {
    if (!cell.has_sim || cell.status != "ok") continue;
    ++summary.cells_with_sim;
    const double gap = std::abs(cell.se_sim - cell.se_theory);
    if (cell.se_theory != 0.0)
      summary.max_rel_gap =
          std::max(summary.max_rel_gap, gap / std::abs(cell.se_theory));
    if (gap <= 3.0 * cell.sim_stderr + 1e-12) ++covered;
  }
  summary.coverage =
      summary.cells_with_sim
          ? static_cast<double>(covered) / summary.cells_with_sim
          : 1.0;

  // Empirical crossing of the two estimated-covariance theory curves.
  std::vector<std::pair<Link, long>> combos;
  for (const auto& cell : sweep.cells) {
    const std::pair<Link, long> key{cell.link, cell.n_q};
    bool seen = false;
    for (const auto& c : combos) seen = seen || c == key;
    if (!seen) combos.push_back(key);
  }
  for (const auto& [link, n_q] : combos) {
    CurveSummary::Crossing crossing;
    crossing.link = link;
    crossing.n_q = n_q;
    long last_el = 0;
    bool all_el = true;
    bool any = false;
    for (const auto& full : sweep.cells) {
      if (full.link != link || full.n_q != n_q ||
          full.kind != EstimatorKind::kLmmseType || full.status != "ok")
        continue;
      for (const auto& el : sweep.cells) {
        if (el.link != link || el.n_q != n_q || el.n_r != full.n_r ||
            el.kind != EstimatorKind::kElLmmseType || el.status != "ok")
          continue;
        any = true;
        if (el.gamma_theory >= full.gamma_theory)
          last_el = std::max(last_el, full.n_r);
        else
          all_el = false;
      }
    }
    if (!any) continue;
    crossing.el_dominates_grid = all_el;
    crossing.last_el_preferred_nr = last_el;
    summary.crossings.push_back(crossing);
  }
  return summary;
}

}  // namespace mimose
