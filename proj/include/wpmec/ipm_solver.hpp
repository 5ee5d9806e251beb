#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "wpmec/lp_builder.hpp"

namespace wpmec {

using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

enum class SolveStatus {
  kConverged,
  kIterationLimit,
  kInfeasibleOrStalled,
  kNumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kIterationLimit: return "iteration-limit";
    case SolveStatus::kInfeasibleOrStalled: return "infeasible-or-stalled";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct SolverOptions {
  double mu0 = 1.0;            // initial barrier weight (adaptive mode rescales)
  double decay = 0.2;          // attenuation coefficient phi
  double tol = 1e-8;           // max-residual threshold epsilon
  int max_iters = 200;         // L
  double fraction_to_boundary = 0.995;  // tau
  double goldstein_c = 1e-4;   // sufficient-decrease constant
  double beta_min = 1e-12;     // step underflow -> numerical failure
  // scheduled: mu_k = mu0 * phi^k exactly (the literal per-iteration decay).
  // adaptive (default): mu tracks complementarity, mu <- clamp(sigma_k x'l/n),
  // still strictly decreasing and phi-driven on full steps.
  enum class MuRule { kAdaptive, kScheduled } mu_rule = MuRule::kAdaptive;
  bool record_trace = false;
  int stall_window = 40;       // residual non-progress window
};

// Interior-point iterate on the slack form. lambda_i = mu / x3_i at init.
struct BarrierState {
  Vec x3;
  Vec lambda;
  Vec v;
  double mu = 0.0;
  int iter = 0;
};

struct KktResidual {
  Vec g1;  // A2 x3 - b
  Vec g2;  // X Lambda 1 - mu 1
  Vec g3;  // A2^T v + c3 - lambda

  double max_abs() const {
    double m = 0.0;
    if (g1.size()) m = std::max(m, g1.cwiseAbs().maxCoeff());
    if (g2.size()) m = std::max(m, g2.cwiseAbs().maxCoeff());
    if (g3.size()) m = std::max(m, g3.cwiseAbs().maxCoeff());
    return m;
  }
};

struct NewtonDirection {
  Vec dlambda, dv, dx3;
};

struct IterationRecord {
  int iter;
  double mu;
  double residual;
  double beta;
  double objective;
};

struct SolverStats {
  int iterations = 0;
  double final_residual = 0.0;
  double final_mu = 0.0;
  double wall_ms = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vec x1;                   // recovered original variables (scaled units)
  double objective = 0.0;   // c1^T x1 in scaled units
  SolverStats stats;
  std::vector<IterationRecord> trace;
};

// F_mu(lambda, v, x3) per the three-block KKT system.
inline KktResidual residual(const BarrierState& st, const SlackFormLp& lp) {
  KktResidual r;
  const int nv = lp.n_original;
  const int nr = lp.rows();
  auto A1 = lp.A2.leftCols(nv);  // A2 = [A1 | I]
  r.g1 = A1 * st.x3.head(nv) + st.x3.tail(nr) - lp.b;
  r.g2 = st.x3.cwiseProduct(st.lambda) - Vec::Constant(st.x3.size(), st.mu);
  r.g3.resize(nv + nr);
  r.g3.head(nv) = A1.transpose() * st.v + lp.c3.head(nv) - st.lambda.head(nv);
  r.g3.tail(nr) = st.v + lp.c3.tail(nr) - st.lambda.tail(nr);
  return r;
}

// Production route: eliminate dlambda via the third block row, then dx3,
// leaving the SPD normal equations A2 D A2^T dv = rhs with D = X / Lambda.
// Cholesky with escalating diagonal regularization; long-double iterative
// refinement keeps the back-substitution residual near the 1e-10 mark even
// at degenerate vertices where cond(A2 D A2^T) approaches 1/eps.
inline std::optional<NewtonDirection> newton_direction(
    const BarrierState& st, const SlackFormLp& lp) {
  const int r = lp.rows();
  const int nv = lp.n_original;
  KktResidual g = residual(st, lp);

  // A2 = [A1 | I], so M = A1 D1 A1^T + diag(D2) with D = X / Lambda split
  // into original and slack blocks.
  auto A1 = lp.A2.leftCols(nv);
  Vec d = st.x3.cwiseQuotient(st.lambda);
  Mat M = A1 * d.head(nv).asDiagonal() * A1.transpose();
  M.diagonal() += d.tail(r);
  double tr = std::max(1.0, M.trace() / r);

  Eigen::LLT<Mat> llt;
  double reg = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Mat Mreg = M;
    if (reg > 0.0) Mreg.diagonal().array() += reg;
    llt.compute(Mreg);
    if (llt.info() == Eigen::Success) break;
    reg = (reg == 0.0) ? 1e-12 * tr : reg * 100.0;
  }
  if (llt.info() != Eigen::Success) return std::nullopt;

  MatL A1L = A1.cast<long double>();
  auto apply_A2 = [&](const VecL& z) -> VecL {
    return A1L * z.head(nv) + z.tail(r);
  };
  auto apply_A2t = [&](const VecL& z) -> VecL {
    VecL out(nv + r);
    out.head(nv) = A1L.transpose() * z;
    out.tail(r) = z;
    return out;
  };

  // rhs = g1 - A2 ((g2 + X g3) / lambda), assembled in long double.
  VecL xL = st.x3.cast<long double>();
  VecL lamL = st.lambda.cast<long double>();
  VecL wL = (g.g2.cast<long double>() +
             xL.cwiseProduct(g.g3.cast<long double>()))
                .cwiseQuotient(lamL);
  VecL rhsL = g.g1.cast<long double>() - apply_A2(wL);
  VecL dL_ = xL.cwiseQuotient(lamL);

  Vec dv = llt.solve(rhsL.cast<double>());
  for (int pass = 0; pass < 3; ++pass) {
    // true residual of the normal equations, via factored matvecs
    VecL rres = rhsL - apply_A2(dL_.cwiseProduct(apply_A2t(dv.cast<long double>())));
    dv += llt.solve(rres.cast<double>());
  }

  VecL dvL = dv.cast<long double>();
  VecL dxL = -(wL + dL_.cwiseProduct(apply_A2t(dvL)));
  VecL dlamL = apply_A2t(dvL) + g.g3.cast<long double>();

  NewtonDirection nd;
  nd.dv = dv;
  nd.dx3 = dxL.cast<double>();
  nd.dlambda = dlamL.cast<double>();
  return nd;
}

// Test/oracle route: dense LU of the full 3x3 block system
// [[0,0,A2],[X,0,Lambda],[-I,A2^T,0]] (dlambda, dv, dx3) = -(g1,g2,g3).
inline NewtonDirection newton_direction_full(const BarrierState& st,
                                             const SlackFormLp& lp) {
  const int n = lp.vars();
  const int r = lp.rows();
  KktResidual g = residual(st, lp);
  Mat J = Mat::Zero(r + 2 * n, 2 * n + r);
  // variable order: [dlambda (n), dv (r), dx3 (n)]
  J.block(0, n + r, r, n) = lp.A2;
  J.block(r, 0, n, n) = st.x3.asDiagonal();
  J.block(r, n + r, n, n) = st.lambda.asDiagonal();
  J.block(r + n, 0, n, n) = -Mat::Identity(n, n);
  J.block(r + n, n, n, r) = lp.A2.transpose();
  Vec rhs(r + 2 * n);
  rhs << -g.g1, -g.g2, -g.g3;
  Vec sol = J.partialPivLu().solve(rhs);
  NewtonDirection nd;
  nd.dlambda = sol.segment(0, n);
  nd.dv = sol.segment(n, r);
  nd.dx3 = sol.segment(n + r, n);
  return nd;
}

// Largest beta in (0,1] passing (a) the fraction-to-boundary rule on x3 and
// lambda and (b) a Goldstein-style sufficient-decrease test on ||F_mu||_inf,
// backtracking geometrically. Returns 0 on underflow below beta_min.
inline double step_length(const BarrierState& st, const NewtonDirection& dir,
                          const SlackFormLp& lp, const SolverOptions& opt,
                          double current_residual, double tau) {
  double beta = 1.0;
  for (int i = 0; i < st.x3.size(); ++i)
    if (dir.dx3[i] < 0.0)
      beta = std::min(beta, -tau * st.x3[i] / dir.dx3[i]);
  for (int i = 0; i < st.lambda.size(); ++i)
    if (dir.dlambda[i] < 0.0)
      beta = std::min(beta, -tau * st.lambda[i] / dir.dlambda[i]);

  BarrierState trial = st;
  for (int bt = 0; bt < 40; ++bt) {
    if (beta < opt.beta_min) return 0.0;
    trial.x3 = st.x3 + beta * dir.dx3;
    trial.lambda = st.lambda + beta * dir.dlambda;
    trial.v = st.v + beta * dir.dv;
    if ((trial.x3.array() > 0.0).all() && (trial.lambda.array() > 0.0).all()) {
      double next = residual(trial, lp).max_abs();
      if (next <= (1.0 - opt.goldstein_c * beta) * current_residual)
        return beta;
    }
    beta *= 0.5;
  }
  return 0.0;
}

namespace detail {

// Row-equilibrated copy of the standard form: row i divided by
// max(|A_i.|inf, |b_i|). Same x1 solution, O(1) rows for the solver.
struct ScaledLp {
  SlackFormLp slack;
  Vec row_scale;
};

inline ScaledLp equilibrate(const StandardFormLp& lp) {
  ScaledLp out;
  const int r = lp.rows();
  Mat A = lp.A;
  Vec b = lp.b;
  out.row_scale = Vec::Ones(r);
  for (int i = 0; i < r; ++i) {
    double s = std::max(A.row(i).cwiseAbs().maxCoeff(), std::abs(b[i]));
    if (s > 0.0) {
      out.row_scale[i] = s;
      A.row(i) /= s;
      b[i] /= s;
    }
  }
  StandardFormLp scaled = lp;
  scaled.A = std::move(A);
  scaled.b = std::move(b);
  out.slack = to_slack_form(scaled);
  return out;
}

}  // namespace detail

// Algorithm-1-style loop: residual, Newton direction, step, mu update, until
// the max KKT residual (mu -> 0 limit) drops below tol or iterations run out.
// x1_hint, when given, seeds the primal block (original-variable part).
inline SolveResult solve(const StandardFormLp& lp, const SolverOptions& opt = {},
                         const std::optional<Vec>& x1_hint = std::nullopt) {
  auto t0 = std::chrono::steady_clock::now();
  auto scaled = detail::equilibrate(lp);
  const SlackFormLp& sf = scaled.slack;
  const int n = sf.vars();
  const int r = sf.rows();
  const int nv = sf.n_original;

  BarrierState st;
  st.x3 = Vec::Zero(n);
  if (x1_hint && x1_hint->size() == nv) {
    st.x3.head(nv) = *x1_hint;
  } else {
    st.x3.head(nv).setOnes();
    st.x3[0] = 0.5;
    if (nv > 1) st.x3[1] = 0.25;
  }
  Vec slack = sf.b - sf.A2.leftCols(nv) * st.x3.head(nv);
  // Interior hints carry positive slacks by construction; otherwise floor
  // them and start infeasible (gamma1 != 0 is handled by the Newton system).
  st.x3.tail(r) = (slack.array() > 0.0).all() ? slack : slack.cwiseMax(0.5);
  st.lambda = st.x3.cwiseInverse().cwiseMax(1e-3).cwiseMin(1e3);
  st.v = Vec::Zero(r);
  st.mu = (opt.mu_rule == SolverOptions::MuRule::kScheduled)
              ? opt.mu0
              : st.x3.dot(st.lambda) / n;

  SolveResult res;
  res.trace.reserve(opt.record_trace ? opt.max_iters : 0);
  std::vector<double> res_hist;
  res_hist.reserve(opt.max_iters);

  auto finish = [&](SolveStatus status, double res0) {
    res.status = status;
    res.x1 = st.x3.head(nv);
    res.objective = lp.c.dot(res.x1);
    res.stats.iterations = st.iter;
    res.stats.final_residual = res0;
    res.stats.final_mu = st.mu;
    res.stats.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    return res;
  };

  for (int it = 1; it <= opt.max_iters; ++it) {
    KktResidual g = residual(st, sf);
    double res_mu = g.max_abs();
    // Convergence metric: residual of the unperturbed (mu = 0) system, i.e.
    // max(|g1|, |x.l|, |g3|); matches F_mu as mu itself falls below tol.
    double res0 = std::max({g.g1.size() ? g.g1.cwiseAbs().maxCoeff() : 0.0,
                            st.x3.cwiseProduct(st.lambda).maxCoeff(),
                            g.g3.cwiseAbs().maxCoeff()});
    if (opt.record_trace)
      res.trace.push_back({st.iter, st.mu, res0, 0.0,
                           lp.c.dot(st.x3.head(nv))});
    if (res0 <= opt.tol) return finish(SolveStatus::kConverged, res0);

    res_hist.push_back(res0);
    if (static_cast<int>(res_hist.size()) > opt.stall_window) {
      double past = res_hist[res_hist.size() - 1 - opt.stall_window];
      if (res0 > 0.75 * past && res0 > 1e3 * opt.tol)
        return finish(SolveStatus::kInfeasibleOrStalled, res0);
    }

    auto dir = newton_direction(st, sf);
    if (!dir) return finish(SolveStatus::kNumericalFailure, res0);

    double tau = opt.fraction_to_boundary;
    if (st.mu < 1e-3) tau = std::max(tau, 1.0 - 10.0 * st.mu);
    double beta = step_length(st, *dir, sf, opt, res_mu, tau);
    if (beta <= 0.0) return finish(SolveStatus::kNumericalFailure, res0);

    st.x3 += beta * dir->dx3;
    st.lambda += beta * dir->dlambda;
    st.v += beta * dir->dv;
    st.iter = it;
    if (opt.record_trace) res.trace.back().beta = beta;

    if (opt.mu_rule == SolverOptions::MuRule::kScheduled) {
      st.mu = opt.mu0 * std::pow(opt.decay, it);
    } else {
      double sigma = std::min(0.99, std::max(opt.decay,
                                             std::pow(1.0 - beta, 3.0)));
      double target = sigma * st.x3.dot(st.lambda) / n;
      // keep mu strictly decreasing; the tol/4 soft floor stops the target
      // racing far below the convergence threshold
      st.mu = std::max(std::min(target, 0.999 * st.mu),
                       std::min(opt.tol / 4.0, 0.999 * st.mu));
    }
  }

  KktResidual g = residual(st, sf);
  double res0 = std::max({g.g1.size() ? g.g1.cwiseAbs().maxCoeff() : 0.0,
                          st.x3.cwiseProduct(st.lambda).maxCoeff(),
                          g.g3.cwiseAbs().maxCoeff()});
  return finish(SolveStatus::kIterationLimit, res0);
}

}  // namespace wpmec
