#include <catch2/catch_amalgamated.hpp>

#include "oracle.hpp"
#include "wpmec/instance_gen.hpp"
#include "wpmec/ipm_solver.hpp"
#include "wpmec/strategy_search.hpp"

using namespace wpmec;
using Catch::Approx;

namespace {

InstanceConfig desk_config(int n) {
  InstanceConfig cfg;
  cfg.n_devices = n;
  cfg.weight_max = 2.0;
  return cfg;
}

// max x1 + x2 s.t. x1 <= 1, x2 <= 1, x >= 0 in minimization form
StandardFormLp toy_box_lp() {
  StandardFormLp lp;
  lp.layout.n_devices = 1;  // unused by the solver; dimensions come from A
  lp.c = Vec::Constant(2, -1.0);
  lp.A = Mat::Identity(2, 2);
  lp.b = Vec::Ones(2);
  lp.row_tags = {"x1<=1", "x2<=1"};
  return lp;
}

BarrierState random_state(const SlackFormLp& sf, Rng& rng, double mu) {
  BarrierState st;
  st.x3 = Vec::NullaryExpr(sf.vars(), [&]() { return rng.uniform(0.1, 3.0); });
  st.lambda = Vec::NullaryExpr(sf.vars(), [&]() { return rng.uniform(0.1, 3.0); });
  st.v = Vec::NullaryExpr(sf.rows(), [&]() { return rng.uniform(-1.0, 1.0); });
  st.mu = mu;
  return st;
}

}  // namespace

TEST_CASE("residual blocks match their definitions") {
  auto lp = toy_box_lp();
  auto sf = to_slack_form(lp);

  SECTION("the exact central-path point has zero residual") {
    // For the box LP at mu = 1/4 the central point solves
    // x^2 - x/2 - 1/4 = 0, i.e. x = (1 + sqrt 5) / 4, with v = mu / (1 - x),
    // lambda = v - 1 on the x columns and v on the slack columns.
    const double mu = 0.25;
    const double x = (1.0 + std::sqrt(5.0)) / 4.0;
    const double v = mu / (1.0 - x);
    BarrierState st;
    st.mu = mu;
    st.x3 = Vec(4);
    st.x3 << x, x, 1.0 - x, 1.0 - x;
    st.lambda = Vec(4);
    st.lambda << v - 1.0, v - 1.0, v, v;
    st.v = Vec::Constant(2, v);
    auto r = residual(st, sf);
    CHECK(r.max_abs() < 1e-14);
  }

  SECTION("gamma1 vanishes exactly on equality-feasible points") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
      Vec x1 = Vec::NullaryExpr(2, [&]() { return rng.uniform(0.0, 1.0); });
      BarrierState st;
      st.x3 = Vec(4);
      st.x3 << x1, (lp.b - lp.A * x1);
      st.lambda = Vec::Constant(4, rng.uniform(0.1, 5.0));  // arbitrary
      st.v = Vec::NullaryExpr(2, [&]() { return rng.uniform(-2.0, 2.0); });
      st.mu = rng.uniform(0.01, 2.0);
      auto r = residual(st, sf);
      CHECK(r.g1.cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  SECTION("finite differences: d(gamma2_i)/d(x3_i) = lambda_i") {
    Rng rng(5);
    auto st = random_state(sf, rng, 0.3);
    const double h = 1e-6;
    for (int i = 0; i < st.x3.size(); ++i) {
      BarrierState up = st;
      up.x3[i] += h;
      auto r0 = residual(st, sf);
      auto r1 = residual(up, sf);
      double fd = (r1.g2[i] - r0.g2[i]) / h;
      CHECK(fd == Approx(st.lambda[i]).epsilon(1e-7));
    }
  }
}

TEST_CASE("directional finite differences match the Jacobian") {
  auto inst = make_instance(desk_config(3), 17);
  auto s = CollaborationStrategy::all_independent(3);
  auto lp = build(inst, s);
  auto sf = to_slack_form(lp);
  Rng rng(6);
  auto st = random_state(sf, rng, 0.7);

  // random direction in (dlambda, dv, dx3)
  Vec dl = Vec::NullaryExpr(sf.vars(), [&]() { return rng.uniform(-1, 1); });
  Vec dv = Vec::NullaryExpr(sf.rows(), [&]() { return rng.uniform(-1, 1); });
  Vec dx = Vec::NullaryExpr(sf.vars(), [&]() { return rng.uniform(-1, 1); });

  const double h = 1e-6;
  BarrierState up = st;
  up.lambda += h * dl;
  up.v += h * dv;
  up.x3 += h * dx;

  auto r0 = residual(st, sf);
  auto r1 = residual(up, sf);

  // Jacobian products per the block structure
  Vec jg1 = sf.A2 * dx;
  Vec jg2 = st.x3.cwiseProduct(dl) + st.lambda.cwiseProduct(dx);
  Vec jg3 = sf.A2.transpose() * dv - dl;

  double scale = std::max({jg1.cwiseAbs().maxCoeff(), jg2.cwiseAbs().maxCoeff(),
                           jg3.cwiseAbs().maxCoeff()});
  CHECK(((r1.g1 - r0.g1) / h - jg1).cwiseAbs().maxCoeff() / scale < 1e-5);
  CHECK(((r1.g2 - r0.g2) / h - jg2).cwiseAbs().maxCoeff() / scale < 1e-5);
  CHECK(((r1.g3 - r0.g3) / h - jg3).cwiseAbs().maxCoeff() / scale < 1e-5);
}

TEST_CASE("newton direction solves the block system") {
  SECTION("zero residual gives a zero direction") {
    auto lp = toy_box_lp();
    auto sf = to_slack_form(lp);
    const double mu = 0.25;
    const double x = (1.0 + std::sqrt(5.0)) / 4.0;
    const double v = mu / (1.0 - x);
    BarrierState st;
    st.mu = mu;
    st.x3 = Vec(4);
    st.x3 << x, x, 1.0 - x, 1.0 - x;
    st.lambda = Vec(4);
    st.lambda << v - 1.0, v - 1.0, v, v;
    st.v = Vec::Constant(2, v);
    REQUIRE(residual(st, sf).max_abs() < 1e-14);
    auto dir = newton_direction(st, sf);
    REQUIRE(dir.has_value());
    CHECK(dir->dx3.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dir->dlambda.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dir->dv.cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("hand-assembled toy system checked by substitution") {
    auto lp = toy_box_lp();
    auto sf = to_slack_form(lp);
    Rng rng(11);
    for (int t = 0; t < 25; ++t) {
      auto st = random_state(sf, rng, rng.uniform(0.05, 1.0));
      auto r = residual(st, sf);
      auto dir = newton_direction(st, sf);
      REQUIRE(dir.has_value());
      double scale = std::max(
          {1.0, r.max_abs(), dir->dx3.cwiseAbs().maxCoeff(),
           dir->dlambda.cwiseAbs().maxCoeff(), dir->dv.cwiseAbs().maxCoeff()});
      Vec res1 = sf.A2 * dir->dx3 + r.g1;
      Vec res2 = st.x3.cwiseProduct(dir->dlambda) +
                 st.lambda.cwiseProduct(dir->dx3) + r.g2;
      Vec res3 = -dir->dlambda + sf.A2.transpose() * dir->dv + r.g3;
      CHECK(res1.cwiseAbs().maxCoeff() <= 1e-10 * scale);
      CHECK(res2.cwiseAbs().maxCoeff() <= 1e-10 * scale);
      CHECK(res3.cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
  }

  SECTION("block elimination agrees with the dense full solve") {
    auto inst = make_instance(desk_config(3), 23);
    auto s = CollaborationStrategy({0}, {1}, {2}, 3);
    auto slp = build(inst, s);
    // row-equilibrate as the solver does, to keep the full LU well-scaled
    for (int i = 0; i < slp.rows(); ++i) {
      double sc = std::max(slp.A.row(i).cwiseAbs().maxCoeff(),
                           std::abs(slp.b[i]));
      slp.A.row(i) /= sc;
      slp.b[i] /= sc;
    }
    auto sf = to_slack_form(slp);
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
      auto st = random_state(sf, rng, rng.uniform(0.05, 1.0));
      auto fast = newton_direction(st, sf);
      REQUIRE(fast.has_value());
      auto full = newton_direction_full(st, sf);
      double scale =
          std::max(1.0, full.dx3.cwiseAbs().maxCoeff());
      CHECK((fast->dx3 - full.dx3).cwiseAbs().maxCoeff() / scale < 1e-9);
      CHECK((fast->dlambda - full.dlambda).cwiseAbs().maxCoeff() / scale < 1e-9);
      CHECK((fast->dv - full.dv).cwiseAbs().maxCoeff() / scale < 1e-9);
    }
  }
}

TEST_CASE("step length honors both rules") {
  auto lp = toy_box_lp();
  auto sf = to_slack_form(lp);
  SolverOptions opt;

  SECTION("no boundary pressure and decreasing residual: full step") {
    // near-central state: the Newton step is a small centering correction,
    // far from the boundary, and the residual drops quadratically
    const double mu_center = 0.25;
    const double x = (1.0 + std::sqrt(5.0)) / 4.0;
    const double v = mu_center / (1.0 - x);
    BarrierState st;
    st.mu = 0.2499;
    st.x3 = Vec(4);
    st.x3 << x, x, 1.0 - x, 1.0 - x;
    st.lambda = Vec(4);
    st.lambda << v - 1.0, v - 1.0, v, v;
    st.v = Vec::Constant(2, v);
    auto r = residual(st, sf);
    auto dir = newton_direction(st, sf);
    REQUIRE(dir.has_value());
    double beta = step_length(st, *dir, sf, opt, r.max_abs(), 0.995);
    CHECK(beta == 1.0);
  }

  SECTION("fraction-to-boundary caps the step at 0.995 of the gap") {
    BarrierState st;
    st.x3 = Vec::Constant(4, 1.0);
    st.lambda = Vec::Constant(4, 1.0);
    st.v = Vec::Zero(2);
    st.mu = 0.5;
    NewtonDirection dir;
    dir.dx3 = Vec::Constant(4, 0.0);
    dir.dx3[2] = -2.0;  // would cross zero at beta = 0.5
    dir.dlambda = Vec::Zero(4);
    dir.dv = Vec::Zero(2);
    auto r = residual(st, sf);
    double beta = step_length(st, dir, sf, opt, r.max_abs(), 0.995);
    CHECK(beta <= 0.995 * 0.5 + 1e-12);
  }

  SECTION("fuzz: accepted steps never produce non-positive coordinates") {
    Rng rng(13);
    auto inst = make_instance(desk_config(2), 3);
    auto slp = build(inst, CollaborationStrategy::all_independent(2));
    auto sf2 = to_slack_form(slp);
    int accepted = 0;
    for (int t = 0; t < 1000; ++t) {
      auto st = random_state(sf2, rng, rng.uniform(0.01, 1.0));
      auto r = residual(st, sf2);
      auto dir = newton_direction(st, sf2);
      if (!dir) continue;
      double beta = step_length(st, *dir, sf2, opt, r.max_abs(), 0.995);
      if (beta <= 0.0) continue;
      ++accepted;
      CHECK(((st.x3 + beta * dir->dx3).array() > 0.0).all());
      CHECK(((st.lambda + beta * dir->dlambda).array() > 0.0).all());
    }
    CHECK(accepted > 500);
  }
}

TEST_CASE("toy box LP solves to the known optimum") {
  auto lp = toy_box_lp();
  auto res = solve(lp);
  REQUIRE(res.status == SolveStatus::kConverged);
  CHECK(res.objective == Approx(-2.0).margin(1e-6));
  CHECK(res.x1[0] == Approx(1.0).margin(1e-6));
  CHECK(res.x1[1] == Approx(1.0).margin(1e-6));
}

TEST_CASE("N=1 independent device with binding harvest has a closed form") {
  // offload made energy-dominated: p / R >> k f^2 phi
  InstanceConfig cfg;
  cfg.n_devices = 1;
  cfg.tx_power = 0.05;
  cfg.cpu_speed_min = cfg.cpu_speed_max = 1.1e7;
  cfg.battery_cap = 1.0;  // non-binding
  cfg.min_data_bits = 100.0;
  cfg.fading = false;
  cfg.distance_spread = 0.0;
  auto inst = make_instance(cfg, 1);
  REQUIRE(inst.offload_energy_per_bit(0) >
          inst.device(0).local_energy_per_bit());

  auto s = CollaborationStrategy::all_independent(1);
  auto r = solve_p4(inst, s);
  REQUIRE(r.status == SolveStatus::kConverged);

  const auto& d = inst.device(0);
  double expected_bits = inst.hap().eh_efficiency * inst.hap().tx_power *
                         inst.gain(0) * inst.hap().frame_length /
                         d.local_energy_per_bit();
  CHECK(r.allocation.alpha1 == Approx(1.0).margin(1e-5));
  CHECK(r.allocation.id[0].local_bits ==
        Approx(expected_bits).epsilon(1e-6));
  CHECK(r.allocation.id[0].hap_bits == Approx(0.0).margin(1e-3));
  CHECK(r.wscr == Approx(d.weight * expected_bits).epsilon(1e-6));
}

TEST_CASE("network LPs match the vertex enumeration oracle") {
  int compared = 0;
  for (int seed = 0; compared < 12 && seed < 60; ++seed) {
    auto inst = make_instance(desk_config(2), 400 + seed);
    auto s = CollaborationStrategy::all_independent(2);
    auto lp = build(inst, s);
    auto oracle = testing::vertex_enumeration_optimum(lp);
    if (!oracle) continue;
    auto res = solve(lp, {}, interior_hint(inst, s, lp));
    if (res.status != SolveStatus::kConverged) continue;
    CHECK(std::abs(res.objective - oracle->objective) /
              (1.0 + std::abs(oracle->objective)) <
          1e-6);
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("solver invariants hold along the trace") {
  // pick a seed whose frame is feasible (deep fades make some infeasible)
  auto s = CollaborationStrategy::all_independent(3);
  int good_seed = -1;
  for (int seed = 0; seed < 20 && good_seed < 0; ++seed) {
    auto probe = make_instance(desk_config(3), seed);
    auto plp = build(probe, s);
    if (solve(plp, {}, interior_hint(probe, s, plp)).status ==
        SolveStatus::kConverged)
      good_seed = seed;
  }
  REQUIRE(good_seed >= 0);
  auto inst = make_instance(desk_config(3), good_seed);
  auto lp = build(inst, s);
  SolverOptions opt;
  opt.record_trace = true;

  SECTION("adaptive mode: mu strictly decreases") {
    auto res = solve(lp, opt, interior_hint(inst, s, lp));
    REQUIRE(res.status == SolveStatus::kConverged);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
      CHECK(res.trace[i].mu < res.trace[i - 1].mu);
  }

  SECTION("scheduled mode: mu equals mu0 * phi^k exactly") {
    opt.mu_rule = SolverOptions::MuRule::kScheduled;
    opt.max_iters = 25;
    auto res = solve(lp, opt, interior_hint(inst, s, lp));
    for (std::size_t k = 0; k < res.trace.size(); ++k)
      CHECK(res.trace[k].mu == opt.mu0 * std::pow(opt.decay, double(k)));
  }

  SECTION("complementarity stays within the residual metric") {
    auto res = solve(lp, opt, interior_hint(inst, s, lp));
    REQUIRE(res.status == SolveStatus::kConverged);
    // at the final iterate max|x.l - mu| <= residual by definition of g2;
    // re-derive from the result: residual metric bounds complementarity
    CHECK(res.stats.final_residual <= opt.tol);
  }
}

TEST_CASE("infeasible minimum-data requirements are detected") {
  InstanceConfig cfg = desk_config(3);
  cfg.min_data_bits = 1e9;  // far beyond any harvest
  auto inst = make_instance(cfg, 9);
  auto s = CollaborationStrategy::all_independent(3);
  auto r = solve_p4(inst, s);
  CHECK(r.status != SolveStatus::kConverged);
}

TEST_CASE("solver output re-validates within 1e-8") {
  int checked = 0;
  for (int seed = 0; seed < 30 && checked < 15; ++seed) {
    int n = 2 + seed % 4;
    auto inst = make_instance(desk_config(n), 600 + seed);
    auto s = CollaborationStrategy::all_independent(n);
    auto r = solve_p4(inst, s);
    if (r.status != SolveStatus::kConverged) continue;
    auto rep = validate(inst, s, r.allocation);
    CHECK(rep.worst_relative <= 1e-8);
    ++checked;
  }
  CHECK(checked >= 10);
}
