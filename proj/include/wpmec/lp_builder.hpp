#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "wpmec/network_model.hpp"

namespace wpmec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Column layout of x1 = [alpha1, alpha2, (l_o^loc, l_o^ap, l_o^p, l_p^loc) per
// cluster, (l_q^loc, l_q^ap) per ID]. Data columns are expressed in kilobits
// and energy rows in millijoules; the scale factors are recorded here and all
// public outputs are unscaled.
struct VariableLayout {
  int n_devices = 0;
  int n_clusters = 0;
  double bits_per_unit = 1e3;    // one data-column unit = 1 kilobit
  double joules_per_unit = 1e-3; // one energy-row unit = 1 millijoule

  int cols() const { return 2 * n_devices + 2; }
  int rows() const { return 4 * n_devices + n_clusters + 1; }

  int alpha1() const { return 0; }
  int alpha2() const { return 1; }
  int sd_local(int i) const { return 2 + 4 * i; }
  int sd_hap(int i) const { return 2 + 4 * i + 1; }
  int sd_ad(int i) const { return 2 + 4 * i + 2; }
  int ad_local(int i) const { return 2 + 4 * i + 3; }
  int id_local(int k) const { return 2 + 4 * n_clusters + 2 * k; }
  int id_hap(int k) const { return 2 + 4 * n_clusters + 2 * k + 1; }

  std::string column_name(int j) const {
    if (j == 0) return "alpha1";
    if (j == 1) return "alpha2";
    int d = j - 2;
    if (d < 4 * n_clusters) {
      int i = d / 4;
      static const char* kind[] = {"l_o_loc", "l_o_ap", "l_o_p", "l_p_loc"};
      return std::string(kind[d % 4]) + "[" + std::to_string(i) + "]";
    }
    int k = (d - 4 * n_clusters) / 2;
    return std::string((d - 4 * n_clusters) % 2 == 0 ? "l_q_loc" : "l_q_ap") +
           "[" + std::to_string(k) + "]";
  }
};

// P5: min c^T x1  s.t.  A x1 <= b, x1 >= 0, in the documented row order.
struct StandardFormLp {
  Vec c;
  Mat A;
  Vec b;
  VariableLayout layout;
  std::vector<std::string> row_tags;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

// P6/P7: A2 = [A | I], c3 = [c; 0], equality constraints A2 x3 = b.
struct SlackFormLp {
  Mat A2;
  Vec c3;
  Vec b;
  int n_original = 0;  // leading columns that are x1

  int vars() const { return static_cast<int>(A2.cols()); }
  int rows() const { return static_cast<int>(A2.rows()); }
};

// Compiles (instance, strategy) into P5. Row order is fixed:
// (7d) x m, (7e) x m, (7f) x m, (7h) x (N-2m), (7i),
// Eq. (8) families in paper order (SD harvest, SD cap, AD harvest, AD cap,
// ID harvest, ID cap), then (7o), (7p), (7q) negated to <= form.
inline StandardFormLp build(const NetworkInstance& inst,
                            const CollaborationStrategy& s) {
  const int N = inst.size();
  const int m = s.clusters();
  VariableLayout lay;
  lay.n_devices = N;
  lay.n_clusters = m;

  StandardFormLp lp;
  lp.layout = lay;
  lp.c = Vec::Zero(lay.cols());
  lp.A = Mat::Zero(lay.rows(), lay.cols());
  lp.b = Vec::Zero(lay.rows());
  lp.row_tags.reserve(lay.rows());

  const double T = inst.hap().frame_length;
  const double kb = lay.bits_per_unit;
  const double to_mj = kb / lay.joules_per_unit;  // J/bit -> mJ/kb

  for (int i = 0; i < m; ++i) {
    lp.c[lay.sd_local(i)] = -inst.device(s.sds()[i]).weight;
    lp.c[lay.sd_hap(i)] = -inst.device(s.sds()[i]).weight;
    lp.c[lay.sd_ad(i)] = -inst.device(s.sds()[i]).weight;
    lp.c[lay.ad_local(i)] = -inst.device(s.ads()[i]).weight;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {
    lp.c[lay.id_local(k)] = -inst.device(s.ids()[k]).weight;
    lp.c[lay.id_hap(k)] = -inst.device(s.ids()[k]).weight;
  }

  int r = 0;
  auto tag = [&](std::string t) { lp.row_tags.push_back(std::move(t)); };

  for (int i = 0; i < m; ++i) {  // (7d): SD offload time <= alpha2 T
    int oi = s.sds()[i];
    lp.A(r, lay.sd_hap(i)) = kb / inst.uplink_rate(oi);
    lp.A(r, lay.sd_ad(i)) = kb / inst.uplink_rate(oi);
    lp.A(r, lay.alpha2()) = -T;
    lp.b[r] = 0.0;
    tag("7d[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // (7e): forward + assist fit after offload
    int oi = s.sds()[i], pi = s.ads()[i];
    lp.A(r, lay.sd_ad(i)) =
        kb * (inst.device(oi).cycles_per_bit / inst.device(pi).cpu_speed +
              1.0 / inst.downlink_rate(pi));
    lp.A(r, lay.alpha1()) = T;
    lp.A(r, lay.alpha2()) = T;
    lp.b[r] = T;
    tag("7e[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // (7f): AD total compute time <= T
    int oi = s.sds()[i], pi = s.ads()[i];
    lp.A(r, lay.ad_local(i)) =
        kb * inst.device(pi).cycles_per_bit / inst.device(pi).cpu_speed;
    lp.A(r, lay.sd_ad(i)) =
        kb * inst.device(oi).cycles_per_bit / inst.device(pi).cpu_speed;
    lp.b[r] = T;
    tag("7f[" + std::to_string(i) + "]");
    ++r;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {  // (7h)
    int qk = s.ids()[k];
    lp.A(r, lay.id_hap(k)) = kb / inst.uplink_rate(qk);
    lp.A(r, lay.alpha2()) = -T;
    lp.b[r] = 0.0;
    tag("7h[" + std::to_string(k) + "]");
    ++r;
  }
  {  // (7i): HAP compute budget
    for (int i = 0; i < m; ++i)
      lp.A(r, lay.sd_hap(i)) =
          kb * inst.device(s.sds()[i]).cycles_per_bit / inst.hap().cpu_speed;
    for (std::size_t k = 0; k < s.ids().size(); ++k)
      lp.A(r, lay.id_hap(k)) =
          kb * inst.device(s.ids()[k]).cycles_per_bit / inst.hap().cpu_speed;
    lp.A(r, lay.alpha1()) = T;
    lp.A(r, lay.alpha2()) = T;
    lp.b[r] = T;
    tag("7i");
    ++r;
  }

  auto harvest_coeff = [&](int dev) {
    return inst.hap().eh_efficiency * inst.hap().tx_power * inst.gain(dev) * T /
           lay.joules_per_unit;
  };
  for (int i = 0; i < m; ++i) {  // Eq. (8) SD harvest bound
    int oi = s.sds()[i];
    lp.A(r, lay.sd_local(i)) = to_mj * inst.device(oi).local_energy_per_bit();
    lp.A(r, lay.sd_hap(i)) = to_mj * inst.offload_energy_per_bit(oi);
    lp.A(r, lay.sd_ad(i)) = to_mj * inst.offload_energy_per_bit(oi);
    lp.A(r, lay.alpha1()) = -harvest_coeff(oi);
    lp.b[r] = 0.0;
    tag("8-sd-harvest[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // Eq. (8) SD battery cap
    int oi = s.sds()[i];
    lp.A(r, lay.sd_local(i)) = to_mj * inst.device(oi).local_energy_per_bit();
    lp.A(r, lay.sd_hap(i)) = to_mj * inst.offload_energy_per_bit(oi);
    lp.A(r, lay.sd_ad(i)) = to_mj * inst.offload_energy_per_bit(oi);
    lp.b[r] = inst.device(oi).battery_cap / lay.joules_per_unit;
    tag("8-sd-cap[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // Eq. (8) AD harvest bound
    int oi = s.sds()[i], pi = s.ads()[i];
    const auto& pd = inst.device(pi);
    lp.A(r, lay.ad_local(i)) = to_mj * pd.local_energy_per_bit();
    lp.A(r, lay.sd_ad(i)) = to_mj * pd.energy_coeff * pd.cpu_speed *
                            pd.cpu_speed * inst.device(oi).cycles_per_bit;
    lp.A(r, lay.alpha1()) = -harvest_coeff(pi);
    lp.b[r] = 0.0;
    tag("8-ad-harvest[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // Eq. (8) AD battery cap
    int oi = s.sds()[i], pi = s.ads()[i];
    const auto& pd = inst.device(pi);
    lp.A(r, lay.ad_local(i)) = to_mj * pd.local_energy_per_bit();
    lp.A(r, lay.sd_ad(i)) = to_mj * pd.energy_coeff * pd.cpu_speed *
                            pd.cpu_speed * inst.device(oi).cycles_per_bit;
    lp.b[r] = pd.battery_cap / lay.joules_per_unit;
    tag("8-ad-cap[" + std::to_string(i) + "]");
    ++r;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {  // Eq. (8) ID harvest
    int qk = s.ids()[k];
    lp.A(r, lay.id_local(k)) = to_mj * inst.device(qk).local_energy_per_bit();
    lp.A(r, lay.id_hap(k)) = to_mj * inst.offload_energy_per_bit(qk);
    lp.A(r, lay.alpha1()) = -harvest_coeff(qk);
    lp.b[r] = 0.0;
    tag("8-id-harvest[" + std::to_string(k) + "]");
    ++r;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {  // Eq. (8) ID battery cap
    int qk = s.ids()[k];
    lp.A(r, lay.id_local(k)) = to_mj * inst.device(qk).local_energy_per_bit();
    lp.A(r, lay.id_hap(k)) = to_mj * inst.offload_energy_per_bit(qk);
    lp.b[r] = inst.device(qk).battery_cap / lay.joules_per_unit;
    tag("8-id-cap[" + std::to_string(k) + "]");
    ++r;
  }

  const double lth_units = inst.min_data_bits() / lay.bits_per_unit;
  for (int i = 0; i < m; ++i) {  // (7o) negated
    lp.A(r, lay.sd_local(i)) = -1.0;
    lp.A(r, lay.sd_hap(i)) = -1.0;
    lp.A(r, lay.sd_ad(i)) = -1.0;
    lp.b[r] = -lth_units;
    tag("7o[" + std::to_string(i) + "]");
    ++r;
  }
  for (int i = 0; i < m; ++i) {  // (7p) negated
    lp.A(r, lay.ad_local(i)) = -1.0;
    lp.b[r] = -lth_units;
    tag("7p[" + std::to_string(i) + "]");
    ++r;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {  // (7q) negated
    lp.A(r, lay.id_local(k)) = -1.0;
    lp.A(r, lay.id_hap(k)) = -1.0;
    lp.b[r] = -lth_units;
    tag("7q[" + std::to_string(k) + "]");
    ++r;
  }

  if (r != lay.rows())
    throw std::logic_error("lp build: row count mismatch");
  return lp;
}

inline SlackFormLp to_slack_form(const StandardFormLp& lp) {
  SlackFormLp sf;
  const int r = lp.rows();
  const int n = lp.cols();
  sf.n_original = n;
  sf.A2 = Mat::Zero(r, n + r);
  sf.A2.leftCols(n) = lp.A;
  sf.A2.rightCols(r) = Mat::Identity(r, r);
  sf.c3 = Vec::Zero(n + r);
  sf.c3.head(n) = lp.c;
  sf.b = lp.b;
  // Barrier-sum variable count check: (2N+2) + (4N+m+1) = 6N+m+3. Only
  // meaningful when the matrix came from build(); hand-rolled LPs (tests,
  // generic solves) carry placeholder layouts.
  if (lp.cols() == lp.layout.cols() && lp.rows() == lp.layout.rows()) {
    int expected = 6 * lp.layout.n_devices + lp.layout.n_clusters + 3;
    if (sf.vars() != expected)
      throw std::logic_error("slack form: 6N+m+3 variable count mismatch");
  }
  return sf;
}

// WSCR (weighted bits/frame) from the scaled LP objective value c^T x1.
inline double wscr_from_objective(const VariableLayout& lay, double cx) {
  return -cx * lay.bits_per_unit;
}

// Maps a solved x1 back to a natural-unit Allocation.
inline Allocation allocation_from_x1(const VariableLayout& lay,
                                     const CollaborationStrategy& s,
                                     const Vec& x1) {
  Allocation a = Allocation::zeros(s);
  a.alpha1 = x1[lay.alpha1()];
  a.alpha2 = x1[lay.alpha2()];
  for (int i = 0; i < s.clusters(); ++i) {
    a.sd[i].local_bits = x1[lay.sd_local(i)] * lay.bits_per_unit;
    a.sd[i].hap_bits = x1[lay.sd_hap(i)] * lay.bits_per_unit;
    a.sd[i].ad_bits = x1[lay.sd_ad(i)] * lay.bits_per_unit;
    a.ad_local_bits[i] = x1[lay.ad_local(i)] * lay.bits_per_unit;
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {
    a.id[k].local_bits = x1[lay.id_local(k)] * lay.bits_per_unit;
    a.id[k].hap_bits = x1[lay.id_hap(k)] * lay.bits_per_unit;
  }
  return a;
}

// Strictly feasible interior guess for P5, built from the physics: fix an
// (alpha1, alpha2) pair from a ladder, give every data column a small floor
// and push each device's minimum-data requirement through its cheapest
// affordable route. Returns nullopt when no ladder rung yields positive
// slacks (borderline or infeasible instances).
inline std::optional<Vec> interior_hint(const NetworkInstance& inst,
                                        const CollaborationStrategy& s,
                                        const StandardFormLp& lp) {
  const auto& lay = lp.layout;
  const double T = inst.hap().frame_length;
  const double delta = 1e-3;  // kilobits
  struct Rung {
    double a1, a2, need_margin, budget_margin;
  };
  static const Rung ladder[] = {
      {0.50, 0.20, 1.05, 0.90}, {0.70, 0.15, 1.05, 0.90},
      {0.85, 0.10, 1.05, 0.90}, {0.93, 0.05, 1.03, 0.95},
      {0.97, 0.02, 1.02, 0.97}, {0.985, 0.008, 1.005, 0.99}};

  for (const auto& rung : ladder) {
    Vec x = Vec::Constant(lay.cols(), delta);
    x[lay.alpha1()] = rung.a1;
    x[lay.alpha2()] = rung.a2;
    double need = inst.min_data_bits() / lay.bits_per_unit * rung.need_margin;
    bool ok = true;

    auto budget_mj = [&](int dev) {
      return std::min(inst.hap().eh_efficiency * inst.hap().tx_power *
                          inst.gain(dev) * rung.a1 * T,
                      inst.device(dev).battery_cap) /
             lay.joules_per_unit * rung.budget_margin;
    };
    auto local_cost = [&](int dev) {  // mJ per kb
      return inst.device(dev).local_energy_per_bit() * lay.bits_per_unit /
             lay.joules_per_unit;
    };
    auto offload_cost = [&](int dev) {
      return inst.offload_energy_per_bit(dev) * lay.bits_per_unit /
             lay.joules_per_unit;
    };
    auto place = [&](int dev, int col_local, int col_hap, int n_routes) {
      double cl = local_cost(dev), co = offload_cost(dev);
      double tcap = inst.uplink_rate(dev) * rung.a2 * T * 0.9 /
                    lay.bits_per_unit;  // kb
      double spent = delta * (cl + co * (n_routes - 1));
      if (cl <= co && need * cl + spent <= budget_mj(dev)) {
        x[col_local] += need;
      } else if (tcap >= need && need * co + spent <= budget_mj(dev)) {
        x[col_hap] += need;
      } else if (need * cl + spent <= budget_mj(dev)) {
        x[col_local] += need;
      } else {
        double via_hap = std::min(tcap * 0.95, need);
        double rest = need - via_hap;
        if (via_hap > 0.0 &&
            via_hap * co + rest * cl + spent <= budget_mj(dev)) {
          x[col_hap] += via_hap;
          x[col_local] += rest;
        } else {
          ok = false;
        }
      }
    };

    for (int i = 0; i < s.clusters() && ok; ++i) {
      place(s.sds()[i], lay.sd_local(i), lay.sd_hap(i), 3);
      int pi = s.ads()[i];
      const auto& pd = inst.device(pi);
      double cl = local_cost(pi);
      double assist_cost = pd.energy_coeff * pd.cpu_speed * pd.cpu_speed *
                           inst.device(s.sds()[i]).cycles_per_bit *
                           lay.bits_per_unit / lay.joules_per_unit;
      if (need * cl + delta * (cl + assist_cost) <= budget_mj(pi))
        x[lay.ad_local(i)] += need;
      else
        ok = false;
    }
    for (std::size_t k = 0; k < s.ids().size() && ok; ++k)
      place(s.ids()[k], lay.id_local(k), lay.id_hap(k), 2);

    if (!ok) continue;
    // Exact check: all standard-form slacks strictly positive.
    Vec slack = lp.b - lp.A * x;
    if ((slack.array() > 0.0).all()) return x;
  }
  return std::nullopt;
}

// Plain-text dump of (c, A, b, row_tags) for external cross-checking.
inline void dump_matrix_file(const StandardFormLp& lp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "# rows " << lp.rows() << " cols " << lp.cols() << "\n";
  out << "c";
  for (int j = 0; j < lp.cols(); ++j) out << " " << lp.c[j];
  out << "\n";
  for (int i = 0; i < lp.rows(); ++i) {
    out << lp.row_tags[i];
    for (int j = 0; j < lp.cols(); ++j) out << " " << lp.A(i, j);
    out << " <= " << lp.b[i] << "\n";
  }
  out << "# columns";
  for (int j = 0; j < lp.cols(); ++j) out << " " << lp.layout.column_name(j);
  out << "\n";
}

}  // namespace wpmec
