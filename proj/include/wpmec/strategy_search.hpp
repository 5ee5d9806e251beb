#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "wpmec/ipm_solver.hpp"
#include "wpmec/util.hpp"

namespace wpmec {

enum class Method { kEx, kPi, kNc, kLc, kSc, kDl };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kEx: return "EX";
    case Method::kPi: return "PI";
    case Method::kNc: return "NC";
    case Method::kLc: return "LC";
    case Method::kSc: return "SC";
    case Method::kDl: return "DL";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  if (s == "EX") return Method::kEx;
  if (s == "PI") return Method::kPi;
  if (s == "NC") return Method::kNc;
  if (s == "LC") return Method::kLc;
  if (s == "SC") return Method::kSc;
  if (s == "DL") return Method::kDl;
  return std::nullopt;
}

// Eq.-(29) priority score: w * B log2(1 + p h / N0) * k f^2 phi / p.
// Higher score = better suited to the SD role.
inline double priority(const DeviceParams& dev, const HapParams& hap,
                       double gain) {
  double rate = hap.bandwidth *
                std::log2(1.0 + dev.tx_power * gain / hap.noise_power);
  return dev.weight * rate * dev.local_energy_per_bit() / dev.tx_power;
}

// Devices sorted by descending priority; ties go to the lower index.
inline std::vector<int> priority_order(const NetworkInstance& inst) {
  std::vector<int> order(inst.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> score(inst.size());
  for (int n = 0; n < inst.size(); ++n)
    score[n] = priority(inst.device(n), inst.hap(), inst.gain(n));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return order;
}

// Number of unoriented strategies: 1 + sum_m C(N,2m) (2m-1)!!.
inline double strategy_count_unoriented(int n) {
  auto binom = [](int a, int b) {
    double v = 1.0;
    for (int i = 1; i <= b; ++i) v = v * (a - b + i) / i;
    return v;
  };
  auto dfact = [](int k) {  // (2k-1)!!
    double v = 1.0;
    for (int i = 3; i <= 2 * k - 1; i += 2) v *= i;
    return v;
  };
  double total = 1.0;
  for (int m = 1; 2 * m <= n; ++m) total += binom(n, 2 * m) * dfact(m);
  return total;
}

// Oriented count: each matched pair contributes both (SD, AD) orientations.
inline double strategy_count_oriented(int n) {
  auto binom = [](int a, int b) {
    double v = 1.0;
    for (int i = 1; i <= b; ++i) v = v * (a - b + i) / i;
    return v;
  };
  auto dfact = [](int k) {
    double v = 1.0;
    for (int i = 3; i <= 2 * k - 1; i += 2) v *= i;
    return v;
  };
  double total = 1.0;
  for (int m = 1; 2 * m <= n; ++m)
    total += binom(n, 2 * m) * dfact(m) * std::pow(2.0, m);
  return total;
}

namespace detail {

// Yields every perfect matching of `items` as ordered pairs (a earliest).
inline void for_each_matching(std::vector<int>& items,
                              std::vector<std::pair<int, int>>& acc,
                              const std::function<void(
                                  const std::vector<std::pair<int, int>>&)>& fn) {
  if (items.empty()) {
    fn(acc);
    return;
  }
  int a = items.front();
  for (std::size_t j = 1; j < items.size(); ++j) {
    int b = items[j];
    std::vector<int> rest;
    rest.reserve(items.size() - 2);
    for (std::size_t t = 1; t < items.size(); ++t)
      if (t != j) rest.push_back(items[t]);
    acc.emplace_back(a, b);
    for_each_matching(rest, acc, fn);
    acc.pop_back();
  }
}

inline void for_each_subset(int n, int k, std::vector<int>& subset,
                            int start,
                            const std::function<void(const std::vector<int>&)>& fn) {
  if (static_cast<int>(subset.size()) == k) {
    fn(subset);
    return;
  }
  for (int i = start; i < n; ++i) {
    subset.push_back(i);
    for_each_subset(n, k, subset, i + 1, fn);
    subset.pop_back();
  }
}

}  // namespace detail

// Enumerates every oriented strategy: m = 0 first, then for every m >= 1 each
// 2m-subset (lexicographic), each perfect matching of it, and both SD/AD
// orientations per matched pair. The SD role is asymmetric, so orientations
// are distinct strategies; the paper's complexity count is the unoriented one.
inline void enumerate_strategies(
    int n, const std::function<void(const CollaborationStrategy&)>& fn) {
  fn(CollaborationStrategy::all_independent(n));
  for (int m = 1; 2 * m <= n; ++m) {
    std::vector<int> subset;
    detail::for_each_subset(n, 2 * m, subset, 0, [&](const std::vector<int>& sub) {
      std::vector<char> in_sub(n, 0);
      for (int d : sub) in_sub[d] = 1;
      std::vector<int> ids;
      for (int d = 0; d < n; ++d)
        if (!in_sub[d]) ids.push_back(d);
      std::vector<int> items(sub);
      std::vector<std::pair<int, int>> acc;
      detail::for_each_matching(items, acc, [&](const std::vector<std::pair<int, int>>& pairs) {
        const int mm = static_cast<int>(pairs.size());
        for (std::uint32_t mask = 0; mask < (1u << mm); ++mask) {
          std::vector<int> sds(mm), ads(mm);
          for (int i = 0; i < mm; ++i) {
            bool flip = (mask >> i) & 1u;
            sds[i] = flip ? pairs[i].second : pairs[i].first;
            ads[i] = flip ? pairs[i].first : pairs[i].second;
          }
          fn(CollaborationStrategy(sds, ads, ids, n));
        }
      });
    });
  }
}

struct P4Result {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double wscr = 0.0;
  Allocation allocation;
  SolverStats stats;
};

// Solves the time/data allocation LP for one fixed strategy: build P5, seed
// with the interior hint, solve; on a failed solve with a hint, retry from
// the generic start once.
inline P4Result solve_p4(const NetworkInstance& inst,
                         const CollaborationStrategy& s,
                         const SolverOptions& opt = {}) {
  StandardFormLp lp = build(inst, s);
  auto hint = interior_hint(inst, s, lp);
  SolveResult r = solve(lp, opt, hint);
  if (r.status != SolveStatus::kConverged && hint.has_value()) {
    SolveResult retry = solve(lp, opt, std::nullopt);
    if (retry.status == SolveStatus::kConverged) r = std::move(retry);
  }
  P4Result out;
  out.status = r.status;
  out.stats = r.stats;
  out.allocation = allocation_from_x1(lp.layout, s, r.x1);
  out.wscr = wscr(inst, s, out.allocation);
  return out;
}

struct StrategyResult {
  Method method = Method::kNc;
  SolveStatus status = SolveStatus::kNumericalFailure;
  CollaborationStrategy strategy{{}, {}, {0}, 1};
  Allocation allocation;
  double wscr = 0.0;
  SolverStats stats;
  long lp_solves = 0;
  // LC only: devices whose local-only share misses the minimum-data bits.
  std::vector<int> min_data_misses;

  bool feasible() const { return status == SolveStatus::kConverged; }
};

namespace detail {

inline StrategyResult from_p4(Method method, const NetworkInstance& inst,
                              CollaborationStrategy s, P4Result&& p4,
                              long lp_solves) {
  StrategyResult r;
  r.method = method;
  r.status = p4.status;
  r.strategy = std::move(s);
  r.allocation = std::move(p4.allocation);
  r.wscr = p4.status == SolveStatus::kConverged ? p4.wscr : 0.0;
  r.stats = p4.stats;
  r.lp_solves = lp_solves;
  (void)inst;
  return r;
}

}  // namespace detail

// Non-collaborative partial offloading: m = 0, one LP solve.
inline StrategyResult baseline_nc(const NetworkInstance& inst,
                                  const SolverOptions& opt = {}) {
  auto s = CollaborationStrategy::all_independent(inst.size());
  return detail::from_p4(Method::kNc, inst, s, solve_p4(inst, s, opt), 1);
}

// Local computing only: alpha1 = 1, no offloading; closed form per device.
inline StrategyResult baseline_lc(const NetworkInstance& inst) {
  auto s = CollaborationStrategy::all_independent(inst.size());
  StrategyResult r;
  r.method = Method::kLc;
  r.strategy = s;
  r.allocation = Allocation::zeros(s);
  r.allocation.alpha1 = 1.0;
  r.allocation.alpha2 = 0.0;
  const double T = inst.hap().frame_length;
  for (int n = 0; n < inst.size(); ++n) {
    const auto& d = inst.device(n);
    double energy_cap = inst.harvest(n, 1.0) / d.local_energy_per_bit();
    double time_cap = d.cpu_speed * T / d.cycles_per_bit;
    double bits = std::min(energy_cap, time_cap);
    r.allocation.id[n].local_bits = bits;
    if (bits < inst.min_data_bits()) r.min_data_misses.push_back(n);
  }
  r.wscr = wscr(inst, s, r.allocation);
  r.status = r.min_data_misses.empty() ? SolveStatus::kConverged
                                       : SolveStatus::kInfeasibleOrStalled;
  if (!r.feasible()) r.wscr = 0.0;
  r.lp_solves = 0;
  return r;
}

// Priority-based iterative search (Algorithm-2 style): evaluate m = 0 ..
// floor(N/2), each step pairing the highest-priority remaining device with
// the lowest-priority one; keep the best feasible evaluation.
// per_m_wscr, when given, receives one entry per m (NaN for infeasible m).
inline StrategyResult priority_iterative(const NetworkInstance& inst,
                                         const SolverOptions& opt = {},
                                         std::vector<double>* per_m_wscr = nullptr) {
  const int n = inst.size();
  std::vector<int> order = priority_order(inst);
  long solves = 0;
  std::optional<StrategyResult> best;
  if (per_m_wscr) per_m_wscr->clear();
  for (int m = 0; 2 * m <= n; ++m) {
    std::vector<int> sds(order.begin(), order.begin() + m);
    std::vector<int> ads(order.end() - m, order.end());
    std::reverse(ads.begin(), ads.end());  // lowest priority joins first
    std::vector<char> used(n, 0);
    for (int d : sds) used[d] = 1;
    for (int d : ads) used[d] = 1;
    std::vector<int> ids;
    for (int d = 0; d < n; ++d)
      if (!used[d]) ids.push_back(d);
    CollaborationStrategy s(sds, ads, ids, n);
    P4Result p4 = solve_p4(inst, s, opt);
    ++solves;
    if (per_m_wscr)
      per_m_wscr->push_back(p4.status == SolveStatus::kConverged
                                ? p4.wscr
                                : std::numeric_limits<double>::quiet_NaN());
    if (p4.status == SolveStatus::kConverged &&
        (!best || p4.wscr > best->wscr)) {
      best = detail::from_p4(Method::kPi, inst, std::move(s), std::move(p4), 0);
    }
  }
  if (!best) {
    StrategyResult r;
    r.method = Method::kPi;
    r.status = SolveStatus::kInfeasibleOrStalled;
    r.strategy = CollaborationStrategy::all_independent(n);
    r.allocation = Allocation::zeros(r.strategy);
    r.lp_solves = solves;
    return r;
  }
  best->lp_solves = solves;
  return *best;
}

struct ExhaustiveOptions {
  int cap = 8;       // refuse above this N (double-factorial growth)
  int threads = 1;   // strategies evaluated in parallel, reduction is ordered
};

// Exhaustive search over every oriented strategy (Eq.-(28) argmax). Ties go
// to the earliest strategy in enumeration order, i.e. smaller m first, then
// lexicographic subset/matching order.
inline StrategyResult exhaustive(const NetworkInstance& inst,
                                 const SolverOptions& opt = {},
                                 const ExhaustiveOptions& ex = {}) {
  if (inst.size() > ex.cap)
    throw std::invalid_argument(
        "exhaustive: N exceeds cap " + std::to_string(ex.cap) +
        "; the strategy space grows as C(N,2m)(2m-1)!! -- raise the cap "
        "explicitly if this is intended");
  std::vector<CollaborationStrategy> all;
  enumerate_strategies(inst.size(),
                       [&](const CollaborationStrategy& s) { all.push_back(s); });
  std::vector<P4Result> results(all.size());
  parallel_for(
      static_cast<int>(all.size()),
      [&](int i) { results[i] = solve_p4(inst, all[i], opt); }, ex.threads);

  long solves = static_cast<long>(all.size());
  int best = -1;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (results[i].status != SolveStatus::kConverged) continue;
    if (best < 0 || results[i].wscr > results[best].wscr)
      best = static_cast<int>(i);
  }
  if (best < 0) {
    StrategyResult r;
    r.method = Method::kEx;
    r.status = SolveStatus::kInfeasibleOrStalled;
    r.strategy = CollaborationStrategy::all_independent(inst.size());
    r.allocation = Allocation::zeros(r.strategy);
    r.lp_solves = solves;
    return r;
  }
  return detail::from_p4(Method::kEx, inst, all[best], std::move(results[best]),
                         solves);
}

// Stochastic collaboration: uniform m, uniform 2m-subset, uniform pairing and
// orientation, then one LP solve. Deterministic under the seed.
inline StrategyResult baseline_sc(const NetworkInstance& inst,
                                  std::uint64_t seed,
                                  const SolverOptions& opt = {}) {
  const int n = inst.size();
  Rng rng(mix_seed(seed, 0x5C));
  int m = static_cast<int>(rng.below(n / 2 + 1));
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  // Fisher-Yates prefix of size 2m
  for (int i = 0; i < 2 * m; ++i) {
    int j = i + static_cast<int>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> sds, ads, ids(pool.begin() + 2 * m, pool.end());
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < m; ++i) {
    int a = pool[2 * i], b = pool[2 * i + 1];
    if (rng.below(2) == 1) std::swap(a, b);
    sds.push_back(a);
    ads.push_back(b);
  }
  CollaborationStrategy s(sds, ads, ids, n);
  return detail::from_p4(Method::kSc, inst, s, solve_p4(inst, s, opt), 1);
}

}  // namespace wpmec
