#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vpace/dual.hpp"
#include "vpace/instance.hpp"

namespace vpace {

namespace detail {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled by exactly one worker, so writes to per-index slots need no locks.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

struct SolveOptions {
  double damping = 0.5;
  int max_rounds = 10000;
  double fixpoint_tol = 1e-8;
  double budget_tol = 1e-6;
  /// Relative multiplier step for the one-sided budget check.
  double budget_probe = 1e-6;
  unsigned threads = 0;
  BestResponseOptions response{};

  void validate() const {
    if (!(damping > 0.0) || damping > 1.0) throw std::invalid_argument("damping must lie in (0, 1]");
    if (max_rounds < 0) throw std::invalid_argument("max_rounds must be >= 0");
    if (!(fixpoint_tol > 0.0)) throw std::invalid_argument("fixpoint_tol must be positive");
    if (!(budget_tol > 0.0)) throw std::invalid_argument("budget_tol must be positive");
    if (!(budget_probe > 0.0)) throw std::invalid_argument("budget_probe must be positive");
  }
};

struct TypeBudget {
  double multiplier = 0.0;
  double expenditure = 0.0;
  /// Expenditure at t + probe (1 + t). A fixed point on a discrete market
  /// sits on a kink of the dual, where the expenditure at t itself counts
  /// ties at its own atom as wins.
  double expenditure_above = 0.0;
  double violation = 0.0;
  double slackness = 0.0;
};

struct BudgetReport {
  std::vector<TypeBudget> types;
  /// max over types of (expenditure - B)_+ / B at the type's own multiplier.
  double max_relative_violation = 0.0;
  /// Same, with expenditure taken at t + probe (1 + t).
  double max_relative_violation_above = 0.0;
  /// max over types with t > multiplier_tol of |expenditure - B| / B.
  double max_relative_gap_paced = 0.0;
  double max_abs_slackness = 0.0;
};

/// Per-type expenditure, violation (e - B)_+ and slackness t (B - e).
inline BudgetReport check_budgets(const AuctionInstance& instance, const PacingProfile& profile,
                                  double probe = 1e-6, double multiplier_tol = 1e-9) {
  const Market market = build_market(instance, profile);
  BudgetReport out;
  out.types.resize(instance.buyer_count());
  for (std::size_t j = 0; j < instance.buyer_count(); ++j) {
    const auto& b = instance.buyer(j);
    auto& r = out.types[j];
    r.multiplier = profile[j];
    r.expenditure = expected_expenditure(market, b.weights, r.multiplier);
    const double above = std::min(market.multiplier_cap, r.multiplier + probe * (1.0 + r.multiplier));
    r.expenditure_above = expected_expenditure(market, b.weights, above);
    r.violation = std::max(0.0, r.expenditure - b.budget);
    r.slackness = r.multiplier * (b.budget - r.expenditure);
    out.max_relative_violation = std::max(out.max_relative_violation, r.violation / b.budget);
    out.max_relative_violation_above =
        std::max(out.max_relative_violation_above, std::max(0.0, r.expenditure_above - b.budget) / b.budget);
    if (r.multiplier > multiplier_tol)
      out.max_relative_gap_paced =
          std::max(out.max_relative_gap_paced, std::abs(r.expenditure - b.budget) / b.budget);
    out.max_abs_slackness = std::max(out.max_abs_slackness, std::abs(r.slackness));
  }
  return out;
}

struct MonotonicityViolation {
  std::size_t lower = 0;  ///< the dominated type
  std::size_t upper = 0;  ///< the dominating type
  std::string axis;       ///< "w<k>" or "budget"
  double excess = 0.0;
};

struct MonotonicityReport {
  std::size_t comparable_pairs = 0;
  bool vacuous = true;
  std::vector<MonotonicityViolation> violations;
};

/// Multipliers must be nondecreasing in each weight component and
/// nonincreasing in the budget, over pairs differing in exactly one coordinate.
inline MonotonicityReport check_monotonicity(const AuctionInstance& instance, const PacingProfile& profile,
                                             double tol = 1e-6) {
  validate_profile(instance, profile);
  MonotonicityReport out;
  const auto buyers = instance.buyers();
  const auto d = static_cast<std::size_t>(instance.dimension());
  for (std::size_t i = 0; i < buyers.size(); ++i) {
    for (std::size_t j = 0; j < buyers.size(); ++j) {
      if (i == j) continue;
      const auto& a = buyers[i];
      const auto& b = buyers[j];
      std::size_t differing = 0;
      std::size_t axis = 0;
      for (std::size_t k = 0; k < d; ++k) {
        if (a.weights[k] != b.weights[k]) {
          ++differing;
          axis = k;
        }
      }
      const bool same_budget = a.budget == b.budget;
      if (differing == 1 && same_budget && a.weights[axis] < b.weights[axis]) {
        ++out.comparable_pairs;
        if (profile[i] > profile[j] + tol)
          out.violations.push_back({i, j, "w" + std::to_string(axis + 1), profile[i] - profile[j]});
      } else if (differing == 0 && a.budget < b.budget) {
        ++out.comparable_pairs;
        // More budget must not mean more pacing.
        if (profile[j] > profile[i] + tol) out.violations.push_back({i, j, "budget", profile[j] - profile[i]});
      }
    }
  }
  out.vacuous = out.comparable_pairs == 0;
  return out;
}

struct ColinearGroup {
  std::vector<std::size_t> members;
  std::size_t paced = 0;
  /// Largest pairwise distance between paced weight vectors in the group.
  double paced_spread = 0.0;
  /// Largest distance from a paced weight vector to the largest unpaced
  /// weight vector; negative when the group has no unpaced or no paced member.
  double collapse_gap = -1.0;
};

struct ColinearReport {
  std::vector<ColinearGroup> groups;  ///< only groups with two or more members
  double max_paced_spread = 0.0;
  double max_collapse_gap = 0.0;
  double min_paced_norm = 0.0;
  double max_paced_norm = 0.0;
  std::size_t paced_types = 0;
  bool vacuous = true;
};

/// Groups buyers by (direction rounded to 1e-9, budget) and measures how far
/// paced members are from sharing one paced weight vector.
inline ColinearReport check_colinear_pacing(const AuctionInstance& instance, const PacingProfile& profile,
                                            double multiplier_tol = 1e-9) {
  validate_profile(instance, profile);
  using Key = std::pair<std::vector<long long>, double>;
  std::map<Key, std::vector<std::size_t>> by_direction;
  const auto buyers = instance.buyers();
  auto paced_vector = [&](std::size_t j) {
    std::vector<double> v = buyers[j].weights;
    for (double& x : v) x /= 1.0 + profile[j];
    return v;
  };
  auto distance = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };

  ColinearReport out;
  out.min_paced_norm = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < buyers.size(); ++j) {
    const double r = detail::norm(buyers[j].weights);
    std::vector<long long> key;
    for (double w : buyers[j].weights) key.push_back(std::llround(w / r * 1e9));
    by_direction[{key, buyers[j].budget}].push_back(j);
    if (profile[j] > multiplier_tol) {
      ++out.paced_types;
      const double pn = r / (1.0 + profile[j]);
      out.min_paced_norm = std::min(out.min_paced_norm, pn);
      out.max_paced_norm = std::max(out.max_paced_norm, pn);
    }
  }
  if (out.paced_types == 0) out.min_paced_norm = 0.0;

  for (const auto& [key, members] : by_direction) {
    if (members.size() < 2) continue;
    ColinearGroup g;
    g.members = members;
    std::vector<std::vector<double>> paced;
    std::size_t widest_unpaced = members.size();
    for (std::size_t m : members) {
      if (profile[m] > multiplier_tol) {
        paced.push_back(paced_vector(m));
      } else if (widest_unpaced == members.size() ||
                 detail::norm(buyers[m].weights) > detail::norm(buyers[widest_unpaced].weights)) {
        widest_unpaced = m;
      }
    }
    g.paced = paced.size();
    for (std::size_t a = 0; a < paced.size(); ++a)
      for (std::size_t b = a + 1; b < paced.size(); ++b) g.paced_spread = std::max(g.paced_spread, distance(paced[a], paced[b]));
    if (!paced.empty() && widest_unpaced != members.size()) {
      g.collapse_gap = 0.0;
      for (const auto& v : paced) g.collapse_gap = std::max(g.collapse_gap, distance(v, buyers[widest_unpaced].weights));
      out.max_collapse_gap = std::max(out.max_collapse_gap, g.collapse_gap);
    }
    out.max_paced_spread = std::max(out.max_paced_spread, g.paced_spread);
    out.groups.push_back(std::move(g));
  }
  out.vacuous = out.groups.empty();
  return out;
}

/// f(mu, mu_hat) = E_theta[q^mu(theta, mu_hat(theta))].
inline double population_dual_objective(const AuctionInstance& instance, const PacingProfile& profile,
                                        const PacingProfile& candidate) {
  validate_profile(instance, candidate);
  const Market market = build_market(instance, profile);
  double total = 0.0;
  for (std::size_t j = 0; j < instance.buyer_count(); ++j) {
    const auto& b = instance.buyer(j);
    total += b.probability * dual_value(market, b.weights, b.budget, candidate[j]);
  }
  return total;
}

/// Per-type best responses against one frozen profile.
inline std::vector<BestResponseResult> best_responses(const AuctionInstance& instance, const PacingProfile& profile,
                                                      const BestResponseOptions& opt = {}, unsigned threads = 0) {
  const Market market = build_market(instance, profile);
  std::vector<BestResponseResult> out(instance.buyer_count());
  detail::parallel_for(out.size(), threads, [&](std::size_t j) {
    const auto& b = instance.buyer(j);
    out[j] = best_response(market, b.weights, b.budget, opt);
  });
  return out;
}

/// Jacobi update: every type moves a fraction `damping` of the way to its
/// best response against the same frozen profile.
inline PacingProfile best_response_step(const AuctionInstance& instance, const PacingProfile& profile,
                                        double damping, const BestResponseOptions& opt = {},
                                        unsigned threads = 0) {
  if (!(damping >= 0.0) || damping > 1.0) throw std::invalid_argument("damping must lie in [0, 1]");
  const auto responses = best_responses(instance, profile, opt, threads);
  PacingProfile next = profile;
  const double cap = instance.multiplier_cap();
  for (std::size_t j = 0; j < next.size(); ++j) {
    next.multipliers[j] = std::clamp((1.0 - damping) * profile[j] + damping * responses[j].t_star, 0.0, cap);
  }
  return next;
}

struct EquilibriumReport {
  PacingProfile profile;
  int rounds = 0;
  bool converged = false;
  double linf_residual = 0.0;
  double max_budget_violation = 0.0;
  double max_budget_violation_above = 0.0;
  /// Detected period (2..4) of a repeating residual pattern, 0 if none.
  int oscillation_period = 0;
  std::vector<double> residual_history;
  MonotonicityReport monotonicity;
  ColinearReport colinear;
};

namespace detail {

inline int detect_cycle(const std::vector<double>& history) {
  for (int period = 2; period <= 4; ++period) {
    const auto need = static_cast<std::size_t>(3 * period);
    if (history.size() < need) continue;
    bool repeats = true;
    for (std::size_t k = history.size() - need; k + period < history.size() && repeats; ++k) {
      const double a = history[k];
      const double b = history[k + static_cast<std::size_t>(period)];
      repeats = std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a));
    }
    // A flat nonzero residual is a period-1 stall, not a cycle.
    const bool flat = std::abs(history.back() - history[history.size() - 2]) <= 1e-12 * (1.0 + history.back());
    if (repeats && !flat && history.back() > 0.0) return period;
  }
  return 0;
}

}  // namespace detail

/// Best-response dynamics from the all-zeros profile. Non-convergence is a
/// result, reported through `converged` and `oscillation_period`.
inline EquilibriumReport solve_equilibrium(const AuctionInstance& instance, const SolveOptions& options = {}) {
  options.validate();
  EquilibriumReport report;
  report.profile = PacingProfile::zeros(instance.buyer_count());
  bool settled = false;
  for (int round = 0; round < options.max_rounds; ++round) {
    PacingProfile next =
        best_response_step(instance, report.profile, options.damping, options.response, options.threads);
    double residual = 0.0;
    for (std::size_t j = 0; j < next.size(); ++j)
      residual = std::max(residual, std::abs(next[j] - report.profile[j]));
    report.profile = std::move(next);
    report.rounds = round + 1;
    report.linf_residual = residual;
    report.residual_history.push_back(residual);
    if (residual <= options.fixpoint_tol) {
      settled = true;
      break;
    }
  }
  if (report.rounds > 0) {
    const auto budgets =
        check_budgets(instance, report.profile, options.budget_probe, options.response.multiplier_tol);
    report.max_budget_violation = budgets.max_relative_violation;
    report.max_budget_violation_above = budgets.max_relative_violation_above;
  }
  report.converged = settled && report.max_budget_violation_above <= options.budget_tol;
  if (!settled) report.oscillation_period = detail::detect_cycle(report.residual_history);
  report.monotonicity = check_monotonicity(instance, report.profile);
  report.colinear = check_colinear_pacing(instance, report.profile);
  return report;
}

}  // namespace vpace
