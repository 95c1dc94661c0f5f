#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vpace/distribution.hpp"
#include "vpace/instance.hpp"

namespace vpace {

/// One item as seen by a bidder: its context, odds, reserve, and the
/// distribution H of the highest competing paced value.
struct ItemMarket {
  std::vector<double> features;
  double probability = 0.0;
  double reserve = 0.0;
  ValueDistribution competitor;
};

/// Everything a single buyer needs to evaluate its dual against a frozen
/// profile. Built once per profile and shared read-only.
struct Market {
  int bidders = 2;
  double multiplier_cap = 0.0;
  std::vector<ItemMarket> items;
};

inline Market build_market(const AuctionInstance& instance, const PacingProfile& profile) {
  validate_profile(instance, profile);
  Market m;
  m.bidders = instance.bidders();
  m.multiplier_cap = instance.multiplier_cap();
  m.items.reserve(instance.item_count());
  for (std::size_t i = 0; i < instance.item_count(); ++i) {
    const auto& it = instance.item(i);
    auto lambda = paced_value_distribution(instance, profile, i);
    m.items.push_back(ItemMarket{it.features, it.probability, it.reserve,
                                 highest_competitor_distribution(ValueDistribution(std::move(lambda)),
                                                                 instance.bidders())});
  }
  return m;
}

/// q(t) = (1+t) E_alpha[1{v_t >= r} integral_r^{v_t} H] + t B, v_t the paced value.
inline double dual_value(const Market& market, std::span<const double> weights, double budget, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("dual_value: multiplier must be >= 0");
  double total = 0.0;
  for (const auto& it : market.items) {
    const double v = paced_value(weights, it.features, t);
    if (v >= it.reserve) total += it.probability * (1.0 + t) * cdf_integral(it.competitor, it.reserve, v);
  }
  return total + t * budget;
}

/// E_alpha[sigma(v_t) H(v_t) 1{v_t >= r}], ties at v_t counted as wins.
inline double expected_expenditure(const Market& market, std::span<const double> weights, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("expected_expenditure: multiplier must be >= 0");
  double total = 0.0;
  for (const auto& it : market.items) {
    const double v = paced_value(weights, it.features, t);
    if (v >= it.reserve) total += it.probability * sigma(it.competitor, it.reserve, v) * it.competitor.cdf(v);
  }
  return total;
}

/// dq/dt = B - expected expenditure; the left derivative where q has a kink.
inline double dual_derivative(const Market& market, std::span<const double> weights, double budget, double t) {
  return budget - expected_expenditure(market, weights, t);
}

struct BestResponseResult {
  double t_star = 0.0;
  double dual_value = 0.0;
  double expenditure = 0.0;
  bool binding = false;
  double bracket_width = 0.0;
  /// B minus expenditure a solver resolution below and above t_star. On a
  /// discrete market q has kinks, and at a kink minimizer these bracket zero.
  double derivative_below = 0.0;
  double derivative_above = 0.0;
};

struct BestResponseOptions {
  int scan_points = 256;
  double bracket_tol = 1e-9;
  double value_rel_tol = 1e-12;
  double multiplier_tol = 1e-9;
  double slackness_tol = 1e-6;
  bool polish = true;
};

/// Step used to probe one-sided derivatives; larger than the final bracket.
inline double derivative_probe(double t, const BestResponseOptions& opt) {
  return 2.0 * opt.bracket_tol * (1.0 + t);
}

namespace detail {

/// Locates, near `t0`, the point where the left slope B - e(t) turns
/// nonnegative, to adjacent doubles. Returns the upper end, where spending
/// with ties won does not exceed B.
inline double polish_minimizer(const Market& market, std::span<const double> weights, double budget, double t0,
                               double reach) {
  const double cap = market.multiplier_cap;
  auto falling = [&](double t) { return dual_derivative(market, weights, budget, t) < 0.0; };
  double lo = t0;
  double hi = t0;
  double step = 1e-12 * (1.0 + t0);
  if (falling(t0)) {
    for (;;) {
      hi = std::min(cap, t0 + step);
      if (!falling(hi)) break;
      lo = hi;
      if (hi >= cap || step > reach) return hi;
      step *= 2.0;
    }
  } else {
    for (;;) {
      if (lo <= 0.0) return 0.0;
      lo = std::max(0.0, t0 - step);
      if (falling(lo)) break;
      hi = lo;
      if (step > reach) return t0;
      step *= 2.0;
    }
  }
  for (;;) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (falling(mid) ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace detail

/// Smallest minimizer of q over [0, multiplier_cap]: coarse scan, then
/// golden-section refinement inside the best scan bracket.
inline BestResponseResult best_response(const Market& market, std::span<const double> weights, double budget,
                                        const BestResponseOptions& opt = {}) {
  const double cap = market.multiplier_cap;
  if (!(cap > 0.0)) throw std::invalid_argument("best_response: market has no multiplier range");
  const int k_scan = std::max(opt.scan_points, 3);
  auto q = [&](double t) { return dual_value(market, weights, budget, t); };

  struct Eval {
    double t;
    double q;
  };
  std::vector<Eval> evals;
  evals.reserve(static_cast<std::size_t>(k_scan) + 128);

  std::size_t best = 0;
  for (int i = 0; i < k_scan; ++i) {
    const double t = (i == k_scan - 1) ? cap : cap * i / (k_scan - 1);
    evals.push_back({t, q(t)});
    if (evals.back().q < evals[best].q) best = evals.size() - 1;
  }
  double lo = evals[best > 0 ? best - 1 : 0].t;
  double hi = evals[std::min<std::size_t>(best + 1, evals.size() - 1)].t;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = q(c);
  double fd = q(d);
  evals.push_back({c, fc});
  evals.push_back({d, fd});
  while (hi - lo > opt.bracket_tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = q(c);
      evals.push_back({c, fc});
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = q(d);
      evals.push_back({d, fd});
    }
  }
  evals.push_back({lo, q(lo)});
  evals.push_back({hi, q(hi)});

  double q_min = std::numeric_limits<double>::infinity();
  for (const auto& e : evals) q_min = std::min(q_min, e.q);
  const double slack = opt.value_rel_tol * (1.0 + std::abs(q_min));
  BestResponseResult out;
  out.t_star = std::numeric_limits<double>::infinity();
  for (const auto& e : evals) {
    if (e.q <= q_min + slack && e.t < out.t_star) {
      out.t_star = e.t;
      out.dual_value = e.q;
    }
  }
  if (opt.polish) {
    const double t = detail::polish_minimizer(market, weights, budget, out.t_star, cap / (k_scan - 1));
    const double qt = q(t);
    if (qt <= q_min + slack) {
      out.t_star = t;
      out.dual_value = qt;
    }
  }
  out.bracket_width = hi - lo;
  out.expenditure = expected_expenditure(market, weights, out.t_star);

  const double h = derivative_probe(out.t_star, opt);
  out.derivative_below = out.t_star > h ? dual_derivative(market, weights, budget, out.t_star - h)
                                        : dual_derivative(market, weights, budget, 0.0);
  out.derivative_above = dual_derivative(market, weights, budget, std::min(cap, out.t_star + h));
  out.binding = out.t_star > opt.multiplier_tol && out.derivative_below <= opt.slackness_tol &&
                out.derivative_above >= -opt.slackness_tol;
  return out;
}

// Convenience overloads addressing a buyer atom of an instance.

inline double dual_value(const AuctionInstance& instance, const PacingProfile& profile, std::size_t buyer,
                         double t) {
  const auto& b = instance.buyer(buyer);
  return dual_value(build_market(instance, profile), b.weights, b.budget, t);
}

inline double expected_expenditure(const AuctionInstance& instance, const PacingProfile& profile,
                                   std::size_t buyer, double t) {
  return expected_expenditure(build_market(instance, profile), instance.buyer(buyer).weights, t);
}

inline double dual_derivative(const AuctionInstance& instance, const PacingProfile& profile, std::size_t buyer,
                              double t) {
  const auto& b = instance.buyer(buyer);
  return dual_derivative(build_market(instance, profile), b.weights, b.budget, t);
}

inline BestResponseResult best_response(const AuctionInstance& instance, const PacingProfile& profile,
                                        std::size_t buyer, const BestResponseOptions& opt = {}) {
  const auto& b = instance.buyer(buyer);
  return best_response(build_market(instance, profile), b.weights, b.budget, opt);
}

}  // namespace vpace
