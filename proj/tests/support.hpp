#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// Nothing here calls the optimized paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "vpace/vpace.hpp"

namespace vpace::testkit {

/// Two-item arc market with the closed-form competitor CDF on both items.
inline Market analytic_arc_market(double cap = 3.0) {
  Market m;
  m.bidders = 2;
  m.multiplier_cap = cap;
  m.items.push_back({{1.0, 0.0}, 0.5, 0.0, ValueDistribution(arcsine_quarter_circle())});
  m.items.push_back({{0.0, 1.0}, 0.5, 0.0, ValueDistribution(arcsine_quarter_circle())});
  return m;
}

/// Single item, value w^T alpha = w, competitor H uniform^(n-1).
inline Market uniform_toy_market(int n = 2, double cap = 4.0, double reserve = 0.0) {
  Market m;
  m.bidders = n;
  m.multiplier_cap = cap;
  m.items.push_back({{1.0}, 1.0, reserve, ValueDistribution(uniform_power(n - 1))});
  return m;
}

/// Reference multipliers |w| - 1, clipped into the instance's range.
inline PacingProfile norm_minus_one_profile(const AuctionInstance& inst) {
  PacingProfile p = PacingProfile::zeros(inst.buyer_count());
  for (std::size_t j = 0; j < inst.buyer_count(); ++j)
    p.multipliers[j] = std::clamp(detail::norm(inst.buyer(j).weights) - 1.0, 0.0, inst.multiplier_cap());
  return p;
}

/// Midpoint-rule integral of a CDF over [a, b].
inline double midpoint_integral(const ValueDistribution& d, double a, double b, int steps) {
  const double h = (b - a) / steps;
  double s = 0.0;
  for (int k = 0; k < steps; ++k) s += d.cdf(a + (k + 0.5) * h);
  return s * h;
}

/// E[max(Y, r) | Y <= x] straight from the atoms of a step distribution.
inline double sigma_from_atoms(const StepDistribution& H, double r, double x) {
  if (x < r) return x;
  double mass = 0.0;
  double acc = 0.0;
  double prev = 0.0;
  const auto s = H.support();
  const auto c = H.cumulative();
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double p = c[k] - prev;
    prev = c[k];
    if (s[k] > x) break;
    mass += p;
    acc += p * std::max(s[k], r);
  }
  return mass > 0.0 ? acc / mass : r;
}

/// Smallest minimizer of q on a uniform grid of `points` points over [0, cap].
struct GridMinimum {
  double t = 0.0;
  double q = 0.0;
  double spacing = 0.0;
};

inline GridMinimum brute_force_dual_minimum(const Market& m, std::span<const double> w, double budget,
                                            int points) {
  GridMinimum g;
  g.spacing = m.multiplier_cap / (points - 1);
  std::vector<double> q(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) q[static_cast<std::size_t>(k)] = dual_value(m, w, budget, k * g.spacing);
  const double best = *std::min_element(q.begin(), q.end());
  for (int k = 0; k < points; ++k) {
    if (q[static_cast<std::size_t>(k)] <= best + 1e-12 * (1.0 + std::abs(best))) {
      g.t = k * g.spacing;
      g.q = q[static_cast<std::size_t>(k)];
      break;
    }
  }
  return g;
}

/// Lagrangian objective sum_alpha p (w^T alpha - (1+t) b) W(b) for first-price
/// against competitors bidding sigma, where W(b) is the probability that the
/// highest competing bid is <= b (ties won) and b >= r.
struct LagrangianCheck {
  double grid_best = 0.0;
  double value_pacing = 0.0;
  double resolution = 0.0;
};

inline LagrangianCheck lagrangian_bid_grid(const Market& m, std::span<const double> w, double t, double omega,
                                           int grid_points) {
  LagrangianCheck out;
  const double spacing = omega / (grid_points - 1);
  out.resolution = (1.0 + t) * spacing + 1e-12;
  for (const auto& it : m.items) {
    const auto& H = it.competitor.step();
    const auto support = H.support();
    const auto cum = H.cumulative();
    // Competing bid levels and the probability of each being the highest.
    std::vector<double> levels(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) levels[k] = sigma(it.competitor, it.reserve, support[k]);
    auto win_prob = [&](double b) {
      if (b < it.reserve) return 0.0;
      double prev = 0.0;
      double p = 0.0;
      for (std::size_t k = 0; k < support.size(); ++k) {
        // Bid levels reached by different arithmetic paths tie up to rounding.
        if (levels[k] <= b + 1e-12 * (1.0 + b)) p += cum[k] - prev;
        prev = cum[k];
      }
      return p;
    };
    const double value = detail::dot(w, it.features);
    double best = 0.0;  // bidding below the reserve earns zero
    for (int g = 0; g < grid_points; ++g) {
      const double b = g * spacing;
      best = std::max(best, (value - (1.0 + t) * b) * win_prob(b));
    }
    const double x = value / (1.0 + t);
    const double vp = x >= it.reserve ? (value - (1.0 + t) * sigma(it.competitor, it.reserve, x)) * win_prob(sigma(it.competitor, it.reserve, x)) : 0.0;
    out.grid_best += it.probability * best;
    out.value_pacing += it.probability * vp;
  }
  return out;
}

/// Small random market: 1-3 items, 1-4 buyers, d = 2, n in {2, 3}.
inline AuctionInstance random_tiny_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RawInstance raw;
  raw.n = 2 + static_cast<int>(rng() % 2);
  raw.d = 2;
  const int items = 1 + static_cast<int>(rng() % 3);
  const int buyers = 1 + static_cast<int>(rng() % 4);
  double total = 0.0;
  for (int i = 0; i < items; ++i) {
    ItemAtom a;
    a.features = {0.05 + u(rng), 0.05 + u(rng)};
    a.probability = 0.2 + u(rng);
    a.reserve = (rng() % 3 == 0) ? 0.3 * u(rng) : 0.0;
    total += a.probability;
    raw.items.push_back(a);
  }
  for (auto& a : raw.items) a.probability /= total;
  total = 0.0;
  for (int j = 0; j < buyers; ++j) {
    BuyerAtom b;
    b.weights = {0.5 + 1.5 * u(rng), 0.5 + 1.5 * u(rng)};
    b.budget = 0.05 + 0.5 * u(rng);
    b.probability = 0.2 + u(rng);
    total += b.probability;
    raw.buyers.push_back(b);
  }
  for (auto& b : raw.buyers) b.probability /= total;
  return validate_instance(std::move(raw));
}

inline PacingProfile random_profile(const AuctionInstance& inst, std::mt19937_64& rng, double hi = 1.0) {
  std::uniform_real_distribution<double> u(0.0, std::min(hi, inst.multiplier_cap()));
  PacingProfile p = PacingProfile::zeros(inst.buyer_count());
  for (auto& t : p.multipliers) t = u(rng);
  return p;
}

/// Exact expected revenue of the simulated mechanism, by enumerating every
/// item and every n-tuple of buyer atoms. Tie-breaking does not move revenue
/// in these formats, so no tie bookkeeping is needed.
inline double exact_mechanism_revenue(const AuctionInstance& inst, const PacingProfile& profile,
                                      AuctionFormat format) {
  const auto n = static_cast<std::size_t>(inst.bidders());
  const std::size_t m = inst.buyer_count();
  const Market market = build_market(inst, profile);
  double total = 0.0;
  std::vector<double> bids(m);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t i = 0; i < inst.item_count(); ++i) {
    const auto& it = market.items[i];
    for (std::size_t j = 0; j < m; ++j)
      bids[j] = bid_oracle(format, it.competitor, it.reserve,
                           paced_value(inst.buyer(j).weights, it.features, profile[j]));
    std::fill(idx.begin(), idx.end(), 0);
    double item_total = 0.0;
    while (true) {
      double prob = 1.0;
      double first = -1.0;
      double second = -1.0;
      double sum = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        prob *= inst.buyer(idx[b]).probability;
        const double x = bids[idx[b]];
        sum += x;
        if (x > first) {
          second = first;
          first = x;
        } else if (x > second) {
          second = x;
        }
      }
      double revenue = 0.0;
      if (format == AuctionFormat::AllPay) {
        revenue = sum;
      } else if (first >= it.reserve) {
        revenue = format == AuctionFormat::FirstPrice ? first : std::max(it.reserve, second);
      }
      item_total += prob * revenue;
      std::size_t b = 0;
      while (b < n && ++idx[b] == m) idx[b++] = 0;
      if (b == n) break;
    }
    total += it.probability * item_total;
  }
  return total;
}

}  // namespace vpace::testkit
