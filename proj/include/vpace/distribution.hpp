#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vpace/instance.hpp"

namespace vpace {

/// Right-continuous step CDF over a finite support.
///
/// `cumulative[k]` is P(X <= support[k]). The running area under the CDF is
/// precomputed so integrals cost one binary search per endpoint.
class StepDistribution {
 public:
  StepDistribution() = default;

  StepDistribution(std::vector<double> support, std::vector<double> cumulative)
      : support_(std::move(support)), cumulative_(std::move(cumulative)) {
    if (support_.empty() || support_.size() != cumulative_.size())
      throw std::invalid_argument("step distribution needs matching, nonempty support and cumulative");
    for (std::size_t k = 0; k < support_.size(); ++k) {
      if (!std::isfinite(support_[k])) throw std::invalid_argument("step support must be finite");
      if (k > 0 && !(support_[k] > support_[k - 1]))
        throw std::invalid_argument("step support must be strictly increasing");
      if (!(cumulative_[k] >= 0.0) || cumulative_[k] > 1.0 + 1e-12)
        throw std::invalid_argument("cumulative values must lie in [0, 1]");
      if (k > 0 && cumulative_[k] < cumulative_[k - 1])
        throw std::invalid_argument("cumulative values must be nondecreasing");
    }
    if (std::abs(cumulative_.back() - 1.0) > 1e-12)
      throw std::invalid_argument("final cumulative value must be 1");
    area_.assign(support_.size(), 0.0);
    for (std::size_t k = 1; k < support_.size(); ++k)
      area_[k] = area_[k - 1] + cumulative_[k - 1] * (support_[k] - support_[k - 1]);
  }

  std::span<const double> support() const { return support_; }
  std::span<const double> cumulative() const { return cumulative_; }

  double cdf(double x) const {
    const auto k = index_at_or_below(x);
    return k < 0 ? 0.0 : cumulative_[static_cast<std::size_t>(k)];
  }

  /// P(X < x).
  double cdf_below(double x) const {
    const auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
  }

  /// Integral of the CDF from -infinity to x.
  double antiderivative(double x) const {
    const auto k = index_at_or_below(x);
    if (k < 0) return 0.0;
    const auto i = static_cast<std::size_t>(k);
    return area_[i] + cumulative_[i] * (x - support_[i]);
  }

  bool operator==(const StepDistribution& o) const {
    return support_ == o.support_ && cumulative_ == o.cumulative_;
  }

 private:
  std::ptrdiff_t index_at_or_below(double x) const {
    const auto it = std::upper_bound(support_.begin(), support_.end(), x);
    return (it - support_.begin()) - 1;
  }

  std::vector<double> support_;
  std::vector<double> cumulative_;
  std::vector<double> area_;
};

/// Continuous CDF given in closed form together with its exact antiderivative.
///
/// `competitor` optionally maps n to the closed form of cdf^(n-1); without it
/// only n = 2 can be formed from this distribution.
struct AnalyticDistribution {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> antiderivative;
  std::function<AnalyticDistribution(int)> competitor;
};

/// Either an empirical step CDF or an analytic one.
class ValueDistribution {
 public:
  ValueDistribution(StepDistribution step) : rep_(std::move(step)) {}
  ValueDistribution(AnalyticDistribution analytic) : rep_(std::move(analytic)) {
    const auto& a = std::get<AnalyticDistribution>(rep_);
    if (!a.cdf || !a.antiderivative)
      throw std::invalid_argument("analytic distribution needs both cdf and antiderivative");
  }

  bool is_step() const { return std::holds_alternative<StepDistribution>(rep_); }
  const StepDistribution& step() const { return std::get<StepDistribution>(rep_); }
  const AnalyticDistribution& analytic() const { return std::get<AnalyticDistribution>(rep_); }

  /// P(X <= x).
  double cdf(double x) const {
    if (is_step()) return step().cdf(x);
    return analytic().cdf(x);
  }

  /// P(X < x); equals cdf(x) for analytic distributions.
  double cdf_below(double x) const {
    if (is_step()) return step().cdf_below(x);
    return analytic().cdf(x);
  }

  double antiderivative(double x) const {
    if (is_step()) return step().antiderivative(x);
    return analytic().antiderivative(x);
  }

 private:
  std::variant<StepDistribution, AnalyticDistribution> rep_;
};

/// Integral of the CDF over [a, b].
inline double cdf_integral(const ValueDistribution& dist, double a, double b) {
  if (b < a) throw std::invalid_argument("cdf_integral requires a <= b");
  if (a == b) return 0.0;
  return std::max(0.0, dist.antiderivative(b) - dist.antiderivative(a));
}

/// w^T alpha / (1 + t), summed in ascending index order.
inline double paced_value(std::span<const double> weights, std::span<const double> features, double t) {
  if (weights.size() != features.size())
    throw std::invalid_argument("paced_value: weight and feature dimensions differ");
  if (!(t >= 0.0)) throw std::invalid_argument("paced_value: multiplier must be >= 0");
  return detail::dot(weights, features) / (1.0 + t);
}

/// Distribution of paced values for one item under a pacing profile. Equal
/// paced values are merged; nearby but distinct values stay separate atoms.
inline StepDistribution paced_value_distribution(const AuctionInstance& instance, const PacingProfile& profile,
                                                 std::size_t item) {
  validate_profile(instance, profile);
  const auto& alpha = instance.item(item).features;
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(instance.buyer_count());
  for (std::size_t j = 0; j < instance.buyer_count(); ++j) {
    const auto& b = instance.buyer(j);
    atoms.emplace_back(paced_value(b.weights, alpha, profile[j]), b.probability);
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<double> support;
  std::vector<double> mass;
  for (const auto& [v, p] : atoms) {
    if (!support.empty() && support.back() == v) {
      mass.back() += p;
    } else {
      support.push_back(v);
      mass.push_back(p);
    }
  }
  std::vector<double> cumulative(mass.size());
  double running = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    running += mass[k];
    cumulative[k] = std::min(running, 1.0);
  }
  cumulative.back() = 1.0;
  return StepDistribution(std::move(support), std::move(cumulative));
}

/// Distribution of the largest of n-1 independent draws: cdf^(n-1).
inline ValueDistribution highest_competitor_distribution(const ValueDistribution& lambda, int n) {
  if (n < 2) throw std::invalid_argument("highest_competitor_distribution needs n >= 2");
  if (lambda.is_step()) {
    const auto& s = lambda.step();
    std::vector<double> cumulative(s.cumulative().begin(), s.cumulative().end());
    if (n > 2)
      for (double& c : cumulative) c = std::pow(c, n - 1);
    return StepDistribution(std::vector<double>(s.support().begin(), s.support().end()), std::move(cumulative));
  }
  if (n == 2) return lambda;
  const auto& a = lambda.analytic();
  if (!a.competitor)
    throw std::domain_error("analytic distribution '" + a.name + "' has no closed form for n > 2");
  return a.competitor(n);
}

/// First-price symmetric bid: x - (1/H(x)) * integral_r^x H, the identity
/// below the reserve, and r where H(x) = 0.
inline double sigma(const ValueDistribution& H, double reserve, double x) {
  if (x < reserve) return x;
  const double h = H.cdf(x);
  if (h <= 0.0) return reserve;
  return x - cdf_integral(H, reserve, x) / h;
}

}  // namespace vpace
