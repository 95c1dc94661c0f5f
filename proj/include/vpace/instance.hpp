#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpace {

/// Raised for malformed or inconsistent market descriptions.
class InstanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An item type: context vector, probability of being auctioned, reserve price.
struct ItemAtom {
  std::vector<double> features;
  double probability = 0.0;
  double reserve = 0.0;

  bool operator==(const ItemAtom&) const = default;
};

/// A buyer type: per-feature weights, budget, and population share.
struct BuyerAtom {
  std::vector<double> weights;
  double budget = 0.0;
  double probability = 0.0;

  bool operator==(const BuyerAtom&) const = default;
};

/// Unvalidated market description, as read from an instance file.
struct RawInstance {
  int n = 0;
  int d = 0;
  std::vector<ItemAtom> items;
  std::vector<BuyerAtom> buyers;
};

class AuctionInstance;
AuctionInstance validate_instance(RawInstance raw);

/// A validated, immutable discretized market.
///
/// `b_min` and `omega` are derived: the smallest budget and the largest value
/// w^T alpha over all (buyer, item) pairs. Multipliers live in
/// [0, omega / b_min].
class AuctionInstance {
 public:
  int bidders() const { return n_; }
  int dimension() const { return d_; }
  std::span<const ItemAtom> items() const { return items_; }
  std::span<const BuyerAtom> buyers() const { return buyers_; }
  const ItemAtom& item(std::size_t i) const { return items_.at(i); }
  const BuyerAtom& buyer(std::size_t j) const { return buyers_.at(j); }
  std::size_t item_count() const { return items_.size(); }
  std::size_t buyer_count() const { return buyers_.size(); }
  double b_min() const { return b_min_; }
  double omega() const { return omega_; }
  double multiplier_cap() const { return omega_ / b_min_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  RawInstance raw() const { return RawInstance{n_, d_, items_, buyers_}; }

  bool operator==(const AuctionInstance& o) const {
    return n_ == o.n_ && d_ == o.d_ && items_ == o.items_ && buyers_ == o.buyers_;
  }

 private:
  friend AuctionInstance validate_instance(RawInstance raw);
  AuctionInstance() = default;

  int n_ = 0;
  int d_ = 0;
  std::vector<ItemAtom> items_;
  std::vector<BuyerAtom> buyers_;
  double b_min_ = 0.0;
  double omega_ = 0.0;
  std::vector<std::string> warnings_;
};

/// One multiplier per buyer atom, indexed like `AuctionInstance::buyers()`.
struct PacingProfile {
  std::vector<double> multipliers;

  std::size_t size() const { return multipliers.size(); }
  double operator[](std::size_t j) const { return multipliers[j]; }
  bool operator==(const PacingProfile&) const = default;

  static PacingProfile zeros(std::size_t count) { return {std::vector<double>(count, 0.0)}; }
};

/// Throws InstanceError unless `profile` has one entry per buyer atom, each in
/// [0, multiplier_cap].
inline void validate_profile(const AuctionInstance& instance, const PacingProfile& profile) {
  if (profile.size() != instance.buyer_count()) {
    throw InstanceError("profile size " + std::to_string(profile.size()) + " does not match " +
                        std::to_string(instance.buyer_count()) + " buyer atoms");
  }
  const double cap = instance.multiplier_cap();
  for (std::size_t j = 0; j < profile.size(); ++j) {
    const double t = profile[j];
    if (!(t >= 0.0) || t > cap) {
      throw InstanceError("multiplier " + std::to_string(j) + " outside [0, omega/b_min]");
    }
  }
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Sums within this distance of 1 are accepted unchanged.
inline constexpr double kMassExact = 1e-12;
// Sums within this distance of 1 are renormalized; anything further is rejected.
inline constexpr double kMassRenormalize = 1e-9;

template <typename Atom>
void normalize_mass(std::vector<Atom>& atoms, const char* what) {
  double total = 0.0;
  for (const auto& a : atoms) total += a.probability;
  const double gap = std::abs(total - 1.0);
  if (gap <= kMassExact) return;
  if (gap <= kMassRenormalize) {
    for (auto& a : atoms) a.probability /= total;
    return;
  }
  throw InstanceError(std::string(what) + " probability mass sums to " + std::to_string(total) +
                      ", expected 1");
}

}  // namespace detail

inline AuctionInstance validate_instance(RawInstance raw) {
  if (raw.n < 2) throw InstanceError("n must be at least 2 bidders per auction");
  if (raw.d < 1) throw InstanceError("feature dimension d must be at least 1");
  if (raw.items.empty()) throw InstanceError("instance has no item atoms");
  if (raw.buyers.empty()) throw InstanceError("instance has no buyer atoms");
  const auto d = static_cast<std::size_t>(raw.d);

  for (std::size_t i = 0; i < raw.items.size(); ++i) {
    const auto& it = raw.items[i];
    const std::string tag = "item " + std::to_string(i);
    if (it.features.size() != d) throw InstanceError(tag + ": dimension mismatch with d");
    bool any_positive = false;
    for (double f : it.features) {
      if (!std::isfinite(f) || f < 0.0) throw InstanceError(tag + ": features must be finite and >= 0");
      any_positive = any_positive || f > 0.0;
    }
    if (!any_positive) throw InstanceError(tag + ": features must have a positive entry");
    if (!(it.probability > 0.0) || it.probability > 1.0)
      throw InstanceError(tag + ": probability mass must lie in (0, 1]");
    if (!std::isfinite(it.reserve) || it.reserve < 0.0) throw InstanceError(tag + ": reserve must be >= 0");
  }
  for (std::size_t j = 0; j < raw.buyers.size(); ++j) {
    const auto& b = raw.buyers[j];
    const std::string tag = "buyer " + std::to_string(j);
    if (b.weights.size() != d) throw InstanceError(tag + ": dimension mismatch with d");
    for (double w : b.weights) {
      if (!std::isfinite(w) || w <= 0.0) throw InstanceError(tag + ": weights must be finite and > 0");
    }
    if (!std::isfinite(b.budget) || b.budget <= 0.0)
      throw InstanceError(tag + ": budget floor violated, budget must be > 0");
    if (!(b.probability > 0.0) || b.probability > 1.0)
      throw InstanceError(tag + ": probability mass must lie in (0, 1]");
  }
  detail::normalize_mass(raw.items, "item");
  detail::normalize_mass(raw.buyers, "buyer");

  AuctionInstance out;
  out.n_ = raw.n;
  out.d_ = raw.d;
  out.b_min_ = raw.buyers.front().budget;
  for (const auto& b : raw.buyers) out.b_min_ = std::min(out.b_min_, b.budget);
  out.omega_ = 0.0;
  for (const auto& b : raw.buyers)
    for (const auto& it : raw.items) out.omega_ = std::max(out.omega_, detail::dot(b.weights, it.features));
  if (!(out.omega_ > 0.0)) throw InstanceError("omega must be positive");
  if (raw.d == 1) out.warnings_.push_back("d = 1: structural results assume at least two features");
  out.items_ = std::move(raw.items);
  out.buyers_ = std::move(raw.buyers);
  return out;
}

/// Budget of an arc-example buyer: (2|w| - w1 - w2) / (pi |w|).
inline double arc_budget(std::span<const double> w) {
  const double r = detail::norm(w);
  return (2.0 * r - w[0] - w[1]) / (std::numbers::pi * r);
}

/// Two-feature arc market: buyers with a <= |w| <= b in the positive quadrant,
/// budgets from `arc_budget`, items e1 and e2, n = 2.
///
/// Buyer atoms form a Kronecker lattice over angle x radius: atom k sits at
/// angle (k + 1/2) / count * pi/2 and at radial fraction frac((k + 1/2) / phi),
/// mapped through the area-uniform radius sqrt(a^2 + u (b^2 - a^2)). Every
/// atom has its own direction.
inline AuctionInstance gen_arc_instance(double a, double b, int count) {
  if (count < 1) throw InstanceError("arc generator needs count >= 1");
  if (!(a >= 1.0)) throw InstanceError("arc generator needs a >= 1");
  if (!(b > a)) throw InstanceError("arc generator needs b > a");
  const double inv_phi = 2.0 / (1.0 + std::sqrt(5.0));
  RawInstance raw;
  raw.n = 2;
  raw.d = 2;
  raw.items = {ItemAtom{{1.0, 0.0}, 0.5, 0.0}, ItemAtom{{0.0, 1.0}, 0.5, 0.0}};
  raw.buyers.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double angle = (k + 0.5) / count * (std::numbers::pi / 2.0);
    double u = (k + 0.5) * inv_phi;
    u -= std::floor(u);
    const double radius = std::sqrt(a * a + u * (b * b - a * a));
    BuyerAtom buyer;
    buyer.weights = {radius * std::cos(angle), radius * std::sin(angle)};
    buyer.budget = arc_budget(buyer.weights);
    buyer.probability = 1.0 / count;
    raw.buyers.push_back(std::move(buyer));
  }
  return validate_instance(std::move(raw));
}

/// Three-bidder grid market: 10 x 10 weight grid over (1,2)^2 at cell
/// midpoints, every budget 0.6, items evenly spaced on {(x, 1-x)}.
inline AuctionInstance gen_grid_instance() {
  constexpr int kSide = 10;
  constexpr int kItems = 10;
  RawInstance raw;
  raw.n = 3;
  raw.d = 2;
  for (int k = 0; k < kItems; ++k) {
    const double x = static_cast<double>(k) / (kItems - 1);
    raw.items.push_back(ItemAtom{{x, 1.0 - x}, 1.0 / kItems, 0.0});
  }
  for (int i = 0; i < kSide; ++i) {
    for (int j = 0; j < kSide; ++j) {
      BuyerAtom buyer;
      buyer.weights = {1.0 + (i + 0.5) / kSide, 1.0 + (j + 0.5) / kSide};
      buyer.budget = 0.6;
      buyer.probability = 1.0 / (kSide * kSide);
      raw.buyers.push_back(std::move(buyer));
    }
  }
  return validate_instance(std::move(raw));
}

}  // namespace vpace
