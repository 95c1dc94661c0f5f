#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vpace/distribution.hpp"
#include "vpace/dual.hpp"
#include "vpace/equilibrium.hpp"
#include "vpace/instance.hpp"

namespace vpace {

enum class AuctionFormat { FirstPrice, SecondPrice, AllPay };

inline std::string_view format_tag(AuctionFormat f) {
  switch (f) {
    case AuctionFormat::FirstPrice: return "fp";
    case AuctionFormat::SecondPrice: return "sp";
    case AuctionFormat::AllPay: return "ap";
  }
  return "?";
}

inline AuctionFormat parse_format(std::string_view tag) {
  if (tag == "fp" || tag == "first-price") return AuctionFormat::FirstPrice;
  if (tag == "sp" || tag == "second-price") return AuctionFormat::SecondPrice;
  if (tag == "ap" || tag == "all-pay") return AuctionFormat::AllPay;
  throw std::invalid_argument("unknown auction format '" + std::string(tag) + "' (expected fp, sp or ap)");
}

/// U(x) = 1{x >= r} integral_r^x H.
inline double interim_utility(const ValueDistribution& H, double reserve, double x) {
  if (x < reserve) return 0.0;
  return cdf_integral(H, reserve, x);
}

/// m(x) = 1{x >= r} (x H(x) - integral_r^x H). Identical for every format.
inline double expected_payment(AuctionFormat, const ValueDistribution& H, double reserve, double x) {
  if (x < reserve) return 0.0;
  return std::max(0.0, x * H.cdf(x) - cdf_integral(H, reserve, x));
}

/// Symmetric-equilibrium bid at value x.
inline double bid_oracle(AuctionFormat format, const ValueDistribution& H, double reserve, double x) {
  switch (format) {
    case AuctionFormat::FirstPrice: return sigma(H, reserve, x);
    case AuctionFormat::SecondPrice: return x;
    case AuctionFormat::AllPay:
      if (reserve > 0.0) throw std::invalid_argument("all-pay is only defined with reserve 0");
      return expected_payment(AuctionFormat::FirstPrice, H, 0.0, x);
  }
  throw std::logic_error("bid_oracle: bad format");
}

/// Bid of a buyer atom on an item under a profile.
inline double equilibrium_bid(const AuctionInstance& instance, const PacingProfile& profile, AuctionFormat format,
                              std::size_t buyer, std::size_t item) {
  const Market market = build_market(instance, profile);
  const auto& it = market.items.at(item);
  const double x = paced_value(instance.buyer(buyer).weights, it.features, profile[buyer]);
  return bid_oracle(format, it.competitor, it.reserve, x);
}

/// Per-type interim payment averaged over items: sum_alpha p_alpha m_alpha(v).
inline std::vector<double> analytic_type_payments(const AuctionInstance& instance, const PacingProfile& profile,
                                                  AuctionFormat format) {
  const Market market = build_market(instance, profile);
  std::vector<double> out(instance.buyer_count(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto& b = instance.buyer(j);
    for (const auto& it : market.items) {
      const double x = paced_value(b.weights, it.features, profile[j]);
      out[j] += it.probability * expected_payment(format, it.competitor, it.reserve, x);
    }
  }
  return out;
}

/// Expected revenue per auction: n bidders, each an independent type draw.
inline double analytic_total(const AuctionInstance& instance, std::span<const double> type_payments) {
  double total = 0.0;
  for (std::size_t j = 0; j < type_payments.size(); ++j) total += instance.buyer(j).probability * type_payments[j];
  return instance.bidders() * total;
}

struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / n;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }

  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double standard_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

struct SimulationOptions {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 0;
  std::uint64_t shard_size = 1u << 16;
  unsigned threads = 0;
};

struct FormatRevenue {
  AuctionFormat format = AuctionFormat::FirstPrice;
  std::vector<double> analytic_per_type;
  double analytic_total = 0.0;
  double mc_revenue = 0.0;
  double mc_standard_error = 0.0;
  std::uint64_t samples = 0;
  double tie_frequency = 0.0;
  std::vector<double> mc_per_type;
  std::vector<double> mc_per_type_se;
  /// |mc - analytic| / standard error; 0 when the standard error is 0 and the gap is 0.
  double mc_gap_in_se = 0.0;
  bool mc_flag = false;
};

namespace detail {

inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t categorical(std::mt19937_64& rng, const std::vector<double>& cumulative) {
  const double u = unit_draw(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

struct ShardResult {
  RunningStats revenue;
  std::uint64_t ties = 0;
  std::vector<RunningStats> per_type;
};

}  // namespace detail

/// Monte Carlo revenue of one format. Samples are cut into fixed-size shards,
/// each with its own generator seeded from (seed, shard index), and merged in
/// shard order, so the result does not depend on the thread count.
inline FormatRevenue simulate_revenue(const AuctionInstance& instance, const PacingProfile& profile,
                                      AuctionFormat format, const SimulationOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (opt.shard_size < 1) throw std::invalid_argument("shard_size must be >= 1");
  if (format == AuctionFormat::AllPay)
    for (const auto& it : instance.items())
      if (it.reserve > 0.0) throw std::invalid_argument("all-pay is only defined with reserve 0");

  const Market market = build_market(instance, profile);
  const std::size_t n_items = instance.item_count();
  const std::size_t n_buyers = instance.buyer_count();
  std::vector<double> bids(n_items * n_buyers);
  for (std::size_t i = 0; i < n_items; ++i) {
    const auto& it = market.items[i];
    for (std::size_t j = 0; j < n_buyers; ++j) {
      const double x = paced_value(instance.buyer(j).weights, it.features, profile[j]);
      bids[i * n_buyers + j] = bid_oracle(format, it.competitor, it.reserve, x);
    }
  }
  std::vector<double> item_cum(n_items);
  std::vector<double> buyer_cum(n_buyers);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_items; ++i) item_cum[i] = (acc += instance.item(i).probability);
  acc = 0.0;
  for (std::size_t j = 0; j < n_buyers; ++j) buyer_cum[j] = (acc += instance.buyer(j).probability);

  const auto n = static_cast<std::size_t>(instance.bidders());
  const std::uint64_t shards = (opt.samples + opt.shard_size - 1) / opt.shard_size;
  std::vector<detail::ShardResult> results(shards);

  detail::parallel_for(shards, opt.threads, [&](std::size_t s) {
    auto& res = results[s];
    res.per_type.assign(n_buyers, RunningStats{});
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = s * opt.shard_size;
    const std::uint64_t end = std::min(opt.samples, begin + opt.shard_size);
    std::vector<std::size_t> types(n);
    std::vector<double> pay(n);
    std::vector<std::size_t> top;
    for (std::uint64_t k = begin; k < end; ++k) {
      const std::size_t item = detail::categorical(rng, item_cum);
      const double reserve = instance.item(item).reserve;
      const double* row = &bids[item * n_buyers];
      for (auto& t : types) t = detail::categorical(rng, buyer_cum);

      double best = -1.0;
      top.clear();
      for (std::size_t b = 0; b < n; ++b) {
        const double bid = row[types[b]];
        if (bid < reserve) continue;
        if (bid > best) {
          best = bid;
          top.assign(1, b);
        } else if (bid == best) {
          top.push_back(b);
        }
      }
      std::fill(pay.begin(), pay.end(), 0.0);
      if (!top.empty()) {
        if (top.size() > 1) ++res.ties;
        const std::size_t winner =
            top.size() == 1 ? top[0] : top[std::min(top.size() - 1, static_cast<std::size_t>(detail::unit_draw(rng) * top.size()))];
        switch (format) {
          case AuctionFormat::FirstPrice: pay[winner] = best; break;
          case AuctionFormat::SecondPrice: {
            double second = reserve;
            for (std::size_t b = 0; b < n; ++b)
              if (b != winner) second = std::max(second, row[types[b]]);
            pay[winner] = second;
            break;
          }
          case AuctionFormat::AllPay: break;
        }
      }
      if (format == AuctionFormat::AllPay)
        for (std::size_t b = 0; b < n; ++b) pay[b] = row[types[b]];
      double revenue = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        revenue += pay[b];
        res.per_type[types[b]].add(pay[b]);
      }
      res.revenue.add(revenue);
    }
  });

  RunningStats revenue;
  std::uint64_t ties = 0;
  std::vector<RunningStats> per_type(n_buyers);
  for (const auto& r : results) {
    revenue.merge(r.revenue);
    ties += r.ties;
    for (std::size_t j = 0; j < n_buyers; ++j) per_type[j].merge(r.per_type[j]);
  }

  FormatRevenue out;
  out.format = format;
  out.analytic_per_type = analytic_type_payments(instance, profile, format);
  out.analytic_total = analytic_total(instance, out.analytic_per_type);
  out.samples = opt.samples;
  out.mc_revenue = revenue.mean;
  out.mc_standard_error = revenue.standard_error();
  out.tie_frequency = static_cast<double>(ties) / static_cast<double>(opt.samples);
  out.mc_per_type.resize(n_buyers);
  out.mc_per_type_se.resize(n_buyers);
  for (std::size_t j = 0; j < n_buyers; ++j) {
    out.mc_per_type[j] = per_type[j].mean;
    out.mc_per_type_se[j] = per_type[j].standard_error();
  }
  const double gap = std::abs(out.mc_revenue - out.analytic_total);
  out.mc_gap_in_se = out.mc_standard_error > 0.0 ? gap / out.mc_standard_error
                                                 : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  out.mc_flag = out.mc_gap_in_se > 3.0;
  return out;
}

struct PairwiseGap {
  AuctionFormat a = AuctionFormat::FirstPrice;
  AuctionFormat b = AuctionFormat::SecondPrice;
  double gap_in_se = 0.0;
  bool flag = false;
};

struct RevenueReport {
  std::uint64_t seed = 0;
  std::vector<FormatRevenue> formats;
  double max_analytic_cross_format_gap = 0.0;
  bool analytic_flag = false;
  bool mc_flag = false;
  std::vector<PairwiseGap> pairwise;
};

/// Analytic and simulated revenue for each format, with flags for analytic
/// per-type disagreement above 1e-9 and MC gaps above 3 standard errors.
inline RevenueReport revenue_equivalence_report(const AuctionInstance& instance, const PacingProfile& profile,
                                                std::span<const AuctionFormat> formats,
                                                const SimulationOptions& opt) {
  if (formats.empty()) throw std::invalid_argument("revenue_equivalence_report needs at least one format");
  RevenueReport out;
  out.seed = opt.seed;
  for (AuctionFormat f : formats) out.formats.push_back(simulate_revenue(instance, profile, f, opt));
  const auto& base = out.formats.front().analytic_per_type;
  for (const auto& fr : out.formats) {
    for (std::size_t j = 0; j < base.size(); ++j)
      out.max_analytic_cross_format_gap =
          std::max(out.max_analytic_cross_format_gap, std::abs(fr.analytic_per_type[j] - base[j]));
    out.mc_flag = out.mc_flag || fr.mc_flag;
  }
  out.analytic_flag = out.max_analytic_cross_format_gap > 1e-9;
  for (std::size_t a = 0; a < out.formats.size(); ++a) {
    for (std::size_t b = a + 1; b < out.formats.size(); ++b) {
      const auto& fa = out.formats[a];
      const auto& fb = out.formats[b];
      const double se = std::hypot(fa.mc_standard_error, fb.mc_standard_error);
      const double gap = std::abs(fa.mc_revenue - fb.mc_revenue);
      PairwiseGap p{fa.format, fb.format, se > 0.0 ? gap / se : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0)};
      p.flag = p.gap_in_se > 3.0;
      out.mc_flag = out.mc_flag || p.flag;
      out.pairwise.push_back(p);
    }
  }
  return out;
}

}  // namespace vpace
