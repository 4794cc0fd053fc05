#pragma once

// Posted-price curves over a deadline and the impatient buyer's best
// response: a buyer of value v facing posts (t_j, p_j) maximizes
// (v - p_j) * e^{-t_j} and abstains only when every option is negative.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pricer/distribution.hpp"
#include "pricer/errors.hpp"

namespace pricer {

inline constexpr double kUtilityTol = 1e-9;

struct PricePost {
  double time = 0.0;
  double price = 0.0;
};

struct PricingCurve {
  std::vector<PricePost> posts;  // sorted by time
  double horizon = 0.0;
};

inline PricingCurve make_curve(std::vector<PricePost> posts, double horizon) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("curve: negative horizon");
  for (const auto& post : posts) {
    if (!(post.time >= 0.0) || post.time > horizon + 1e-12 * std::max(1.0, horizon))
      throw std::invalid_argument("curve: post time outside [0, horizon]");
    if (!std::isfinite(post.price) || post.price < 0.0)
      throw std::invalid_argument("curve: prices must be finite and nonnegative");
  }
  std::stable_sort(posts.begin(), posts.end(),
                   [](const PricePost& a, const PricePost& b) { return a.time < b.time; });
  return PricingCurve{std::move(posts), horizon};
}

struct PurchaseDecision {
  std::optional<std::size_t> choice;  // index into curve.posts
  double utility = 0.0;
};

// Ties within tol break toward the earliest post; a zero-utility purchase is
// taken rather than abstaining.
inline PurchaseDecision best_response(const PricingCurve& curve, double v,
                                      double tol = kUtilityTol) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& post : curve.posts)
    best = std::max(best, (v - post.price) * std::exp(-post.time));
  if (curve.posts.empty() || best < -tol) return PurchaseDecision{std::nullopt, 0.0};
  for (std::size_t j = 0; j < curve.posts.size(); ++j) {
    double u = (v - curve.posts[j].price) * std::exp(-curve.posts[j].time);
    if (u >= best - tol) return PurchaseDecision{j, u < 0.0 ? 0.0 : u};
  }
  return PurchaseDecision{std::nullopt, 0.0};  // unreachable
}

inline double revenue(const PricingCurve& curve, const std::vector<double>& values,
                      const std::vector<double>& masses) {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    PurchaseDecision d = best_response(curve, values[i]);
    if (d.choice) total += masses[i] * curve.posts[*d.choice].price;
  }
  return total;
}

inline double revenue(const PricingCurve& curve, const ValueDistribution& d) {
  return revenue(curve, d.values, d.masses);
}

inline double revenue(const PricingCurve& curve, const SupportSuffix& s) {
  return revenue(curve, s.values, s.masses);
}

struct PricePoint {
  double price = 0.0;
  double time = 0.0;
};

// Per-value purchase plan.  Participants form a suffix of the support; lower
// values hold no entry.
struct Assignment {
  std::vector<std::optional<PricePoint>> entries;
  double horizon = 0.0;
};

struct PriceTimes {
  std::vector<double> times;
  double span = 0.0;  // time of the lowest participant
};

// Reconstructs purchase times from a nondecreasing price schedule: the top
// value buys at 0 and each step back in value adds ln((v_i - p_{i-1}) /
// (v_i - p_i)) so adjacent values stay indifferent.
inline PriceTimes times_from_prices(const std::vector<double>& values,
                                    const std::vector<double>& prices) {
  const std::size_t m = values.size();
  if (m == 0 || prices.size() != m)
    throw std::invalid_argument("times_from_prices: size mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    if (prices[i] > values[i] + 1e-9)
      throw std::invalid_argument("times_from_prices: price above value");
    if (i > 0 && prices[i] < prices[i - 1] - 1e-9)
      throw std::invalid_argument("times_from_prices: decreasing prices");
  }
  PriceTimes out;
  out.times.assign(m, 0.0);
  for (std::size_t i = m; i-- > 1;) {
    double num = values[i] - prices[i - 1];
    double den = values[i] - prices[i];
    double incr;
    if (den <= 0.0) {
      if (num <= 1e-12 * std::max(1.0, values[i]))
        incr = 0.0;  // both prices pinned at the value
      else
        throw NumericError("times_from_prices: infinite time increment");
    } else {
      incr = std::log(num / den);
    }
    if (incr < 0.0) incr = 0.0;  // rounding guard; prices are nondecreasing
    out.times[i - 1] = out.times[i] + incr;
  }
  out.span = out.times.front();
  return out;
}

// Collapses an assignment to the distinct posts it uses.  Throws if the
// assignment is not suffix-shaped or not monotone (prices nondecreasing,
// times nonincreasing in value).
inline PricingCurve curve_from_assignment(const Assignment& a) {
  std::vector<PricePost> posts;
  bool seen = false;
  const PricePoint* prev = nullptr;
  for (const auto& entry : a.entries) {
    if (!entry) {
      if (seen)
        throw std::invalid_argument("curve_from_assignment: participants must form a suffix");
      continue;
    }
    seen = true;
    if (prev) {
      if (entry->price < prev->price - 1e-9 || entry->time > prev->time + 1e-9)
        throw std::invalid_argument("curve_from_assignment: assignment violates monotonicity");
    }
    bool duplicate = prev && std::abs(entry->time - prev->time) <= 1e-12 &&
                     std::abs(entry->price - prev->price) <=
                         1e-12 * std::max(1.0, std::abs(prev->price));
    if (!duplicate) posts.push_back(PricePost{entry->time, entry->price});
    prev = &*entry;
  }
  std::reverse(posts.begin(), posts.end());  // value-descending order is time-ascending
  return make_curve(std::move(posts), a.horizon);
}

struct IcIrReport {
  bool pass = true;
  double worst = 0.0;        // largest violation across all checks
  double ic = 0.0;           // envy toward another participant's post
  double ir = 0.0;           // price above value
  double time_range = 0.0;   // time outside [0, T]
  double monotonicity = 0.0; // price decrease / time increase across values
  double exclusion = 0.0;    // positive utility available to a non-participant
};

inline IcIrReport verify_ic_ir(const Assignment& a, const std::vector<double>& values,
                               double T, double tol = 1e-9) {
  if (a.entries.size() != values.size())
    throw std::invalid_argument("verify_ic_ir: size mismatch");
  IcIrReport r;
  std::vector<std::size_t> parts;
  bool seen = false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i]) {
      seen = true;
      parts.push_back(i);
    } else if (seen) {
      r.pass = false;
      r.worst = std::numeric_limits<double>::infinity();
      return r;  // not suffix-shaped
    }
  }
  auto track = [&](double& slot, double violation) {
    if (violation > slot) slot = violation;
    if (violation > r.worst) r.worst = violation;
  };
  for (std::size_t idx = 0; idx < parts.size(); ++idx) {
    std::size_t i = parts[idx];
    const PricePoint& own = *a.entries[i];
    track(r.ir, own.price - values[i]);
    track(r.time_range, -own.time);
    track(r.time_range, own.time - T);
    if (idx > 0) {
      const PricePoint& below = *a.entries[parts[idx - 1]];
      track(r.monotonicity, below.price - own.price);
      track(r.monotonicity, own.time - below.time);
    }
    double own_u = (values[i] - own.price) * std::exp(-own.time);
    for (std::size_t j : parts) {
      if (j == i) continue;
      const PricePoint& other = *a.entries[j];
      double u = (values[i] - other.price) * std::exp(-other.time);
      track(r.ic, u - own_u);
    }
  }
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i]) break;
    for (std::size_t j : parts) {
      const PricePoint& other = *a.entries[j];
      track(r.exclusion, (values[i] - other.price) * std::exp(-other.time));
    }
  }
  r.pass = r.worst <= tol;
  return r;
}

struct DiscountSample {
  double time = 0.0;      // clock time under the foreign discount
  double discount = 1.0;  // its value there, in (0, 1]
};

struct HorizonMap {
  std::vector<double> times;
  double horizon = 0.0;
};

// Converts a deadline under any continuously decreasing discount into the
// canonical e^{-t} clock: t = -ln(discount).  The samples must cover the
// foreign deadline itself.
inline HorizonMap map_discount_horizon(const std::vector<DiscountSample>& samples,
                                       double foreign_horizon) {
  if (samples.empty()) throw std::invalid_argument("map_discount_horizon: no samples");
  double prev_t = -std::numeric_limits<double>::infinity();
  double prev_d = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!(s.discount > 0.0) || s.discount > 1.0)
      throw std::invalid_argument("map_discount_horizon: discount outside (0, 1]");
    if (s.discount >= prev_d)
      throw std::invalid_argument("map_discount_horizon: discount samples must be decreasing");
    if (s.time <= prev_t)
      throw std::invalid_argument("map_discount_horizon: sample times must be increasing");
    prev_t = s.time;
    prev_d = s.discount;
  }
  if (std::abs(samples.back().time - foreign_horizon) >
      1e-12 * std::max(1.0, std::abs(foreign_horizon)))
    throw std::invalid_argument("map_discount_horizon: samples must end at the horizon");
  HorizonMap out;
  out.times.reserve(samples.size());
  for (const auto& s : samples) out.times.push_back(-std::log(s.discount));
  out.horizon = out.times.back();
  return out;
}

}  // namespace pricer
