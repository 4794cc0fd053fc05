#pragma once

// Discrete value distributions, quantile-based discretization of continuous
// ones, and the basic order/summary operations the rest of the library
// builds on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pricer {

inline constexpr double kMassTol = 1e-9;

// Finite support, strictly increasing nonnegative values, positive masses.
// Construct through validate_distribution so the invariants actually hold;
// masses are renormalized to sum to exactly one.
struct ValueDistribution {
  std::vector<double> values;
  std::vector<double> masses;

  std::size_t size() const { return values.size(); }
};

inline ValueDistribution validate_distribution(std::vector<double> values,
                                               std::vector<double> masses) {
  if (values.empty()) throw std::invalid_argument("distribution: empty support");
  if (values.size() != masses.size())
    throw std::invalid_argument("distribution: values/masses size mismatch");
  if (values.front() < 0.0)
    throw std::invalid_argument("distribution: negative value in support");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1]))
      throw std::invalid_argument("distribution: values must be strictly increasing");
  }
  double sum = 0.0;
  for (double m : masses) {
    if (!(m > 0.0)) throw std::invalid_argument("distribution: masses must be positive");
    sum += m;
  }
  if (std::abs(sum - 1.0) > kMassTol)
    throw std::invalid_argument("distribution: masses sum to " + std::to_string(sum));
  for (double& m : masses) m /= sum;
  return ValueDistribution{std::move(values), std::move(masses)};
}

// Tail of a distribution from a given support index on.  Masses keep their
// original (unnormalized) sizes; the mass cut off below is kept on the side.
struct SupportSuffix {
  std::vector<double> values;
  std::vector<double> masses;
  double excluded_mass = 0.0;
  std::size_t first_index = 0;

  std::size_t size() const { return values.size(); }
};

inline SupportSuffix suffix(const ValueDistribution& d, std::size_t first) {
  if (first >= d.size()) throw std::out_of_range("suffix: index out of range");
  SupportSuffix s;
  s.values.assign(d.values.begin() + static_cast<std::ptrdiff_t>(first), d.values.end());
  s.masses.assign(d.masses.begin() + static_cast<std::ptrdiff_t>(first), d.masses.end());
  s.excluded_mass = std::accumulate(d.masses.begin(),
                                    d.masses.begin() + static_cast<std::ptrdiff_t>(first), 0.0);
  s.first_index = first;
  return s;
}

inline double welfare(const ValueDistribution& d) {
  double w = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) w += d.values[i] * d.masses[i];
  return w;
}

inline double welfare(const SupportSuffix& s) {
  double w = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) w += s.values[i] * s.masses[i];
  return w;
}

struct MyersonPrice {
  double price = 0.0;
  double revenue = 0.0;
  std::size_t index = 0;
};

// Best single posted price over the support.  Ties break toward the lower
// price.
inline MyersonPrice myerson_price(const ValueDistribution& d) {
  double tail = 1.0;
  MyersonPrice best{d.values[0], d.values[0], 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    double rev = d.values[i] * tail;
    if (rev > best.revenue) best = MyersonPrice{d.values[i], rev, i};
    tail -= d.masses[i];
  }
  return best;
}

// Inverse cdf of a (possibly continuous) distribution on [0, upper_bound].
// inverse_cdf must be nondecreasing on [0,1] with inverse_cdf(1) <= upper_bound.
struct QuantileOracle {
  std::function<double(double)> inverse_cdf;
  double upper_bound = 0.0;
};

inline QuantileOracle make_uniform_oracle(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo))
    throw std::invalid_argument("uniform oracle: need 0 <= lo < hi");
  return QuantileOracle{[lo, hi](double q) { return lo + q * (hi - lo); }, hi};
}

// Exponential with the given rate, conditioned on not exceeding the cutoff.
inline QuantileOracle make_exponential_oracle(double rate, double cutoff) {
  if (!(rate > 0.0) || !(cutoff > 0.0))
    throw std::invalid_argument("exponential oracle: rate and cutoff must be positive");
  const double tail = -std::expm1(-rate * cutoff);  // 1 - e^{-rate*cutoff}
  return QuantileOracle{
      [rate, tail](double q) { return -std::log1p(-q * tail) / rate; }, cutoff};
}

// Step inverse cdf of a discrete distribution; lets an already-discrete
// distribution be rediscretized at a coarser grid.
inline QuantileOracle make_discrete_oracle(const ValueDistribution& d) {
  std::vector<double> cum(d.size());
  double run = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    run += d.masses[i];
    cum[i] = run;
  }
  cum.back() = 1.0;
  std::vector<double> values = d.values;
  return QuantileOracle{
      [cum = std::move(cum), values = std::move(values)](double q) {
        auto it = std::lower_bound(cum.begin(), cum.end(), q);
        std::size_t i = static_cast<std::size_t>(it - cum.begin());
        if (i >= values.size()) i = values.size() - 1;
        return values[i];
      },
      d.values.back()};
}

// Lower/upper quantile discretizations at resolution k.  The lower one sits
// below the source in the usual stochastic order, the upper one above.
struct DiscretizationPair {
  ValueDistribution lower;
  ValueDistribution upper;
  long k = 0;
  double max_value = 0.0;
};

namespace detail {

inline ValueDistribution quantile_grid(const QuantileOracle& oracle, long k, long j0) {
  std::vector<double> values;
  std::vector<double> masses;
  values.reserve(static_cast<std::size_t>(k));
  masses.reserve(static_cast<std::size_t>(k));
  double prev = -std::numeric_limits<double>::infinity();
  for (long j = j0; j < j0 + k; ++j) {
    double v = oracle.inverse_cdf(static_cast<double>(j) / static_cast<double>(k));
    double merge_tol = 1e-12 * std::max(1.0, std::abs(v));
    if (v < prev - merge_tol)
      throw std::invalid_argument("discretize: oracle returned decreasing values");
    if (!values.empty() && v <= prev + merge_tol) {
      masses.back() += 1.0 / static_cast<double>(k);
    } else {
      values.push_back(v);
      masses.push_back(1.0 / static_cast<double>(k));
      prev = v;
    }
  }
  return validate_distribution(std::move(values), std::move(masses));
}

}  // namespace detail

inline DiscretizationPair discretize(const QuantileOracle& oracle, long k) {
  if (k < 1) throw std::invalid_argument("discretize: k must be >= 1");
  double top = oracle.inverse_cdf(1.0);
  if (top > oracle.upper_bound * (1.0 + 1e-12) + 1e-12)
    throw std::invalid_argument("discretize: inverse_cdf(1) exceeds the stated upper bound");
  DiscretizationPair pair;
  pair.lower = detail::quantile_grid(oracle, k, 0);
  pair.upper = detail::quantile_grid(oracle, k, 1);
  pair.k = k;
  pair.max_value = oracle.upper_bound;
  return pair;
}

// First-order stochastic dominance: cdf of a never exceeds cdf of b on the
// merged support.
inline bool dominates(const ValueDistribution& a, const ValueDistribution& b) {
  const double tol = 1e-12;
  std::size_t ia = 0, ib = 0;
  double ca = 0.0, cb = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double va = ia < a.size() ? a.values[ia] : std::numeric_limits<double>::infinity();
    double vb = ib < b.size() ? b.values[ib] : std::numeric_limits<double>::infinity();
    double x = std::min(va, vb);
    while (ia < a.size() && a.values[ia] <= x) ca += a.masses[ia++];
    while (ib < b.size() && b.values[ib] <= x) cb += b.masses[ib++];
    if (ca > cb + tol) return false;
  }
  return true;
}

}  // namespace pricer
