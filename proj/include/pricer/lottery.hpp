#pragma once

// Lottery-menu mechanisms and their reduction to deterministic pricing.
//
// A schedule posts menus of lotteries (x, p): pay p upon allocation, which
// happens with probability x.  Any menu schedule reduces to a schedule with
// one lottery per slot; each lottery then has a value threshold above which
// it is purchased when reached.  Replacing every lottery by a coin flip and
// charging the indifference-preserving price turns the schedule into a
// mixture of plain pricing curves with identical utilities and payments.
// Adaptive mechanisms (price paths revealed as the buyer commits) are
// evaluated in normal form: exclusive branches of sequential options.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "pricer/curve.hpp"
#include "pricer/distribution.hpp"
#include "pricer/errors.hpp"

namespace pricer {

struct MenuOption {
  double x = 0.0;  // allocation probability
  double p = 0.0;  // price charged upon allocation
};

struct TimedMenu {
  double t = 0.0;
  std::vector<MenuOption> options;  // the null option (0, 0) is implicit
};

struct MenuSchedule {
  std::vector<TimedMenu> menus;  // times nondecreasing
};

struct LotteryStep {
  double t = 0.0;
  double x = 1.0;
  double p = 0.0;
};

// One lottery per slot.  Several steps may share a time; list order is the
// order they are offered.
struct SingleLotterySchedule {
  std::vector<LotteryStep> steps;
};

inline void validate_menu_schedule(const MenuSchedule& ms) {
  double prev = 0.0;
  for (const TimedMenu& menu : ms.menus) {
    if (!std::isfinite(menu.t) || menu.t < 0.0)
      throw std::invalid_argument("menu schedule: times must be finite and nonnegative");
    if (menu.t < prev) throw std::invalid_argument("menu schedule: times must be nondecreasing");
    prev = menu.t;
    for (const MenuOption& o : menu.options) {
      if (!std::isfinite(o.x) || o.x < 0.0 || o.x > 1.0)
        throw std::invalid_argument("menu schedule: probabilities must lie in [0, 1]");
      if (!std::isfinite(o.p) || o.p < 0.0)
        throw std::invalid_argument("menu schedule: prices must be finite and nonnegative");
    }
  }
}

inline void validate_single_schedule(const SingleLotterySchedule& s) {
  double prev = 0.0;
  for (const LotteryStep& step : s.steps) {
    if (!std::isfinite(step.t) || step.t < 0.0)
      throw std::invalid_argument("lottery schedule: times must be finite and nonnegative");
    if (step.t < prev) throw std::invalid_argument("lottery schedule: times must be nondecreasing");
    prev = step.t;
    if (!(step.x > 0.0) || step.x > 1.0)
      throw std::invalid_argument("lottery schedule: probabilities must lie in (0, 1]");
    if (!std::isfinite(step.p) || step.p < 0.0)
      throw std::invalid_argument("lottery schedule: prices must be finite and nonnegative");
  }
}

// Buyer value of an entire menu schedule, by backward recursion over slots.
// Losing a lottery moves the buyer to the next slot; the null option is
// always available.
inline double menu_utility(const MenuSchedule& ms, double v) {
  double u = 0.0;
  for (std::size_t i = ms.menus.size(); i-- > 0;) {
    const TimedMenu& menu = ms.menus[i];
    double disc = std::exp(-menu.t);
    double best = u;  // null option
    for (const MenuOption& o : menu.options)
      best = std::max(best, o.x * disc * (v - o.p) + (1.0 - o.x) * u);
    u = best;
  }
  return u;
}

inline double schedule_utility(const SingleLotterySchedule& s, double v) {
  double u = 0.0;
  for (std::size_t i = s.steps.size(); i-- > 0;) {
    const LotteryStep& step = s.steps[i];
    u = std::max(u, step.x * std::exp(-step.t) * (v - step.p) + (1.0 - step.x) * u);
  }
  return u;
}

// Menu-to-single-lottery reduction.  Within one menu, options off the lower
// convex hull of (x, x*p), including the origin, are never chosen by any
// value; the survivors, largest x first, become a run of lotteries whose
// marginal probabilities compose back to the original ones, so picking
// option z is equivalent to entering the run at position z.
inline SingleLotterySchedule reduce_to_single(const MenuSchedule& ms) {
  validate_menu_schedule(ms);
  SingleLotterySchedule out;
  for (const TimedMenu& menu : ms.menus) {
    struct Pt {
      double x, q;  // q = x * p
    };
    std::vector<Pt> pts;
    pts.push_back(Pt{0.0, 0.0});
    for (const MenuOption& o : menu.options)
      if (o.x > 0.0) pts.push_back(Pt{o.x, o.x * o.p});
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
      if (a.x != b.x) return a.x < b.x;
      return a.q < b.q;
    });
    // Strict lower hull in (x, q); collinear and equal-x points drop, which
    // also removes options dominated in (x, p).
    std::vector<Pt> hull;
    for (const Pt& pt : pts) {
      if (!hull.empty() && hull.back().x == pt.x) continue;
      while (hull.size() >= 2) {
        const Pt& a = hull[hull.size() - 2];
        const Pt& b = hull.back();
        if ((b.q - a.q) * (pt.x - b.x) >= (pt.q - b.q) * (b.x - a.x))
          hull.pop_back();
        else
          break;
      }
      hull.push_back(pt);
    }
    // hull[0] is the origin; emit survivors largest x first with marginal
    // probability and the price that preserves expected payment.
    for (std::size_t i = hull.size() - 1; i >= 1; --i) {
      double xi = hull[i].x, pi = hull[i].q / hull[i].x;
      double xn = hull[i - 1].x;  // next-smaller option; origin for the last
      double pn = xn > 0.0 ? hull[i - 1].q / xn : 0.0;
      double xm = 1.0 - (1.0 - xi) / (1.0 - xn);
      double pm = (xi * pi - (1.0 - xm) * xn * pn) / xm;
      out.steps.push_back(LotteryStep{menu.t, xm, pm});
    }
  }
  return out;
}

// Convex piecewise-linear function, used for continuation utilities: zero
// far left, nondecreasing slopes.  values[j] = f(breaks[j]); slopes has one
// extra entry, slopes[j] applying left of breaks[j] and slopes.back() after
// the last break.
struct PiecewiseLinear {
  std::vector<double> breaks;
  std::vector<double> values;
  std::vector<double> slopes;

  static PiecewiseLinear zero() {
    PiecewiseLinear f;
    f.breaks = {0.0};
    f.values = {0.0};
    f.slopes = {0.0, 0.0};
    return f;
  }

  double eval(double v) const {
    if (v <= breaks.front()) return values.front() + slopes.front() * (v - breaks.front());
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(breaks.begin(), breaks.end(), v) - breaks.begin());
    if (j == breaks.size()) return values.back() + slopes.back() * (v - breaks.back());
    return values[j - 1] + slopes[j] * (v - breaks[j - 1]);
  }

  double max_slope() const { return slopes.back(); }
};

struct ThresholdAnalysis {
  std::vector<double> thresholds;            // +inf when the lottery is never chosen
  std::vector<char> removable;               // thresholds[i] == +inf
  std::vector<PiecewiseLinear> continuation; // continuation[i] = utility of suffix i..k; size k+1
};

namespace detail {

// Leftmost v with disc*(v - p) >= u(v).  The difference is nondecreasing
// because u's slopes never exceed disc, so a single threshold exists; +inf
// when the slopes meet and u stays above.
inline double threshold_cross(const PiecewiseLinear& u, double disc, double p) {
  auto solve_segment = [&](double b, double uval, double s) {
    double denom = disc - s;
    if (denom <= 0.0) return b;  // flat tie: the first break where it holds
    return (disc * p + uval - s * b) / denom;
  };
  for (std::size_t j = 0; j < u.breaks.size(); ++j) {
    double diff = disc * (u.breaks[j] - p) - u.values[j];
    if (diff >= 0.0) {
      if (j == 0) return solve_segment(u.breaks[0], u.values[0], u.slopes[0]);
      return solve_segment(u.breaks[j - 1], u.values[j - 1], u.slopes[j]);
    }
  }
  if (disc - u.slopes.back() <= 0.0) return std::numeric_limits<double>::infinity();
  return solve_segment(u.breaks.back(), u.values.back(), u.slopes.back());
}

// u_new(v) = u(v) below cross, x*disc*(v - p) + (1 - x)*u(v) above.
inline PiecewiseLinear splice(const PiecewiseLinear& u, double cross, double x, double disc,
                              double p) {
  PiecewiseLinear out;
  out.breaks = u.breaks;
  auto pos = std::lower_bound(out.breaks.begin(), out.breaks.end(), cross);
  if (pos == out.breaks.end() || *pos != cross) out.breaks.insert(pos, cross);
  out.values.reserve(out.breaks.size());
  out.slopes.reserve(out.breaks.size() + 1);
  auto u_slope_left_of = [&](double b) {
    // u's slope immediately left of b
    std::size_t j = static_cast<std::size_t>(
        std::lower_bound(u.breaks.begin(), u.breaks.end(), b) - u.breaks.begin());
    return u.slopes[j];
  };
  for (double b : out.breaks) {
    double ub = u.eval(b);
    out.values.push_back(b <= cross ? ub : x * disc * (b - p) + (1.0 - x) * ub);
  }
  out.slopes.push_back(u.slopes.front());
  for (std::size_t j = 1; j <= out.breaks.size(); ++j) {
    double left = out.breaks[j - 1];  // segment starts here
    double su = j < out.breaks.size() ? u_slope_left_of(out.breaks[j]) : u.slopes.back();
    out.slopes.push_back(left >= cross ? x * disc + (1.0 - x) * su : su);
  }
  return out;
}

}  // namespace detail

// Backward threshold recursion: a reached lottery is purchased iff
// disc_i * (v - p_i) >= u_{i+1}(v), independent of x_i.
inline ThresholdAnalysis thresholds(const SingleLotterySchedule& s) {
  validate_single_schedule(s);
  const std::size_t k = s.steps.size();
  ThresholdAnalysis out;
  out.thresholds.assign(k, 0.0);
  out.removable.assign(k, 0);
  out.continuation.assign(k + 1, PiecewiseLinear::zero());
  PiecewiseLinear u = PiecewiseLinear::zero();
  for (std::size_t i = k; i-- > 0;) {
    const LotteryStep& step = s.steps[i];
    double disc = std::exp(-step.t);
    double cross = detail::threshold_cross(u, disc, step.p);
    out.thresholds[i] = cross;
    if (std::isinf(cross)) {
      out.removable[i] = 1;  // never preferred over waiting
    } else {
      u = detail::splice(u, cross, step.x, disc, step.p);
    }
    out.continuation[i] = u;
  }
  return out;
}

// Expected payment collected from a buyer of value v: walk the schedule,
// buying every lottery whose threshold is met, discounting by the chance of
// reaching each slot unallocated.
inline double expected_payment_single(const SingleLotterySchedule& s,
                                      const std::vector<double>& thresholds_v, double v) {
  double reach = 1.0;
  double pay = 0.0;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    double ell = thresholds_v[i];
    if (v >= ell - 1e-9 * std::max(1.0, std::abs(ell))) {
      pay += reach * s.steps[i].x * s.steps[i].p;
      reach *= 1.0 - s.steps[i].x;
    }
  }
  return pay;
}

inline double revenue_single(const SingleLotterySchedule& s, const ValueDistribution& d) {
  ThresholdAnalysis an = thresholds(s);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    total += d.masses[i] * expected_payment_single(s, an.thresholds, d.values[i]);
  return total;
}

struct WeightedCurve {
  double weight = 0.0;
  PricingCurve curve;
};

struct CurveDistribution {
  std::vector<WeightedCurve> curves;
};

struct DerandomizeOptions {
  bool exhaustive = true;
  std::uint64_t seed = 0;        // Monte Carlo mode only
  std::size_t samples = 10000;   // Monte Carlo mode only
};

// One coin-flip outcome of the schedule: which lotteries allocate, and the
// deterministic prices that keep every threshold buyer indifferent.
struct Realization {
  std::vector<char> taken;
  std::vector<double> prices;  // meaningful where taken
  double weight = 0.0;
};

namespace detail {

// Deterministic prices for a realization, backward: each taken slot charges
// its threshold value minus the best continuation the realization offers.
inline void realization_prices(const SingleLotterySchedule& s, const std::vector<double>& ell,
                               Realization& r) {
  const std::size_t k = s.steps.size();
  r.prices.assign(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    if (!r.taken[i]) continue;
    double cont = 0.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!r.taken[j]) continue;
      cont = std::max(cont, (ell[i] - r.prices[j]) * std::exp(-s.steps[j].t));
    }
    r.prices[i] = ell[i] - std::exp(s.steps[i].t) * cont;
  }
}

inline PricingCurve realization_curve(const SingleLotterySchedule& s, const Realization& r,
                                      double horizon) {
  std::vector<PricePost> posts;
  // The recursion keeps prices nonnegative; rounding can leave -1e-16 dust.
  for (std::size_t i = 0; i < s.steps.size(); ++i)
    if (r.taken[i]) posts.push_back(PricePost{s.steps[i].t, std::max(0.0, r.prices[i])});
  return make_curve(posts, horizon);
}

}  // namespace detail

// All coin-flip outcomes with positive probability (k at most 20).
inline std::vector<Realization> enumerate_realizations(const SingleLotterySchedule& s,
                                                       const ThresholdAnalysis& an) {
  const std::size_t k = s.steps.size();
  if (k > 20) throw std::invalid_argument("enumerate_realizations: more than 20 lotteries");
  std::vector<Realization> out;
  const std::uint32_t total = std::uint32_t{1} << k;
  for (std::uint32_t bits = 0; bits < total; ++bits) {
    Realization r;
    r.taken.assign(k, 0);
    r.weight = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      bool on = (bits >> i) & 1;
      r.taken[i] = on;
      r.weight *= on ? s.steps[i].x : 1.0 - s.steps[i].x;
    }
    if (r.weight <= 0.0) continue;
    detail::realization_prices(s, an.thresholds, r);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<Realization> sample_realizations(const SingleLotterySchedule& s,
                                                    const ThresholdAnalysis& an,
                                                    std::uint64_t seed, std::size_t samples) {
  if (samples == 0) throw std::invalid_argument("sample_realizations: samples must be positive");
  const std::size_t k = s.steps.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Realization> out;
  out.reserve(samples);
  const double w = 1.0 / static_cast<double>(samples);
  for (std::size_t n = 0; n < samples; ++n) {
    Realization r;
    r.taken.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i) r.taken[i] = unit(rng) < s.steps[i].x;
    r.weight = w;
    detail::realization_prices(s, an.thresholds, r);
    out.push_back(std::move(r));
  }
  return out;
}

// Schedule with the never-purchased lotteries removed; dropping them leaves
// every other threshold unchanged.
inline SingleLotterySchedule drop_removable(const SingleLotterySchedule& s,
                                            const ThresholdAnalysis& an) {
  SingleLotterySchedule out;
  for (std::size_t i = 0; i < s.steps.size(); ++i)
    if (!an.removable[i]) out.steps.push_back(s.steps[i]);
  return out;
}

inline CurveDistribution curves_from_realizations(const SingleLotterySchedule& s,
                                                  const std::vector<Realization>& rs,
                                                  double horizon) {
  CurveDistribution out;
  out.curves.reserve(rs.size());
  for (const Realization& r : rs)
    out.curves.push_back(WeightedCurve{r.weight, detail::realization_curve(s, r, horizon)});
  return out;
}

// Derandomization: the mixture of deterministic curves, one per coin-flip
// outcome, that reproduces the schedule's utilities and expected payments.
// Lotteries nobody ever buys are dropped first.  Slots that do not allocate
// in an outcome simply have no post on that curve.
inline CurveDistribution derandomize(const SingleLotterySchedule& schedule,
                                     const DerandomizeOptions& opts = {}) {
  ThresholdAnalysis full = thresholds(schedule);
  SingleLotterySchedule s = drop_removable(schedule, full);
  ThresholdAnalysis an = thresholds(s);
  double horizon = 0.0;
  for (const LotteryStep& step : schedule.steps) horizon = std::max(horizon, step.t);
  std::vector<Realization> rs = opts.exhaustive
                                    ? enumerate_realizations(s, an)
                                    : sample_realizations(s, an, opts.seed, opts.samples);
  return curves_from_realizations(s, rs, horizon);
}

inline double mixture_revenue(const CurveDistribution& cd, const ValueDistribution& d) {
  double total = 0.0;
  for (const WeightedCurve& wc : cd.curves) total += wc.weight * revenue(wc.curve, d);
  return total;
}

// Adaptive mechanisms in normal form: the buyer commits to one branch and a
// prefix of its options; option j is reached only if options 1..j-1 did not
// allocate.
struct AdaptiveOption {
  double t = 0.0;
  double x = 1.0;
  double p = 0.0;
};

struct AdaptiveBranch {
  std::vector<AdaptiveOption> options;
};

struct AdaptiveMechanism {
  std::vector<AdaptiveBranch> branches;
};

inline void validate_adaptive(const AdaptiveMechanism& mech) {
  for (const AdaptiveBranch& b : mech.branches) {
    double prev = 0.0;
    for (const AdaptiveOption& o : b.options) {
      if (!std::isfinite(o.t) || o.t < 0.0)
        throw std::invalid_argument("adaptive mechanism: times must be finite and nonnegative");
      if (o.t < prev)
        throw std::invalid_argument("adaptive mechanism: branch times must be nondecreasing");
      prev = o.t;
      if (!std::isfinite(o.x) || o.x < 0.0 || o.x > 1.0)
        throw std::invalid_argument("adaptive mechanism: probabilities must lie in [0, 1]");
      if (!std::isfinite(o.p) || o.p < 0.0)
        throw std::invalid_argument("adaptive mechanism: prices must be finite and nonnegative");
    }
  }
}

struct AdaptiveChoice {
  std::size_t branch = 0;
  std::size_t take = 0;  // prefix length; 0 means abstain
  double utility = 0.0;
  double payment = 0.0;  // expected payment of this buyer
};

struct AdaptiveReport {
  double revenue = 0.0;
  double welfare = 0.0;
  std::vector<AdaptiveChoice> choices;  // one per support value
};

// Buyer best response over (branch, prefix length), abstention included.
// Utility ties within tie_tol resolve toward the higher expected payment.
inline AdaptiveReport evaluate_adaptive(const AdaptiveMechanism& mech, const ValueDistribution& d,
                                        double tie_tol = 1e-9) {
  validate_adaptive(mech);
  AdaptiveReport report;
  for (std::size_t vi = 0; vi < d.size(); ++vi) {
    double v = d.values[vi];
    std::vector<AdaptiveChoice> cands;
    cands.push_back(AdaptiveChoice{0, 0, 0.0, 0.0});  // abstain
    for (std::size_t bi = 0; bi < mech.branches.size(); ++bi) {
      const AdaptiveBranch& b = mech.branches[bi];
      double reach = 1.0, u = 0.0, pay = 0.0;
      for (std::size_t j = 0; j < b.options.size(); ++j) {
        const AdaptiveOption& o = b.options[j];
        u += reach * o.x * std::exp(-o.t) * (v - o.p);
        pay += reach * o.x * o.p;
        reach *= 1.0 - o.x;
        cands.push_back(AdaptiveChoice{bi, j + 1, u, pay});
      }
    }
    double best_u = -std::numeric_limits<double>::infinity();
    for (const AdaptiveChoice& c : cands) best_u = std::max(best_u, c.utility);
    const AdaptiveChoice* pick = nullptr;
    for (const AdaptiveChoice& c : cands) {
      if (c.utility < best_u - tie_tol) continue;
      if (!pick || c.payment > pick->payment + tie_tol) pick = &c;
    }
    report.choices.push_back(*pick);
    report.revenue += d.masses[vi] * pick->payment;
    report.welfare += d.masses[vi] * v;
  }
  if (report.revenue > report.welfare + 1e-9 * std::max(1.0, report.welfare))
    throw NumericError("evaluate_adaptive: revenue exceeded welfare");
  return report;
}

struct GapInstance {
  ValueDistribution dist;
  AdaptiveMechanism mechanism;
  double horizon = 0.0;
};

// Family separating adaptive from posted-price revenue: near-equal-revenue
// values M^1..M^n with a point mass at zero absorbing the leftover
// probability.  Branch i screens value M^i with a cheap partial lottery at
// time zero, then collects 0.3 * M^i at the deadline.  Posted prices earn at
// most ln(n) + 1.1 here while the branches collect at least 0.3 * n.
inline GapInstance make_gap_instance(std::size_t n) {
  if (n < 2) throw std::invalid_argument("make_gap_instance: n must be at least 2");
  if (n > 8)
    throw std::invalid_argument("make_gap_instance: supports above n = 8 leave double range");
  const double M = 10.0 * static_cast<double>(n);
  GapInstance gi;
  gi.horizon = std::log(static_cast<double>(n));
  std::vector<double> values{0.0};
  std::vector<double> masses{0.0};
  double power = 1.0;
  double used = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    power *= M;
    values.push_back(power);
    masses.push_back(1.0 / power);
    used += 1.0 / power;
  }
  masses[0] = 1.0 - used;
  gi.dist = validate_distribution(values, masses);
  for (std::size_t i = 1; i <= n; ++i) {
    double xi = 0.5 * static_cast<double>(i) / static_cast<double>(n);
    AdaptiveBranch b;
    b.options.push_back(AdaptiveOption{0.0, xi, values[i] / M});
    b.options.push_back(AdaptiveOption{gi.horizon, 0.3 / (1.0 - xi), values[i]});
    gi.mechanism.branches.push_back(std::move(b));
  }
  return gi;
}

}  // namespace pricer
