#pragma once

// Optimal declining price curves against a deadline.
//
// Values are served in contiguous groups sharing one price.  For a fixed
// grouping the prices follow in closed form from a single multiplier c > 0;
// the time budget spent by a grouping is its "span", which is strictly
// increasing in c.  The fast solver grows groups along a merge chain (each
// merge happens at the multiplier where two neighboring group prices cross)
// and then solves span(c) = T on the final grouping.  An exhaustive variant
// enumerates every contiguous grouping for small supports, and a grid oracle
// provides an independent reference for tiny instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pricer/curve.hpp"
#include "pricer/distribution.hpp"
#include "pricer/errors.hpp"

namespace pricer {

struct SolverConfig {
  double root_tol = 1e-12;       // relative tolerance for multiplier root finding
  int max_iter = 200;
  double bracket_lo = 1e-12;     // seed bracket for standalone root finds
  double bracket_hi = 1e12;
  double bracket_factor = 10.0;  // geometric expansion factor
  double mono_slack = 1e-9;      // tolerance when checking price monotonicity
  std::size_t enum_cap = 12;     // largest support solve_enum will accept
};

// Contiguous grouping of support indices.  rep[i] is the lowest index of i's
// group, so rep[0] == 0 and rep[i] is either i or rep[i-1].
struct Grouping {
  std::vector<std::size_t> rep;

  static Grouping identity(std::size_t n) {
    Grouping g;
    g.rep.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.rep[i] = i;
    return g;
  }
  static Grouping all_one(std::size_t n) {
    Grouping g;
    g.rep.assign(n, 0);
    return g;
  }
  static Grouping from_reps(std::vector<std::size_t> rep) {
    if (rep.empty() || rep[0] != 0)
      throw std::invalid_argument("grouping: first group must start at index 0");
    for (std::size_t i = 1; i < rep.size(); ++i) {
      if (rep[i] != i && rep[i] != rep[i - 1])
        throw std::invalid_argument("grouping: groups must be contiguous");
    }
    Grouping g;
    g.rep = std::move(rep);
    return g;
  }

  std::size_t size() const { return rep.size(); }
  std::size_t groups() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < rep.size(); ++i)
      if (rep[i] == i) ++count;
    return count;
  }
  std::vector<std::size_t> representatives() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rep.size(); ++i)
      if (rep[i] == i) out.push_back(i);
    return out;
  }
};

namespace detail {

// Grouping resolved against a suffix: representative values and group masses.
struct GroupView {
  std::vector<std::size_t> reps;
  std::vector<double> value;
  std::vector<double> mass;

  std::size_t groups() const { return reps.size(); }
};

inline GroupView make_view(const Grouping& g, const SupportSuffix& sfx) {
  if (g.size() != sfx.size()) throw std::invalid_argument("grouping does not match suffix");
  GroupView view;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.rep[i] == i) {
      view.reps.push_back(i);
      view.value.push_back(sfx.values[i]);
      view.mass.push_back(sfx.masses[i]);
    } else {
      view.mass.back() += sfx.masses[i];
    }
  }
  return view;
}

struct PriceGap {
  double price = 0.0;
  double gap = 0.0;  // rep value minus price, kept separately for accuracy
};

// Group price for multiplier c.  The first group is pinned at the lowest
// value; the last group solves mass = 1/(c * gap); a middle group solves
// mass = (1/c) * (1/gap - 1/(step + gap)) with step to the next group.
inline PriceGap price_gap(const GroupView& view, std::size_t j, double c) {
  if (j == 0) return PriceGap{view.value[0], 0.0};
  if (j + 1 == view.groups()) {
    double gap = 1.0 / (c * view.mass[j]);
    return PriceGap{view.value[j] - gap, gap};
  }
  double step = view.value[j + 1] - view.value[j];
  double s = 4.0 * step / (c * view.mass[j]);
  double gap = 0.5 * s / (std::sqrt(step * step + s) + step);
  return PriceGap{view.value[j] - gap, gap};
}

// d price / d c at the current price; zero for the pinned first group.
inline double price_slope(const GroupView& view, std::size_t j, double c, const PriceGap& pg) {
  if (j == 0) return 0.0;
  if (j + 1 == view.groups()) return pg.gap / c;
  double step = view.value[j + 1] - view.value[j];
  return pg.gap * (step + pg.gap) / (c * (step + 2.0 * pg.gap));
}

struct SpanEval {
  double span = 0.0;
  double dspan = 0.0;  // derivative in c; filled only when requested
};

inline SpanEval span_eval(const GroupView& view, double c, bool with_derivative) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("span: multiplier must be positive and finite");
  SpanEval out;
  PriceGap prev = price_gap(view, 0, c);
  double prev_slope = 0.0;
  for (std::size_t j = 1; j < view.groups(); ++j) {
    PriceGap cur = price_gap(view, j, c);
    double num = view.value[j] - prev.price;
    if (!(cur.gap > 0.0) || !(num > 0.0)) {
      out.span = std::numeric_limits<double>::infinity();
      out.dspan = std::numeric_limits<double>::infinity();
      return out;
    }
    out.span += std::log(num / cur.gap);
    if (with_derivative) {
      double cur_slope = price_slope(view, j, c, cur);
      out.dspan += cur_slope / cur.gap - prev_slope / num;
      prev_slope = cur_slope;
    }
    prev = cur;
  }
  return out;
}

// Multiplier at which group k's price meets its successor's, or 0 when the
// two price paths never cross.  Derived by intersecting the two first-order
// conditions, which meet at a single price pbar.
inline double c_star_core(bool k_first, double v_first, double vk, double mk, double vkn,
                          double mkn, bool kn_last, double vknn) {
  double pbar;
  if (k_first) {
    pbar = v_first;
  } else if (kn_last) {
    pbar = vk - mkn * (vkn - vk) / mk;
  } else {
    double a = mkn * (vkn - vk);
    double b = mk * (vknn - vkn);
    double denom = a - b;
    if (!(denom < 0.0)) return 0.0;  // equal or steeper successor: no crossing
    pbar = (a * vknn - b * vk) / denom;
  }
  double c;
  if (k_first) {
    c = kn_last ? 1.0 / (mkn * (vkn - pbar))
                : (1.0 / (vkn - pbar) - 1.0 / (vknn - pbar)) / mkn;
  } else {
    if (!(pbar < vk)) return 0.0;
    c = (1.0 / (vk - pbar) - 1.0 / (vkn - pbar)) / mk;
  }
  return (std::isfinite(c) && c > 0.0) ? c : 0.0;
}

inline double c_star_view(const GroupView& view, std::size_t j) {
  std::size_t last = view.groups() - 1;
  if (j >= last) return 0.0;
  bool kn_last = (j + 1 == last);
  return c_star_core(j == 0, view.value[0], view.value[j], view.mass[j], view.value[j + 1],
                     view.mass[j + 1], kn_last,
                     kn_last ? 0.0 : view.value[j + 2]);
}

}  // namespace detail

inline std::vector<double> group_prices(const Grouping& g, const SupportSuffix& sfx, double c) {
  detail::GroupView view = detail::make_view(g, sfx);
  std::vector<double> prices(view.groups());
  if (view.groups() == 1) {
    prices[0] = view.value[0];
    return prices;
  }
  for (std::size_t j = 0; j < view.groups(); ++j) prices[j] = detail::price_gap(view, j, c).price;
  return prices;
}

inline double span(const Grouping& g, const SupportSuffix& sfx, double c) {
  detail::GroupView view = detail::make_view(g, sfx);
  if (view.groups() == 1) return 0.0;
  return detail::span_eval(view, c, false).span;
}

// Span of explicitly given representative prices; +inf when a price reaches
// its representative's value.
inline double span_from_prices(const Grouping& g, const SupportSuffix& sfx,
                               const std::vector<double>& rep_prices) {
  detail::GroupView view = detail::make_view(g, sfx);
  if (rep_prices.size() != view.groups())
    throw std::invalid_argument("span_from_prices: one price per group required");
  double total = 0.0;
  for (std::size_t j = 1; j < view.groups(); ++j) {
    double num = view.value[j] - rep_prices[j - 1];
    double den = view.value[j] - rep_prices[j];
    if (!(den > 0.0) || !(num > 0.0)) return std::numeric_limits<double>::infinity();
    total += std::log(num / den);
  }
  return total;
}

struct GroupSolution {
  Grouping grouping;
  std::vector<double> rep_prices;
  double c = 0.0;  // 0 marks the single-group case, which needs no multiplier
  double span = 0.0;
  double revenue = 0.0;
  bool monotone = true;
};

namespace detail {

inline GroupSolution make_group_solution(Grouping g, const GroupView& view,
                                         const SupportSuffix& sfx, double c, double span_value,
                                         double mono_slack) {
  GroupSolution sol;
  sol.grouping = std::move(g);
  sol.c = c;
  sol.span = span_value;
  sol.rep_prices.resize(view.groups());
  if (view.groups() == 1) {
    sol.rep_prices[0] = view.value[0];
  } else {
    for (std::size_t j = 0; j < view.groups(); ++j)
      sol.rep_prices[j] = price_gap(view, j, c).price;
  }
  for (std::size_t j = 0; j < view.groups(); ++j) {
    std::size_t end = j + 1 < view.groups() ? view.reps[j + 1] : sfx.size();
    for (std::size_t i = view.reps[j]; i < end; ++i)
      sol.revenue += sfx.masses[i] * sol.rep_prices[j];
    if (j > 0 && sol.rep_prices[j] < sol.rep_prices[j - 1] - mono_slack) sol.monotone = false;
  }
  return sol;
}

// Root of span(c) = T inside [clo, chi].  Newton steps on ln c, falling back
// to the interval midpoint whenever a step would leave the bracket.
inline double span_root(const GroupView& view, double T, double clo, double chi,
                        const SolverConfig& cfg) {
  const double tol = cfg.root_tol * std::max(1.0, T);
  double flo = span_eval(view, clo, false).span - T;
  if (std::abs(flo) <= tol) return clo;
  double fhi = span_eval(view, chi, false).span - T;
  if (std::abs(fhi) <= tol) return chi;
  if (flo > 0.0 || fhi < 0.0)
    throw NumericError("span_root: bracket does not straddle the target");
  double ulo = std::log(clo), uhi = std::log(chi);
  double u = 0.5 * (ulo + uhi);
  for (int it = 0; it < cfg.max_iter; ++it) {
    double c = std::exp(u);
    SpanEval e = span_eval(view, c, true);
    double f = e.span - T;
    if (std::abs(f) <= tol) return c;
    if (f < 0.0)
      ulo = u;
    else
      uhi = u;
    if (uhi - ulo <= 4e-16 * std::max(1.0, std::abs(ulo)) + 4e-16) return std::exp(0.5 * (ulo + uhi));
    double un = u - f / (e.dspan * c);
    if (!std::isfinite(un) || !(un > ulo) || !(un < uhi)) un = 0.5 * (ulo + uhi);
    u = un;
  }
  double c = std::exp(0.5 * (ulo + uhi));
  if (std::abs(span_eval(view, c, false).span - T) <= 1e-6 * std::max(1.0, T)) return c;
  throw NumericError("span_root: did not converge");
}

}  // namespace detail

// Solves the fixed-grouping problem at exactly time budget T.  A single
// group needs no time and is returned as-is with price at the lowest value.
inline GroupSolution solve_c_for_span(const Grouping& g, const SupportSuffix& sfx, double T,
                                      const SolverConfig& cfg = {}) {
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("solve_c_for_span: T must be finite and nonnegative");
  detail::GroupView view = detail::make_view(g, sfx);
  if (view.groups() == 1)
    return detail::make_group_solution(g, view, sfx, 0.0, 0.0, cfg.mono_slack);
  double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
  int guard = 0;
  while (detail::span_eval(view, lo, false).span > T) {
    lo /= cfg.bracket_factor;
    if (!(lo > 0.0) || ++guard > 400) throw NumericError("solve_c_for_span: no lower bracket");
  }
  guard = 0;
  while (detail::span_eval(view, hi, false).span < T) {
    hi *= cfg.bracket_factor;
    if (!std::isfinite(hi) || ++guard > 400)
      throw NumericError("solve_c_for_span: no upper bracket");
  }
  double c = detail::span_root(view, T, lo, hi, cfg);
  return detail::make_group_solution(g, view, sfx, c, detail::span_eval(view, c, false).span,
                                     cfg.mono_slack);
}

// Smallest multiplier at which group k's price has caught up with its
// successor's; 0 when the ordering never binds.  k is the representative's
// suffix index.
inline double c_star(const Grouping& g, const SupportSuffix& sfx, std::size_t k,
                     const SolverConfig& cfg = {});

// Sign-change bracketing variant of c_star, retained as an independent
// route: it scans for the first multiplier where successor minus own price
// turns nonnegative.
inline double c_star_bisect(const Grouping& g, const SupportSuffix& sfx, std::size_t k,
                            const SolverConfig& cfg = {}) {
  detail::GroupView view = detail::make_view(g, sfx);
  auto pos = std::find(view.reps.begin(), view.reps.end(), k);
  if (pos == view.reps.end()) throw std::invalid_argument("c_star: not a representative");
  std::size_t j = static_cast<std::size_t>(pos - view.reps.begin());
  if (j + 1 >= view.groups()) return 0.0;
  auto diff = [&](double c) {
    return detail::price_gap(view, j + 1, c).price - detail::price_gap(view, j, c).price;
  };
  double lo = cfg.bracket_lo;
  if (diff(lo) >= 0.0) return 0.0;
  double hi = cfg.bracket_hi;
  int guard = 0;
  while (diff(hi) < 0.0) {
    hi *= cfg.bracket_factor;
    if (!std::isfinite(hi) || ++guard > 400) throw NumericError("c_star: no upper bracket");
  }
  for (int it = 0; it < cfg.max_iter && hi - lo > cfg.root_tol * hi; ++it) {
    double mid = std::sqrt(lo * hi);
    if (diff(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

inline double c_star(const Grouping& g, const SupportSuffix& sfx, std::size_t k,
                     const SolverConfig& cfg) {
  detail::GroupView view = detail::make_view(g, sfx);
  auto pos = std::find(view.reps.begin(), view.reps.end(), k);
  if (pos == view.reps.end()) throw std::invalid_argument("c_star: not a representative");
  std::size_t j = static_cast<std::size_t>(pos - view.reps.begin());
  if (j + 1 >= view.groups()) return 0.0;
  double c = detail::c_star_view(view, j);
  if (c > 0.0) {
    double own = detail::price_gap(view, j, c).price;
    double next = detail::price_gap(view, j + 1, c).price;
    if (std::abs(next - own) > 1e-6 * std::max(1.0, std::abs(own)))
      return c_star_bisect(g, sfx, k, cfg);  // closed form rejected; fall back
  }
  return c;
}

// Smallest time budget at which the grouping's prices stay monotone, i.e.
// its span at the largest binding multiplier.
inline double t_star(const Grouping& g, const SupportSuffix& sfx, const SolverConfig& = {}) {
  detail::GroupView view = detail::make_view(g, sfx);
  if (view.groups() == 1) return 0.0;
  double cmax = 0.0;
  for (std::size_t j = 0; j + 1 < view.groups(); ++j)
    cmax = std::max(cmax, detail::c_star_view(view, j));
  if (!(cmax > 0.0)) return 0.0;
  return detail::span_eval(view, cmax, false).span;
}

namespace detail {

struct MergeEvent {
  std::size_t rep = 0;  // group merged with its successor
  double c = 0.0;       // multiplier where their prices crossed
};

// Full merge sequence of a suffix, from singleton groups down to one group,
// ordered by decreasing crossing multiplier.  Ties merge the smaller index
// first.  The sequence does not depend on the time budget; a budget only
// selects how far along it to stop.
inline std::vector<MergeEvent> simulate_chain(const SupportSuffix& sfx) {
  const std::size_t m = sfx.size();
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next(m), prev(m);
  std::vector<double> mass = sfx.masses;
  std::vector<std::uint32_t> stamp(m, 0);
  std::vector<char> alive(m, 1);
  std::size_t last = m - 1;
  for (std::size_t i = 0; i < m; ++i) {
    next[i] = i + 1 < m ? i + 1 : npos;
    prev[i] = i > 0 ? i - 1 : npos;
  }
  auto c_star_at = [&](std::size_t k) {
    std::size_t kn = next[k];
    bool kn_last = (kn == last);
    return c_star_core(k == 0, sfx.values[0], sfx.values[k], mass[k], sfx.values[kn], mass[kn],
                       kn_last, kn_last ? 0.0 : sfx.values[next[kn]]);
  };
  struct Entry {
    double c;
    std::size_t rep;
    std::uint32_t stamp;
    bool operator<(const Entry& o) const {
      if (c != o.c) return c < o.c;
      return rep > o.rep;  // equal multipliers: smaller index merges first
    }
  };
  std::priority_queue<Entry> heap;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    double c = c_star_at(k);
    if (c > 0.0) heap.push(Entry{c, k, 0});
  }
  std::vector<MergeEvent> events;
  events.reserve(m > 0 ? m - 1 : 0);
  while (!heap.empty()) {
    Entry e = heap.top();
    heap.pop();
    if (!alive[e.rep] || stamp[e.rep] != e.stamp || next[e.rep] == npos) continue;
    events.push_back(MergeEvent{e.rep, e.c});
    std::size_t kn = next[e.rep];
    alive[kn] = 0;
    mass[e.rep] += mass[kn];
    next[e.rep] = next[kn];
    if (next[kn] != npos)
      prev[next[kn]] = e.rep;
    else
      last = e.rep;
    ++stamp[e.rep];
    if (prev[e.rep] != npos) ++stamp[prev[e.rep]];
    for (std::size_t k : {e.rep, prev[e.rep]}) {
      if (k == npos || next[k] == npos) continue;
      double c = c_star_at(k);
      if (c > 0.0) heap.push(Entry{c, k, stamp[k]});
    }
  }
  return events;
}

// Grouping reached after applying the first `count` merges.
inline Grouping replay_chain(std::size_t m, const std::vector<MergeEvent>& events,
                             std::size_t count) {
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next(m), width(m, 1);
  for (std::size_t i = 0; i < m; ++i) next[i] = i + 1 < m ? i + 1 : npos;
  for (std::size_t e = 0; e < count; ++e) {
    std::size_t k = events[e].rep;
    std::size_t kn = next[k];
    width[k] += width[kn];
    next[k] = next[kn];
  }
  Grouping g;
  g.rep.resize(m);
  for (std::size_t k = 0; k != npos && k < m; k = next[k])
    for (std::size_t i = k; i < k + width[k]; ++i) g.rep[i] = k;
  return g;
}

}  // namespace detail

// Fast solve with everything at or above the given support index
// participating.  Grows groups along the merge chain until the grouping fits
// the budget, then solves span(c) = T exactly.
inline GroupSolution solve_given_vmin(const ValueDistribution& d, std::size_t first, double T,
                                      const SolverConfig& cfg = {}) {
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("solve_given_vmin: T must be finite and nonnegative");
  SupportSuffix sfx = suffix(d, first);
  const std::size_t m = sfx.size();
  if (m == 1) {
    Grouping g = Grouping::all_one(1);
    detail::GroupView view = detail::make_view(g, sfx);
    return detail::make_group_solution(std::move(g), view, sfx, 0.0, 0.0, cfg.mono_slack);
  }
  std::vector<detail::MergeEvent> events = detail::simulate_chain(sfx);
  const std::size_t E = events.size();
  const double inf = std::numeric_limits<double>::infinity();
  // Budget needed by the grouping after s merges: its span at the multiplier
  // of the next crossing.  Nonincreasing along the chain.
  auto budget_needed = [&](std::size_t s) {
    Grouping g = detail::replay_chain(m, events, s);
    if (s == E) return g.groups() == 1 ? 0.0 : -inf;
    detail::GroupView view = detail::make_view(g, sfx);
    return detail::span_eval(view, events[s].c, false).span;
  };
  std::size_t stop;
  if (budget_needed(0) <= T) {
    stop = 0;
  } else {
    std::size_t lo = 0, hi = E;  // budget_needed(lo) > T, budget_needed(hi) <= T
    while (hi - lo > 1) {
      std::size_t mid = lo + (hi - lo) / 2;
      if (budget_needed(mid) <= T)
        hi = mid;
      else
        lo = mid;
    }
    stop = hi;
  }
  for (int fix = 0; fix < 64 && stop > 0 && budget_needed(stop - 1) <= T; ++fix) --stop;
  for (int fix = 0; fix < 64 && stop < E && budget_needed(stop) > T; ++fix) ++stop;

  Grouping g = detail::replay_chain(m, events, stop);
  detail::GroupView view = detail::make_view(g, sfx);
  if (view.groups() == 1)
    return detail::make_group_solution(std::move(g), view, sfx, 0.0, 0.0, cfg.mono_slack);
  double clo, chi;
  int guard = 0;
  if (stop < E) {
    clo = events[stop].c;
  } else {
    clo = cfg.bracket_lo;
    while (detail::span_eval(view, clo, false).span > T) {
      clo /= cfg.bracket_factor;
      if (!(clo > 0.0) || ++guard > 400) throw NumericError("solve_given_vmin: no lower bracket");
    }
  }
  if (stop > 0) {
    chi = events[stop - 1].c;
  } else {
    chi = clo;
    guard = 0;
    while (detail::span_eval(view, chi, false).span < T) {
      chi *= cfg.bracket_factor;
      if (!std::isfinite(chi) || ++guard > 400)
        throw NumericError("solve_given_vmin: no upper bracket");
    }
  }
  double c = detail::span_root(view, T, clo, chi, cfg);
  return detail::make_group_solution(std::move(g), view, sfx,  c,
                                     detail::span_eval(view, c, false).span, cfg.mono_slack);
}

struct OptimalSolution {
  std::size_t v_min_index = 0;  // first participating support index
  Grouping grouping;            // over the participating suffix
  double c = 0.0;
  double span = 0.0;
  double revenue = 0.0;
  Assignment assignment;        // over the full support
  PricingCurve curve;
};

namespace detail {

inline std::vector<double> expand_prices(const Grouping& g, const std::vector<double>& rep_prices) {
  std::vector<double> out(g.size());
  std::size_t j = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.rep[i] == i) ++j;
    out[i] = rep_prices[j];
  }
  return out;
}

inline OptimalSolution finalize_solution(const ValueDistribution& d, std::size_t first,
                                         GroupSolution gs, double T) {
  SupportSuffix sfx = suffix(d, first);
  std::vector<double> prices = expand_prices(gs.grouping, gs.rep_prices);
  PriceTimes pt = times_from_prices(sfx.values, prices);
  OptimalSolution sol;
  sol.v_min_index = first;
  sol.c = gs.c;
  sol.span = gs.span;
  sol.revenue = gs.revenue;
  sol.assignment.horizon = T;
  sol.assignment.entries.assign(d.size(), std::nullopt);
  for (std::size_t i = 0; i < sfx.size(); ++i) {
    double t = pt.times[i];
    if (t > T) {
      if (t > T + 1e-9 * std::max(1.0, T))
        throw NumericError("solution time exceeds the horizon");
      t = T;
    }
    sol.assignment.entries[first + i] = PricePoint{prices[i], t};
  }
  sol.curve = curve_from_assignment(sol.assignment);
  sol.grouping = std::move(gs.grouping);
  return sol;
}

}  // namespace detail

// Best curve over all participation cutoffs.  Suffix welfare bounds revenue,
// so the scan stops once no remaining suffix can beat the incumbent.
inline OptimalSolution solve_optimal(const ValueDistribution& d, double T,
                                     const SolverConfig& cfg = {}) {
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("solve_optimal: T must be finite and nonnegative");
  double tail_welfare = welfare(d);
  bool have = false;
  std::size_t best_first = 0;
  GroupSolution best;
  for (std::size_t first = 0; first < d.size(); ++first) {
    if (have && tail_welfare <= best.revenue) break;
    GroupSolution gs = solve_given_vmin(d, first, T, cfg);
    if (!have || gs.revenue > best.revenue) {
      best = std::move(gs);
      best_first = first;
      have = true;
    }
    tail_welfare -= d.values[first] * d.masses[first];
  }
  return detail::finalize_solution(d, best_first, std::move(best), T);
}

struct EnumRow {
  std::size_t v_min_index = 0;
  std::vector<std::size_t> grouping;  // suffix-local representative array
  std::vector<double> prices;         // per participating value
  double revenue = 0.0;
  double span = 0.0;
  double c = 0.0;
  bool monotone = true;
};

struct EnumResult {
  OptimalSolution best;
  std::vector<EnumRow> table;
};

// Exhaustive reference: every participation cutoff times every contiguous
// grouping of the remaining values.  Rows with decreasing prices are kept in
// the table but excluded from the optimum.
inline EnumResult solve_enum(const ValueDistribution& d, double T, const SolverConfig& cfg = {}) {
  if (d.size() > cfg.enum_cap)
    throw std::invalid_argument("solve_enum: support too large for enumeration");
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("solve_enum: T must be finite and nonnegative");
  EnumResult result;
  bool have = false;
  std::size_t best_first = 0;
  GroupSolution best;
  for (std::size_t first = 0; first < d.size(); ++first) {
    SupportSuffix sfx = suffix(d, first);
    const std::size_t m = sfx.size();
    const std::uint64_t top = m >= 1 ? (std::uint64_t{1} << (m - 1)) : 1;
    for (std::uint64_t mask = top; mask-- > 0;) {
      Grouping g;
      g.rep.resize(m);
      g.rep[0] = 0;
      for (std::size_t i = 1; i < m; ++i)
        g.rep[i] = (mask >> (i - 1)) & 1 ? i : g.rep[i - 1];
      GroupSolution gs = solve_c_for_span(g, sfx, T, cfg);
      EnumRow row;
      row.v_min_index = first;
      row.grouping = gs.grouping.rep;
      row.prices = detail::expand_prices(gs.grouping, gs.rep_prices);
      row.revenue = gs.revenue;
      row.span = gs.span;
      row.c = gs.c;
      row.monotone = gs.monotone;
      result.table.push_back(std::move(row));
      if (gs.monotone && (!have || gs.revenue > best.revenue)) {
        best = std::move(gs);
        best_first = first;
        have = true;
      }
    }
  }
  result.best = detail::finalize_solution(d, best_first, std::move(best), T);
  return result;
}

// Independent reference for supports of at most three values: grid search
// over nondecreasing price vectors within the time budget.  Price candidates
// are multiples of delta plus each suffix's own lowest value (the bottom
// price sits exactly there in any optimum).
inline double brute_force_reference(const ValueDistribution& d, double T, double delta) {
  if (d.size() > 3) throw std::invalid_argument("brute_force_reference: support too large");
  if (!(delta > 0.0)) throw std::invalid_argument("brute_force_reference: delta must be positive");
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("brute_force_reference: T must be finite and nonnegative");
  if (d.values.back() / delta > 1e8)
    throw std::invalid_argument("brute_force_reference: delta too small for this support");
  const double eT = std::exp(-T);
  double best = 0.0;
  auto candidates = [&](double cap, double anchor) {
    std::vector<double> out;
    for (std::size_t j = 0;; ++j) {
      double p = static_cast<double>(j) * delta;
      if (p >= cap) break;
      out.push_back(p);
    }
    if (anchor <= cap) out.push_back(anchor);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  // Largest candidate in [lo, hi]; anchor is the suffix's bottom value.
  auto snap = [&](double lo, double hi, double anchor) {
    if (hi < lo - 1e-15) return -1.0;
    double p = std::floor(hi / delta) * delta;
    if (p > hi) p -= delta;
    double pick = p >= lo ? p : -1.0;
    if (anchor >= lo && anchor <= hi && anchor > pick) pick = anchor;
    return pick;
  };
  for (std::size_t first = 0; first < d.size(); ++first) {
    SupportSuffix s = suffix(d, first);
    const std::vector<double>& v = s.values;
    const std::vector<double>& f = s.masses;
    if (s.size() == 1) {
      best = std::max(best, v[0] * f[0]);
      continue;
    }
    std::vector<double> c1 = candidates(v[0], v[0]);  // multiples below v[0], plus v[0] itself
    if (s.size() == 2) {
      for (double p1 : c1) {
        double p2 = snap(p1, v[1] - (v[1] - p1) * eT, v[0]);
        if (p2 >= 0.0) best = std::max(best, f[0] * p1 + f[1] * p2);
      }
      continue;
    }
    std::vector<double> c2 = candidates(v[1], v[0]);
    for (double p1 : c1) {
      double K = eT * (v[1] - p1);
      auto it = std::lower_bound(c2.begin(), c2.end(), p1 - 1e-15);
      for (; it != c2.end(); ++it) {
        double p2 = *it;
        double d2 = v[1] - p2;
        if (d2 < K) break;  // first step already exceeds the budget
        double p3 = snap(p2, v[2] - (v[2] - p2) * (K / d2), v[0]);
        if (p3 >= 0.0) best = std::max(best, f[0] * p1 + f[1] * p2 + f[2] * p3);
      }
    }
  }
  return best;
}

// Closed form for the uniform distribution on [0, 1]: buyers below x never
// buy, [x, y) pay x at the deadline, [y, z) pay v - (y - x) along a slope-one
// segment, and [z, 1] pay the top price at time zero.
struct UniformOptimum {
  double T = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double top_price = 0.0;
  double revenue = 0.0;

  std::optional<double> price_at_value(double v) const {
    if (v < x) return std::nullopt;
    if (v < y) return x;
    if (v < z) return v - (y - x);
    return top_price;
  }
  double price_at_time(double t) const {
    if (t < -1e-12 || t > T + 1e-12)
      throw std::invalid_argument("price_at_time: outside [0, T]");
    return top_price - (y - x) * t;
  }
};

inline UniformOptimum uniform_closed_form(double T) {
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("uniform_closed_form: T must be finite and nonnegative");
  UniformOptimum u;
  u.T = T;
  u.x = 2.0 / (T + 4.0);
  u.y = 3.0 / (T + 4.0);
  u.z = (T + 3.0) / (T + 4.0);
  u.top_price = (T + 2.0) / (T + 4.0);
  u.revenue = (T + 2.0) / (2.0 * T + 8.0);
  return u;
}

}  // namespace pricer
