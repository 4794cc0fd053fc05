// Command-line front end: solve instances, evaluate curves, derandomize
// lottery schedules, dump the uniform closed form, discretize continuous
// distributions, and demonstrate the adaptive revenue gap.
//
// Exit codes: 0 success, 2 invalid input, 3 numeric failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pricer/curve.hpp"
#include "pricer/distribution.hpp"
#include "pricer/errors.hpp"
#include "pricer/json_io.hpp"
#include "pricer/lottery.hpp"
#include "pricer/solver.hpp"

namespace {

// Accepts plain numbers and the shorthand ln<k> (e.g. "ln2" for log 2),
// which keeps logarithmic horizons exact on the command line.
double parse_time_limit(const std::string& raw) {
  std::string s = raw;
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  double value;
  try {
    if (s.rfind("ln", 0) == 0) {
      std::size_t used = 0;
      double arg = std::stod(s.substr(2), &used);
      if (used != s.size() - 2 || !(arg > 0.0))
        throw std::invalid_argument("bad ln argument");
      value = std::log(arg);
    } else {
      std::size_t used = 0;
      value = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse time limit: " + raw);
  }
  if (!std::isfinite(value) || value < 0.0)
    throw std::invalid_argument("time limit must be finite and nonnegative");
  return value;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text << "\n";
  else
    pricer::write_text_file(out_path, text + "\n");
}

pricer::ValueDistribution load_instance(const std::string& path, std::size_t k) {
  nlohmann::json j = pricer::read_json_file(path);
  if (pricer::is_family_json(j)) {
    // Family inputs are discretized on the quantile grid; the upper variant
    // keeps the top of the support and only over-states revenue by O(1/k).
    return pricer::discretize(pricer::parse_family(j), k).upper;
  }
  return pricer::parse_distribution(j);
}

int cmd_solve(const std::string& dist_path, const std::string& t_raw, bool use_enum,
              bool with_oracle, double delta, std::size_t k, const std::string& out_path) {
  pricer::ValueDistribution d = load_instance(dist_path, k);
  double T = parse_time_limit(t_raw);
  std::vector<std::pair<std::string, std::string>> extras;
  pricer::OptimalSolution sol;
  if (use_enum) {
    pricer::EnumResult er = pricer::solve_enum(d, T);
    sol = std::move(er.best);
    std::string table = "[";
    for (std::size_t i = 0; i < er.table.size(); ++i) {
      if (i) table += ",";
      table += pricer::enum_row_to_json(er.table[i], d);
    }
    extras.emplace_back("table", table + "]");
  } else {
    sol = pricer::solve_optimal(d, T);
  }
  if (with_oracle) {
    double bound = pricer::brute_force_reference(d, T, delta);
    extras.emplace_back("oracle", "{\"delta\":" + pricer::json_number(delta) +
                                      ",\"revenue\":" + pricer::json_number(bound) + "}");
  }
  emit(pricer::solution_to_json(sol, d, std::move(extras)), out_path);
  return 0;
}

int cmd_eval(const std::string& curve_path, const std::string& dist_path,
             const std::string& out_path) {
  pricer::PricingCurve curve = pricer::parse_curve(pricer::read_json_file(curve_path));
  pricer::ValueDistribution d = pricer::parse_distribution(pricer::read_json_file(dist_path));
  double rev = 0.0;
  std::string decisions = "[";
  for (std::size_t i = 0; i < d.size(); ++i) {
    pricer::PurchaseDecision dec = pricer::best_response(curve, d.values[i]);
    if (i) decisions += ",";
    decisions += "{\"buys\":";
    decisions += dec.choice ? "true" : "false";
    if (dec.choice) {
      const pricer::PricePost& post = curve.posts[*dec.choice];
      rev += d.masses[i] * post.price;
      decisions += ",\"p\":" + pricer::json_number(post.price) +
                   ",\"t\":" + pricer::json_number(post.time);
    }
    decisions += ",\"utility\":" + pricer::json_number(dec.utility) +
                 ",\"v\":" + pricer::json_number(d.values[i]) + "}";
  }
  decisions += "]";
  emit(pricer::json_object({{"decisions", decisions}, {"revenue", pricer::json_number(rev)}}),
       out_path);
  return 0;
}

int cmd_derandomize(const std::string& mech_path, std::uint64_t seed, std::size_t samples,
                    const std::string& out_path) {
  pricer::MenuSchedule ms = pricer::parse_menu_schedule(pricer::read_json_file(mech_path));
  pricer::SingleLotterySchedule full = pricer::reduce_to_single(ms);
  pricer::ThresholdAnalysis full_an = pricer::thresholds(full);
  pricer::SingleLotterySchedule s = pricer::drop_removable(full, full_an);
  pricer::ThresholdAnalysis an = pricer::thresholds(s);
  double horizon = 0.0;
  for (const pricer::LotteryStep& step : full.steps) horizon = std::max(horizon, step.t);
  const bool exhaustive = s.steps.size() <= 20;
  std::vector<pricer::Realization> rs =
      exhaustive ? pricer::enumerate_realizations(s, an)
                 : pricer::sample_realizations(s, an, seed, samples);
  pricer::CurveDistribution cd = pricer::curves_from_realizations(s, rs, horizon);

  std::vector<std::pair<std::string, std::string>> members;
  members.emplace_back("curves", pricer::to_json(cd));
  members.emplace_back("mode", exhaustive ? "\"exhaustive\"" : "\"monte-carlo\"");
  members.emplace_back("thresholds", pricer::json_array(an.thresholds));
  std::string times = "[";
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    if (i) times += ",";
    times += pricer::json_number(s.steps[i].t);
  }
  members.emplace_back("times", times + "]");
  if (!exhaustive) {
    // Conditional price statistics per lottery across the sampled outcomes.
    std::string stats = "[";
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      std::size_t count = 0;
      double sum = 0.0, sumsq = 0.0;
      for (const pricer::Realization& r : rs) {
        if (!r.taken[i]) continue;
        ++count;
        sum += r.prices[i];
        sumsq += r.prices[i] * r.prices[i];
      }
      double mean = count ? sum / static_cast<double>(count) : 0.0;
      double se = 0.0;
      if (count > 1) {
        double var = (sumsq - sum * mean) / static_cast<double>(count - 1);
        se = std::sqrt(std::max(0.0, var) / static_cast<double>(count));
      }
      if (i) stats += ",";
      stats += "{\"mean\":" + pricer::json_number(mean) +
               ",\"samples\":" + std::to_string(count) +
               ",\"stderr\":" + pricer::json_number(se) + "}";
    }
    members.emplace_back("price_stats", stats + "]");
    members.emplace_back("seed", std::to_string(seed));
  }
  emit(pricer::json_object(std::move(members)), out_path);
  return 0;
}

int cmd_uniform(const std::string& t_raw, std::size_t samples, const std::string& pv_path,
                const std::string& pt_path) {
  double T = parse_time_limit(t_raw);
  if (samples == 0) throw std::invalid_argument("samples must be positive");
  pricer::UniformOptimum u = pricer::uniform_closed_form(T);
  std::string pv = "v,price\n";
  for (std::size_t i = 0; i <= samples; ++i) {
    double v = static_cast<double>(i) / static_cast<double>(samples);
    auto p = u.price_at_value(v);
    pv += pricer::json_number(v);
    pv += ",";
    if (p) pv += pricer::json_number(*p);
    pv += "\n";
  }
  pricer::write_text_file(pv_path, pv);
  std::string pt = "t,price\n";
  for (std::size_t i = 0; i <= samples; ++i) {
    double t = T * static_cast<double>(i) / static_cast<double>(samples);
    pt += pricer::json_number(t) + "," + pricer::json_number(u.price_at_time(t)) + "\n";
  }
  pricer::write_text_file(pt_path, pt);
  std::cout << pricer::json_object({{"pt_csv", "\"" + pt_path + "\""},
                                    {"pv_csv", "\"" + pv_path + "\""},
                                    {"revenue", pricer::json_number(u.revenue)},
                                    {"top_price", pricer::json_number(u.top_price)},
                                    {"x", pricer::json_number(u.x)},
                                    {"y", pricer::json_number(u.y)},
                                    {"z", pricer::json_number(u.z)}})
            << "\n";
  return 0;
}

int cmd_discretize(const std::string& input_path, std::size_t k, const std::string& prefix) {
  nlohmann::json j = pricer::read_json_file(input_path);
  pricer::QuantileOracle oracle = pricer::is_family_json(j)
                                      ? pricer::parse_family(j)
                                      : pricer::make_discrete_oracle(pricer::parse_distribution(j));
  pricer::DiscretizationPair pair = pricer::discretize(oracle, k);
  std::string lower_path = prefix + ".lower.json";
  std::string upper_path = prefix + ".upper.json";
  pricer::write_text_file(lower_path, pricer::to_json(pair.lower) + "\n");
  pricer::write_text_file(upper_path, pricer::to_json(pair.upper) + "\n");
  std::cout << pricer::json_object({{"k", std::to_string(pair.k)},
                                    {"lower", "\"" + lower_path + "\""},
                                    {"max_value", pricer::json_number(pair.max_value)},
                                    {"upper", "\"" + upper_path + "\""}})
            << "\n";
  return 0;
}

int cmd_gap(std::size_t n) {
  pricer::GapInstance gi = pricer::make_gap_instance(n);
  pricer::OptimalSolution sol = pricer::solve_optimal(gi.dist, gi.horizon);
  pricer::AdaptiveReport rep = pricer::evaluate_adaptive(gi.mechanism, gi.dist);
  double nd = static_cast<double>(n);
  std::cout << pricer::json_object(
                   {{"adaptive_bound", pricer::json_number(0.3 * nd)},
                    {"adaptive_revenue", pricer::json_number(rep.revenue)},
                    {"horizon", pricer::json_number(gi.horizon)},
                    {"instance", pricer::to_json(gi.dist)},
                    {"mechanism", pricer::to_json(gi.mechanism)},
                    {"n", std::to_string(n)},
                    {"pricing_bound", pricer::json_number(std::log(nd) + 1.1)},
                    {"pricing_revenue", pricer::json_number(sol.revenue)}})
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal pricing curves for a buyer with a deadline"};
  app.require_subcommand(1);

  std::string dist_path, curve_path, mech_path, t_raw, out_path, prefix;
  std::string pv_path = "uniform_price_value.csv";
  std::string pt_path = "uniform_price_time.csv";
  bool use_enum = false;
  double delta = 0.0;
  std::size_t k = 2000, samples = 10000, uniform_samples = 200, gap_n = 2;
  std::uint64_t seed = 0;

  CLI::App* solve = app.add_subcommand("solve", "Compute the optimal pricing curve");
  solve->add_option("dist", dist_path, "Instance JSON (distribution or family)")->required();
  solve->add_option("--time-limit", t_raw, "Horizon T (number or ln<k>)")->required();
  solve->add_flag("--enum", use_enum, "Use grouping enumeration and report the full table");
  CLI::Option* oracle_opt =
      solve->add_option("--oracle", delta, "Also run the grid oracle with this resolution");
  solve->add_option("--k", k, "Discretization size for family inputs")->capture_default_str();
  solve->add_option("-o,--output", out_path, "Write JSON here instead of stdout");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a pricing curve on a distribution");
  eval->add_option("curve", curve_path, "Curve JSON")->required();
  eval->add_option("dist", dist_path, "Distribution JSON")->required();
  eval->add_option("-o,--output", out_path, "Write JSON here instead of stdout");

  CLI::App* der = app.add_subcommand("derandomize", "Turn a lottery-menu schedule into curves");
  der->add_option("mechanism", mech_path, "Menu schedule JSON")->required();
  der->add_option("--seed", seed, "Monte Carlo seed")->envname("PRICER_SEED");
  der->add_option("--samples", samples, "Monte Carlo sample count")->capture_default_str();
  der->add_option("-o,--output", out_path, "Write JSON here instead of stdout");

  CLI::App* uni = app.add_subcommand("uniform", "Closed form for values uniform on [0,1]");
  uni->add_option("--time-limit", t_raw, "Horizon T (number or ln<k>)")->required();
  uni->add_option("--samples", uniform_samples, "CSV sample count")->capture_default_str();
  uni->add_option("--pv-out", pv_path, "Price-by-value CSV path")->capture_default_str();
  uni->add_option("--pt-out", pt_path, "Price-by-time CSV path")->capture_default_str();

  CLI::App* disc = app.add_subcommand("discretize", "Quantile-discretize a distribution");
  disc->add_option("input", dist_path, "Family or distribution JSON")->required();
  disc->add_option("--k", k, "Number of quantile buckets")->required();
  disc->add_option("-o,--output", prefix, "Output prefix (.lower.json/.upper.json)")->required();

  CLI::App* gap = app.add_subcommand("gap", "Adaptive-vs-pricing revenue gap demo");
  gap->add_option("--n", gap_n, "Instance size")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(solve))
      return cmd_solve(dist_path, t_raw, use_enum, static_cast<bool>(*oracle_opt), delta, k,
                       out_path);
    if (app.got_subcommand(eval)) return cmd_eval(curve_path, dist_path, out_path);
    if (app.got_subcommand(der)) return cmd_derandomize(mech_path, seed, samples, out_path);
    if (app.got_subcommand(uni)) return cmd_uniform(t_raw, uniform_samples, pv_path, pt_path);
    if (app.got_subcommand(disc)) return cmd_discretize(dist_path, k, prefix);
    if (app.got_subcommand(gap)) return cmd_gap(gap_n);
  } catch (const pricer::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
