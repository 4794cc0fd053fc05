#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pricer/errors.hpp"
#include "pricer/lottery.hpp"
#include "support/random_instances.hpp"

using namespace pricer;

namespace {
const double ln2 = std::log(2.0);

// Three half-chance lotteries with doubling discounts and prices 13, 7, 4.
SingleLotterySchedule reference_schedule() {
  SingleLotterySchedule s;
  s.steps = {LotteryStep{0.0, 0.5, 13.0}, LotteryStep{ln2, 0.5, 7.0},
             LotteryStep{2.0 * ln2, 0.5, 4.0}};
  return s;
}

ValueDistribution powers_of_two() {
  return validate_distribution({4, 8, 16}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

const Realization* find_taken(const std::vector<Realization>& rs, std::vector<char> taken) {
  for (const Realization& r : rs)
    if (r.taken == taken) return &r;
  return nullptr;
}

// The worked adaptive mechanism for {100, 101, 102}: a posted price now, a
// discounted lottery-then-price branch, and a plain deadline price.
AdaptiveMechanism worked_adaptive() {
  AdaptiveMechanism mech;
  mech.branches.resize(3);
  mech.branches[0].options = {AdaptiveOption{0.0, 1.0, 101.25}};
  mech.branches[1].options = {AdaptiveOption{std::log(4.0 / 3.0), 0.5, 301.0 / 3.0},
                              AdaptiveOption{2.0 * ln2, 1.0, 101.0}};
  mech.branches[2].options = {AdaptiveOption{2.0 * ln2, 1.0, 100.0}};
  return mech;
}
}  // namespace

TEST_CASE("schedule validation") {
  SingleLotterySchedule s = reference_schedule();
  CHECK_NOTHROW(validate_single_schedule(s));
  s.steps[1].t = -1.0;
  CHECK_THROWS_AS(validate_single_schedule(s), std::invalid_argument);
  s = reference_schedule();
  s.steps[2].t = 0.5;  // goes backward in time
  CHECK_THROWS_AS(validate_single_schedule(s), std::invalid_argument);
  s = reference_schedule();
  s.steps[0].x = 0.0;
  CHECK_THROWS_AS(validate_single_schedule(s), std::invalid_argument);
  s = reference_schedule();
  s.steps[0].x = 1.5;
  CHECK_THROWS_AS(validate_single_schedule(s), std::invalid_argument);
  s = reference_schedule();
  s.steps[0].p = -1.0;
  CHECK_THROWS_AS(validate_single_schedule(s), std::invalid_argument);

  MenuSchedule ms;
  ms.menus = {TimedMenu{1.0, {MenuOption{0.5, 2.0}}}, TimedMenu{0.5, {MenuOption{0.5, 2.0}}}};
  CHECK_THROWS_AS(validate_menu_schedule(ms), std::invalid_argument);
}

TEST_CASE("menu reduction reproduces the worked two-option menu") {
  MenuSchedule ms;
  ms.menus = {TimedMenu{0.25, {MenuOption{1.0, 10.0}, MenuOption{0.5, 6.0}}}};
  SingleLotterySchedule s = reduce_to_single(ms);
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[0].t == 0.25);
  CHECK(s.steps[0].x == Catch::Approx(1.0));
  CHECK(s.steps[0].p == Catch::Approx(10.0));
  CHECK(s.steps[1].x == Catch::Approx(0.5));
  CHECK(s.steps[1].p == Catch::Approx(6.0));
}

TEST_CASE("menu reduction drops dominated and non-hull options") {
  MenuSchedule ms;
  // (0.5, 8) is dominated by (0.5, 6); (0.75, 9) lies above the hull of
  // (0.5, 6) and (1, 10): 0.75 * 9 = 6.75 > 6.5, the chord value.
  ms.menus = {TimedMenu{0.0,
                        {MenuOption{1.0, 10.0}, MenuOption{0.5, 8.0}, MenuOption{0.5, 6.0},
                         MenuOption{0.75, 9.0}}}};
  SingleLotterySchedule s = reduce_to_single(ms);
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[0].p == Catch::Approx(10.0));
  CHECK(s.steps[1].p == Catch::Approx(6.0));
}

TEST_CASE("menu reduction preserves buyer utility") {
  std::mt19937_64 rng(1481);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    MenuSchedule ms;
    double t = 0.0;
    std::uniform_int_distribution<std::size_t> menus(1, 3), options(1, 4);
    std::size_t nm = menus(rng);
    for (std::size_t i = 0; i < nm; ++i) {
      TimedMenu menu;
      menu.t = t;
      std::size_t no = options(rng);
      for (std::size_t j = 0; j < no; ++j)
        menu.options.push_back(MenuOption{0.05 + 0.95 * unit(rng), 20.0 * unit(rng)});
      ms.menus.push_back(std::move(menu));
      t += unit(rng);
    }
    SingleLotterySchedule s = reduce_to_single(ms);
    for (int probe = 0; probe < 30; ++probe) {
      double v = 25.0 * unit(rng);
      CHECK(schedule_utility(s, v) == Catch::Approx(menu_utility(ms, v)).margin(1e-9));
    }
  }
}

TEST_CASE("thresholds of the reference schedule are exact") {
  ThresholdAnalysis an = thresholds(reference_schedule());
  REQUIRE(an.thresholds.size() == 3);
  CHECK(an.thresholds[0] == 16.0);
  CHECK(an.thresholds[1] == 8.0);
  CHECK(an.thresholds[2] == 4.0);
  CHECK(an.removable == std::vector<char>{0, 0, 0});
}

TEST_CASE("threshold continuation agrees with the direct recursion") {
  std::mt19937_64 rng(90125);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    SingleLotterySchedule s;
    double t = 0.0;
    std::uniform_int_distribution<std::size_t> count(1, 6);
    std::size_t k = count(rng);
    for (std::size_t i = 0; i < k; ++i) {
      s.steps.push_back(LotteryStep{t, 0.05 + 0.95 * unit(rng), 15.0 * unit(rng)});
      t += unit(rng);
    }
    ThresholdAnalysis an = thresholds(s);
    for (int probe = 0; probe < 25; ++probe) {
      double v = 20.0 * unit(rng);
      CHECK(an.continuation[0].eval(v) == Catch::Approx(schedule_utility(s, v)).margin(1e-9));
    }
    // Single crossing: above the threshold the lottery beats its continuation;
    // at or below it does not (strictly below, up to the solve tolerance).
    for (std::size_t i = 0; i < k; ++i) {
      double ell = an.thresholds[i];
      if (std::isinf(ell)) continue;
      double disc = std::exp(-s.steps[i].t);
      for (double v : {ell + 0.25, ell + 2.0})
        CHECK(disc * (v - s.steps[i].p) >= an.continuation[i + 1].eval(v) - 1e-9);
      for (double v : {ell - 0.25, ell - 2.0})
        CHECK(disc * (v - s.steps[i].p) <= an.continuation[i + 1].eval(v) + 1e-9);
    }
  }
}

TEST_CASE("expected payments and revenue of the reference schedule") {
  SingleLotterySchedule s = reference_schedule();
  ThresholdAnalysis an = thresholds(s);
  CHECK(expected_payment_single(s, an.thresholds, 16.0) == Catch::Approx(8.75).epsilon(1e-12));
  CHECK(expected_payment_single(s, an.thresholds, 8.0) == Catch::Approx(4.5).epsilon(1e-12));
  CHECK(expected_payment_single(s, an.thresholds, 4.0) == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(expected_payment_single(s, an.thresholds, 3.0) == 0.0);
  CHECK(revenue_single(s, powers_of_two()) == Catch::Approx(15.25 / 3.0).epsilon(1e-12));

  SingleLotterySchedule pricey;
  pricey.steps = {LotteryStep{0.0, 0.5, 100.0}};
  CHECK(revenue_single(pricey, powers_of_two()) == 0.0);
}

TEST_CASE("deterministic schedule equals its pricing curve") {
  SingleLotterySchedule s;
  s.steps = {LotteryStep{0.0, 1.0, 7.5}, LotteryStep{ln2, 1.0, 3.0}};
  ValueDistribution d = validate_distribution({3, 4, 12}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  PricingCurve curve = make_curve({PricePost{0.0, 7.5}, PricePost{ln2, 3.0}}, ln2);
  CHECK(revenue_single(s, d) == Catch::Approx(revenue(curve, d)).epsilon(1e-12));

  CurveDistribution cd = derandomize(s);
  REQUIRE(cd.curves.size() == 1);
  CHECK(cd.curves[0].weight == Catch::Approx(1.0));
  REQUIRE(cd.curves[0].curve.posts.size() == 2);
  CHECK(cd.curves[0].curve.posts[0].price == Catch::Approx(7.5));
  CHECK(cd.curves[0].curve.posts[1].price == Catch::Approx(3.0));
}

TEST_CASE("derandomization reproduces the eight reference curves") {
  SingleLotterySchedule s = reference_schedule();
  CurveDistribution cd = derandomize(s);
  REQUIRE(cd.curves.size() == 8);
  for (const WeightedCurve& wc : cd.curves) CHECK(wc.weight == Catch::Approx(0.125));

  ThresholdAnalysis an = thresholds(s);
  std::vector<Realization> rs = enumerate_realizations(s, an);
  REQUIRE(rs.size() == 8);

  struct Expect {
    std::vector<char> taken;
    std::vector<double> prices;  // only taken slots are read
  };
  const std::vector<Expect> table = {
      {{1, 1, 1}, {11, 6, 4}},   {{1, 1, 0}, {12, 8, 0}},  {{1, 0, 1}, {13, 0, 4}},
      {{1, 0, 0}, {16, 0, 0}},   {{0, 1, 1}, {0, 6, 4}},   {{0, 1, 0}, {0, 8, 0}},
      {{0, 0, 1}, {0, 0, 4}},    {{0, 0, 0}, {0, 0, 0}}};
  for (const Expect& e : table) {
    const Realization* r = find_taken(rs, e.taken);
    REQUIRE(r);
    CHECK(r->weight == Catch::Approx(0.125));
    for (std::size_t i = 0; i < 3; ++i)
      if (e.taken[i]) CHECK(r->prices[i] == Catch::Approx(e.prices[i]).epsilon(1e-12));
  }

  // Slot-wise price fidelity: conditioned on allocating, the deterministic
  // price averages back to the lottery price.
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0.0, mass = 0.0;
    for (const Realization& r : rs)
      if (r.taken[i]) {
        sum += r.weight * r.prices[i];
        mass += r.weight;
      }
    CHECK(sum / mass == Catch::Approx(s.steps[i].p).epsilon(1e-12));
  }

  CHECK(mixture_revenue(cd, powers_of_two()) ==
        Catch::Approx(revenue_single(s, powers_of_two())).margin(1e-9));
  CHECK(mixture_revenue(cd, powers_of_two()) == Catch::Approx(15.25 / 3.0).margin(1e-9));
}

TEST_CASE("derandomized mixture preserves buyer utility everywhere") {
  SingleLotterySchedule s = reference_schedule();
  CurveDistribution cd = derandomize(s);
  for (double v : {0.0, 2.0, 3.9, 4.0, 5.0, 7.9, 8.0, 10.0, 12.0, 15.9, 16.0, 18.0, 25.0}) {
    double mixed = 0.0;
    for (const WeightedCurve& wc : cd.curves) mixed += wc.weight * best_response(wc.curve, v).utility;
    CHECK(mixed == Catch::Approx(schedule_utility(s, v)).margin(1e-9));
  }
}

TEST_CASE("derandomization fidelity holds on random schedules") {
  std::mt19937_64 rng(777001);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    SingleLotterySchedule s;
    double t = 0.0;
    std::uniform_int_distribution<std::size_t> count(1, 6);
    std::size_t k = count(rng);
    for (std::size_t i = 0; i < k; ++i) {
      s.steps.push_back(LotteryStep{t, 0.1 + 0.8 * unit(rng), 10.0 * unit(rng)});
      t += unit(rng);
    }
    CurveDistribution cd = derandomize(s);
    double total = 0.0;
    for (const WeightedCurve& wc : cd.curves) total += wc.weight;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));

    ValueDistribution d = testsupport::random_distribution(rng, 3, 1.0, 12.0);
    CHECK(mixture_revenue(cd, d) == Catch::Approx(revenue_single(s, d)).margin(1e-9));
    for (int probe = 0; probe < 10; ++probe) {
      double v = 15.0 * unit(rng);
      double mixed = 0.0;
      for (const WeightedCurve& wc : cd.curves)
        mixed += wc.weight * best_response(wc.curve, v).utility;
      CHECK(mixed == Catch::Approx(schedule_utility(s, v)).margin(1e-9));
    }
  }
}

TEST_CASE("removable lotteries are dropped without changing behavior") {
  SingleLotterySchedule s;
  // The second step sells everything at 3, so the first (worse for every
  // value) is never purchased.
  s.steps = {LotteryStep{0.0, 0.5, 10.0}, LotteryStep{0.0, 1.0, 3.0}};
  ThresholdAnalysis an = thresholds(s);
  CHECK(an.removable == std::vector<char>{1, 0});
  SingleLotterySchedule kept = drop_removable(s, an);
  REQUIRE(kept.steps.size() == 1);
  CHECK(kept.steps[0].p == 3.0);

  ValueDistribution d = validate_distribution({2, 5}, {0.5, 0.5});
  CHECK(revenue_single(kept, d) == Catch::Approx(revenue_single(s, d)).margin(1e-12));

  CurveDistribution cd = derandomize(s);
  REQUIRE(cd.curves.size() == 1);
  CHECK(cd.curves[0].weight == Catch::Approx(1.0));
}

TEST_CASE("monte carlo derandomization is seeded and close") {
  SingleLotterySchedule s = reference_schedule();
  DerandomizeOptions opts;
  opts.exhaustive = false;
  opts.seed = 7;
  opts.samples = 4000;
  CurveDistribution a = derandomize(s, opts);
  CurveDistribution b = derandomize(s, opts);
  REQUIRE(a.curves.size() == 4000);
  double total = 0.0;
  for (std::size_t i = 0; i < a.curves.size(); ++i) {
    total += a.curves[i].weight;
    REQUIRE(a.curves[i].curve.posts.size() == b.curves[i].curve.posts.size());
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
  double exact = revenue_single(s, powers_of_two());
  CHECK(mixture_revenue(a, powers_of_two()) == Catch::Approx(exact).margin(0.3));
  CHECK(mixture_revenue(a, powers_of_two()) == mixture_revenue(b, powers_of_two()));
  CHECK_THROWS_AS(
      sample_realizations(s, thresholds(s), 1, 0), std::invalid_argument);
}

TEST_CASE("enumeration refuses oversized schedules") {
  SingleLotterySchedule s;
  for (int i = 0; i < 21; ++i) s.steps.push_back(LotteryStep{static_cast<double>(i), 0.5, 1.0});
  CHECK_THROWS_AS(enumerate_realizations(s, thresholds(s)), std::invalid_argument);
}

TEST_CASE("adaptive evaluation of the worked mechanism") {
  ValueDistribution d = validate_distribution({100, 101, 102}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  AdaptiveReport rep = evaluate_adaptive(worked_adaptive(), d);
  REQUIRE(rep.choices.size() == 3);

  // Bottom value: indifferent between abstaining and the deadline price; the
  // tie goes to paying 100.
  CHECK(rep.choices[0].utility == Catch::Approx(0.0).margin(1e-9));
  CHECK(rep.choices[0].payment == Catch::Approx(100.0).epsilon(1e-12));

  // Middle value: three-way tie at utility 1/4 resolves to the full lottery
  // branch paying 100 + 2/3.
  CHECK(rep.choices[1].utility == Catch::Approx(0.25).margin(1e-9));
  CHECK(rep.choices[1].payment == Catch::Approx(100.0 + 2.0 / 3.0).epsilon(1e-12));

  // Top value: tie between the immediate price and the lottery branch; the
  // immediate price pays more.
  CHECK(rep.choices[2].utility == Catch::Approx(0.75).margin(1e-9));
  CHECK(rep.choices[2].payment == Catch::Approx(101.25).epsilon(1e-12));

  CHECK(rep.revenue == Catch::Approx((101.25 + 100.0 + 2.0 / 3.0 + 100.0) / 3.0).epsilon(1e-12));
  CHECK(rep.welfare == Catch::Approx(101.0).epsilon(1e-12));
  CHECK(rep.revenue <= rep.welfare);
}

TEST_CASE("adaptive mechanism with deterministic branches equals a curve") {
  ValueDistribution d = validate_distribution({3, 4, 12}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  AdaptiveMechanism mech;
  mech.branches.resize(2);
  mech.branches[0].options = {AdaptiveOption{0.0, 1.0, 7.5}};
  mech.branches[1].options = {AdaptiveOption{ln2, 1.0, 3.0}};
  AdaptiveReport rep = evaluate_adaptive(mech, d);
  PricingCurve curve = make_curve({PricePost{0.0, 7.5}, PricePost{ln2, 3.0}}, ln2);
  CHECK(rep.revenue == Catch::Approx(revenue(curve, d)).margin(1e-9));
}

TEST_CASE("adaptive validation rejects malformed mechanisms") {
  AdaptiveMechanism mech;
  mech.branches.resize(1);
  mech.branches[0].options = {AdaptiveOption{1.0, 0.5, 5.0}, AdaptiveOption{0.5, 0.5, 5.0}};
  CHECK_THROWS_AS(validate_adaptive(mech), std::invalid_argument);
  mech.branches[0].options = {AdaptiveOption{0.0, 1.5, 5.0}};
  CHECK_THROWS_AS(validate_adaptive(mech), std::invalid_argument);
  mech.branches[0].options = {AdaptiveOption{0.0, 0.5, -5.0}};
  CHECK_THROWS_AS(validate_adaptive(mech), std::invalid_argument);
  mech.branches[0].options = {AdaptiveOption{-1.0, 0.5, 5.0}};
  CHECK_THROWS_AS(validate_adaptive(mech), std::invalid_argument);
}

TEST_CASE("gap instance construction and bounds") {
  SECTION("frozen n = 2") {
    GapInstance gi = make_gap_instance(2);
    CHECK(gi.horizon == Catch::Approx(ln2));
    REQUIRE(gi.dist.size() == 3);
    CHECK(gi.dist.values == std::vector<double>{0.0, 20.0, 400.0});
    CHECK(gi.dist.masses[0] == Catch::Approx(0.9475).epsilon(1e-12));
    CHECK(gi.dist.masses[1] == Catch::Approx(0.05).epsilon(1e-12));
    CHECK(gi.dist.masses[2] == Catch::Approx(0.0025).epsilon(1e-12));
    REQUIRE(gi.mechanism.branches.size() == 2);
    CHECK(gi.mechanism.branches[0].options[0].x == Catch::Approx(0.25));
    CHECK(gi.mechanism.branches[0].options[0].p == Catch::Approx(1.0));
    CHECK(gi.mechanism.branches[1].options[1].x == Catch::Approx(0.6));
    CHECK(gi.mechanism.branches[1].options[1].p == Catch::Approx(400.0));

    AdaptiveReport rep = evaluate_adaptive(gi.mechanism, gi.dist);
    CHECK(rep.revenue == Catch::Approx(0.6375).epsilon(1e-12));
    CHECK(rep.revenue >= 0.3 * 2);
  }
  SECTION("each branch screens its own value") {
    GapInstance gi = make_gap_instance(4);
    AdaptiveReport rep = evaluate_adaptive(gi.mechanism, gi.dist);
    CHECK(rep.revenue >= 0.3 * 4);
    CHECK(rep.revenue <= rep.welfare);
    // Value M^i commits to branch i and takes the whole prefix.
    for (std::size_t i = 1; i < gi.dist.size(); ++i) {
      CHECK(rep.choices[i].branch == i - 1);
      CHECK(rep.choices[i].take == 2);
    }
    CHECK(rep.choices[0].take == 0);
  }
  SECTION("size guards") {
    CHECK_THROWS_AS(make_gap_instance(1), std::invalid_argument);
    CHECK_THROWS_AS(make_gap_instance(9), std::invalid_argument);
  }
}
