#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rmtfolio/backtest.hpp"
#include "rmtfolio/errors.hpp"
#include "rmtfolio/io.hpp"
#include "rmtfolio/market_model.hpp"
#include "support/oracles.hpp"

using namespace rmtfolio;
using namespace rmtfolio::backtest;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string error_text(const std::string& csv, MissingPolicy policy = MissingPolicy::error) {
  try {
    parse_prices(csv, policy);
  } catch (const IngestionError& e) {
    return e.what();
  }
  return {};
}

ReturnsPanel synthetic_returns(Eigen::Index m, Eigen::Index n, std::uint64_t seed,
                               double scale = 0.03) {
  market::FactorModelSpec spec;
  spec.m = m;
  spec.n = n;
  spec.k = 1;
  spec.seed = seed;
  const auto p = market::gen_panel(spec);
  const io::ReturnsTable table = io::synthetic_table(p.returns);
  return to_returns(parse_prices(io::format_prices_csv(table, "2010-01-04", scale)));
}

}  // namespace

TEST_CASE("load prices: well-formed") {
  const PricePanel p = parse_prices(
      "Date,A,B\n2020-01-02,100,50\n2020-01-03,101,51\n2020-01-06,102,49.5\n");
  CHECK(p.periods() == 3);
  CHECK(p.assets() == 2);
  CHECK(p.labels == std::vector<std::string>{"A", "B"});
  CHECK(p.prices(1, 2) == 49.5);
  CHECK(p.fill_counts == std::vector<int>{0, 0});
}

TEST_CASE("load prices: errors name the cell") {
  const std::string neg = error_text("Date,A,B\n2020-01-02,100,50\n2020-01-03,-1,51\n");
  CHECK(neg.find("row 3") != std::string::npos);
  CHECK(neg.find("A") != std::string::npos);
  CHECK(neg.find("positive") != std::string::npos);

  CHECK(error_text("Date,A\n2020-01-02,abc\n").find("parse") != std::string::npos);
  CHECK(error_text("Date,A\n2020-01-03,1\n2020-01-02,1\n").find("row 3") != std::string::npos);
  CHECK(error_text("Date,A\n2020-01-03,1\n2020-01-03,1\n").find("row 3") != std::string::npos);
  CHECK(error_text("Date,A\n2020-02-30,1\n").find("row 2") != std::string::npos);
  CHECK(error_text("Date,A\n2020-01-02,1,2\n").find("row 2") != std::string::npos);
  CHECK(error_text("X,A\n2020-01-02,1\n").find("header") != std::string::npos);
  CHECK(error_text("Date,A\n2020-01-02,1\n2020-01-03,\n").find("missing") != std::string::npos);
  CHECK_FALSE(error_text("").empty());
  CHECK_THROWS_AS(load_prices("/nonexistent/prices.csv"), IngestionError);
}

TEST_CASE("load prices: forward fill") {
  const PricePanel p = parse_prices(
      "Date,A,B\n2020-01-02,100,50\n2020-01-03,,51\n2020-01-06,102,52\n",
      MissingPolicy::forward_fill);
  CHECK(p.prices(0, 1) == 100.0);
  CHECK(p.fill_counts == std::vector<int>{1, 0});
  CHECK(error_text("Date,A\n2020-01-02,\n", MissingPolicy::forward_fill)
            .find("forward-fill") != std::string::npos);
}

TEST_CASE("iso dates") {
  CHECK(is_iso_date("2024-02-29"));
  CHECK_FALSE(is_iso_date("2023-02-29"));
  CHECK_FALSE(is_iso_date("2023-13-01"));
  CHECK_FALSE(is_iso_date("2023-1-01"));
  CHECK_FALSE(is_iso_date("20230101"));
}

TEST_CASE("take asset") {
  PricePanel p = parse_prices("Date,A,B\n2020-01-02,100,50\n2020-01-03,101,51\n");
  const Vector b = take_asset(p, "B");
  CHECK(b == vec({50, 51}));
  CHECK(p.assets() == 1);
  CHECK(p.labels == std::vector<std::string>{"A"});
  CHECK_THROWS_AS(take_asset(p, "Z"), IngestionError);
}

TEST_CASE("returns: examples") {
  ReturnsPanel r = to_returns(parse_prices("Date,A\n2020-01-02,100\n2020-01-03,110\n"));
  CHECK(r.periods() == 1);
  CHECK(r.returns(0, 0) == doctest::Approx(0.10));
  CHECK(r.dates == std::vector<std::string>{"2020-01-03"});

  r = to_returns(parse_prices("Date,A\n2020-01-02,5\n2020-01-03,5\n2020-01-06,5\n"));
  CHECK(r.returns.isZero());

  r = to_returns(parse_prices("Date,A\n2020-01-02,100\n2020-01-03,110\n2020-01-06,99\n"));
  CHECK(r.returns(0, 0) == doctest::Approx(0.10));
  CHECK(r.returns(0, 1) == doctest::Approx(-0.10));

  CHECK_THROWS_AS(to_returns(parse_prices("Date,A\n2020-01-02,100\n")), IngestionError);
}

TEST_CASE("schedule: examples") {
  CHECK(rolling_schedule(292, 252, 20).size() == 2);
  CHECK(rolling_schedule(272, 252, 20).size() == 1);
  try {
    rolling_schedule(271, 252, 20);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("272") != std::string::npos);
  }
  const auto s = rolling_schedule(292, 252, 20);
  CHECK(s[0] == RebalancePeriod{0, 252, 252, 272});
  CHECK(s[1] == RebalancePeriod{20, 272, 272, 292});
  CHECK_THROWS_AS(rolling_schedule(100, 0, 5), ParameterError);
}

TEST_CASE("schedule: tiling on random triples") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<long> wd(1, 300), rd(1, 60), extra(0, 500);
  for (int trial = 0; trial < 500; ++trial) {
    const long w = wd(rng), r = rd(rng), t = w + r + extra(rng);
    const auto s = rolling_schedule(t, w, r);
    CHECK(static_cast<long>(s.size()) == (t - w) / r);
    CHECK(s.front().hold_begin == w);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].window_end - s[i].window_begin == w);
      CHECK(s[i].window_begin >= 0);
      CHECK(s[i].hold_begin == s[i].window_end);
      CHECK(s[i].hold_end - s[i].hold_begin == r);
      CHECK(s[i].hold_end <= t);
      if (i > 0) CHECK(s[i].hold_begin == s[i - 1].hold_end);
    }
    CHECK(t - s.back().hold_end < r);
  }
}

TEST_CASE("schedule: Tyler needs more observations than assets") {
  ReturnsPanel p;
  p.returns = Matrix::Zero(10, 40);
  p.dates.assign(40, "2020-01-01");
  BacktestConfig cfg;
  cfg.window_days = 10;
  cfg.rebalance_days = 5;
  CHECK_THROWS_AS(rolling_schedule(p, cfg), ParameterError);
  cfg.estimator = Estimator::scm;
  CHECK(rolling_schedule(p, cfg).size() == 6);
}

TEST_CASE("turnover: examples") {
  using alloc::WeightVector;
  CHECK(turnover(WeightVector(vec({0.3, 0.7})), WeightVector(vec({0.3, 0.7}))) == 0.0);
  CHECK(turnover(WeightVector(vec({1, 0})), WeightVector(vec({0, 1}))) == 2.0);
  CHECK(turnover(WeightVector(vec({0.6, 0.4})), WeightVector(vec({0.5, 0.5}))) ==
        doctest::Approx(0.2));
  CHECK_THROWS_AS(turnover(WeightVector(vec({1})), WeightVector(vec({0.5, 0.5}))),
                  ParameterError);
}

TEST_CASE("perf stats: examples") {
  const PerfStats dd = perf_stats({100, 120, 60});
  CHECK(dd.max_drawdown == doctest::Approx(0.5));

  const PerfStats up = perf_stats({100, 101, 103, 110});
  CHECK(up.max_drawdown == 0.0);
  CHECK(up.ratio.has_value());

  const PerfStats flat = perf_stats({100, 100, 100});
  CHECK(flat.annualized_return == 0.0);
  CHECK(flat.annualized_volatility == 0.0);
  CHECK_FALSE(flat.ratio.has_value());

  // Two steps, annualized over 2 periods per year: growth 1.21 -> 21%.
  const PerfStats g = perf_stats({100, 110, 121}, 2);
  CHECK(g.annualized_return == doctest::Approx(0.21));
  CHECK(g.annualized_volatility == 0.0);

  // Returns +10%, -10%: sample stdev sqrt(0.02), scaled by sqrt(252).
  const PerfStats v = perf_stats({100, 110, 99});
  CHECK(v.annualized_volatility == doctest::Approx(std::sqrt(0.02) * std::sqrt(252.0)));

  CHECK_THROWS_AS(perf_stats({100}), ParameterError);
  CHECK_THROWS_AS(perf_stats({100, 0}), ParameterError);
}

TEST_CASE("backtest: single asset tracks its price") {
  const PricePanel prices = parse_prices(
      "Date,A\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n2020-01-04,99\n"
      "2020-01-05,120\n2020-01-06,125\n2020-01-07,90\n");
  BacktestConfig cfg;
  cfg.window_days = 2;
  cfg.rebalance_days = 2;
  const BacktestResult r = run_backtest(to_returns(prices), cfg);
  CHECK(r.schedule.size() == 2);
  for (const Vector& w : r.weights) CHECK(w == vec({1.0}));
  REQUIRE(r.wealth.size() == 5);
  for (std::size_t t = 0; t < r.wealth.size(); ++t)
    CHECK(r.wealth[t] == doctest::Approx(100.0 * prices.prices(0, 2 + t) / prices.prices(0, 2)));
  CHECK(r.turnover == std::vector<double>{0.0});
}

TEST_CASE("backtest: zero-return single asset stays at 100") {
  ReturnsPanel p;
  p.returns = Matrix::Zero(1, 30);
  for (int i = 0; i < 30; ++i) p.dates.push_back("d" + std::to_string(i));
  BacktestConfig cfg;
  cfg.window_days = 10;
  cfg.rebalance_days = 5;
  const BacktestResult r = run_backtest(p, cfg);
  for (double w : r.wealth) CHECK(w == 100.0);
  for (double t : r.turnover) CHECK(t == 0.0);
}

TEST_CASE("backtest: zero-return multi-asset window fails with its date") {
  ReturnsPanel p;
  p.returns = Matrix::Zero(3, 30);
  for (int i = 0; i < 30; ++i) p.dates.push_back("d" + std::to_string(i));
  BacktestConfig cfg;
  cfg.window_days = 10;
  cfg.rebalance_days = 5;
  cfg.estimator = Estimator::scm;
  try {
    run_backtest(p, cfg);
    FAIL("expected BacktestError");
  } catch (const BacktestError& e) {
    CHECK(e.date() == "d9");
  }
}

TEST_CASE("backtest: accounting, bounds, and alignment on a synthetic panel") {
  const ReturnsPanel panel = synthetic_returns(6, 300, 4);
  BacktestConfig cfg;
  cfg.window_days = 120;
  cfg.rebalance_days = 20;
  std::vector<BacktestResult> runs;
  for (Estimator e : {Estimator::scm, Estimator::rmt_tyler_whitened}) {
    cfg.estimator = e;
    runs.push_back(run_backtest(panel, cfg));
  }
  CHECK(runs[0].schedule == runs[1].schedule);
  CHECK(runs[0].wealth_dates == runs[1].wealth_dates);
  CHECK(runs[1].k_hat.size() == runs[1].schedule.size());
  CHECK(runs[0].k_hat.empty());

  for (const BacktestResult& r : runs) {
    CHECK(r.turnover.size() + 1 == r.weights.size());
    for (double t : r.turnover) CHECK((t >= 0.0 && t <= 2.0));
    const auto cum = r.cumulative_turnover();
    for (std::size_t i = 1; i < cum.size(); ++i) CHECK(cum[i] >= cum[i - 1]);
    for (double w : r.wealth) CHECK(w > 0.0);
    for (const Vector& w : r.weights) CHECK_NOTHROW(alloc::WeightVector{w});

    // Recompute the buy-and-hold wealth by hand.
    double wealth = 100.0;
    std::size_t k = 1;
    for (std::size_t i = 0; i < r.schedule.size(); ++i) {
      const double start = wealth;
      Vector growth = Vector::Ones(panel.assets());
      for (Eigen::Index t = r.schedule[i].hold_begin; t < r.schedule[i].hold_end; ++t) {
        growth = growth.cwiseProduct((panel.returns.col(t).array() + 1.0).matrix());
        wealth = start * r.weights[i].dot(growth);
        CHECK(std::abs(r.wealth[k++] - wealth) < 1e-9 * wealth);
      }
    }
    CHECK(k == r.wealth.size());
  }
}

TEST_CASE("backtest: deterministic") {
  const ReturnsPanel panel = synthetic_returns(5, 200, 8);
  BacktestConfig cfg;
  cfg.window_days = 100;
  cfg.rebalance_days = 25;
  const BacktestResult a = run_backtest(panel, cfg);
  const BacktestResult b = run_backtest(panel, cfg);
  CHECK(io::backtest_result_json({a}, panel.labels, cfg, std::nullopt) ==
        io::backtest_result_json({b}, panel.labels, cfg, std::nullopt));
}

TEST_CASE("benchmark wealth") {
  PricePanel prices = parse_prices(
      "Date,A,IDX\n2020-01-01,100,10\n2020-01-02,110,11\n2020-01-03,99,12\n"
      "2020-01-04,99,9\n2020-01-05,120,10\n");
  const Vector idx = take_asset(prices, "IDX");
  BacktestConfig cfg;
  cfg.window_days = 2;
  cfg.rebalance_days = 2;
  const BacktestResult r = run_backtest(to_returns(prices), cfg);
  const std::vector<double> b = benchmark_wealth(idx, r);
  REQUIRE(b.size() == r.wealth.size());
  CHECK(b[0] == 100.0);
  CHECK(b[1] == doctest::Approx(75.0));
  CHECK(b[2] == doctest::Approx(250.0 / 3.0));
}

TEST_CASE("estimator names") {
  CHECK(estimator_from_string("scm") == Estimator::scm);
  CHECK(estimator_from_string("rmt_tyler_whitened") == Estimator::rmt_tyler_whitened);
  CHECK(to_string(Estimator::scm) == "scm");
  CHECK_THROWS_AS(estimator_from_string("lw"), ParameterError);
}
