#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "rmtfolio/backtest.hpp"
#include "rmtfolio/errors.hpp"
#include "rmtfolio/io.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace rmtfolio;
using namespace rmtfolio::io;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rmtfolio_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("atomic write replaces the file and leaves no temporary") {
  const fs::path dir = scratch_dir("atomic");
  const fs::path file = dir / "sub" / "x.txt";
  atomic_write(file, "first");
  atomic_write(file, "second");
  CHECK(read_file(file) == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(file.parent_path())) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(read_file(dir / "missing.txt"), IngestionError);
  fs::remove_all(dir);
}

TEST_CASE("matrix csv round trip") {
  std::mt19937_64 rng(2);
  const Matrix a = oracle::random_spd(7, rng);
  const MatrixFile f = parse_matrix_csv(format_matrix_csv(a, robust::Normalization::trace_m));
  CHECK(f.values == a);
  CHECK(f.normalization == robust::Normalization::trace_m);

  CHECK_THROWS_AS(parse_matrix_csv(""), IngestionError);
  CHECK_THROWS_AS(parse_matrix_csv("2,covariance_scale\n1,0\n"), IngestionError);
  CHECK_THROWS_AS(parse_matrix_csv("2,covariance_scale\n1,0\n0\n"), IngestionError);
  CHECK_THROWS_AS(parse_matrix_csv("2,bogus\n1,0\n0,1\n"), Error);
  CHECK_THROWS_AS(parse_matrix_csv("2,covariance_scale\n1,x\n0,1\n"), IngestionError);
}

TEST_CASE("returns csv: both layouts round trip") {
  std::mt19937_64 rng(3);
  const ReturnsTable t = synthetic_table(oracle::gaussian(4, 9, rng));
  CHECK(t.labels.front() == "A001");
  CHECK(t.keys.back() == "8");
  for (Layout layout : {Layout::assets_as_columns, Layout::assets_as_rows}) {
    const ReturnsTable back = parse_returns_csv(format_returns_csv(t, layout), layout);
    CHECK(back.labels == t.labels);
    CHECK(back.keys == t.keys);
    CHECK(back.data == t.data);
  }
  const std::string cols = format_returns_csv(t, Layout::assets_as_columns);
  CHECK(cols.rfind("t,A001,A002,A003,A004\n", 0) == 0);
  const std::string rows = format_returns_csv(t, Layout::assets_as_rows);
  CHECK(rows.rfind("asset,0,1,", 0) == 0);
}

TEST_CASE("returns csv: malformed input names the line") {
  try {
    parse_returns_csv("t,A,B\n0,0.1,0.2\n1,0.1\n");
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_returns_csv("t,A\n0,abc\n"), IngestionError);
  CHECK_THROWS_AS(parse_returns_csv("t,A\n"), IngestionError);
}

TEST_CASE("price csv: weekday calendar and compounding") {
  Matrix r(1, 3);
  r << 0.1, -0.5, 0.2;
  ReturnsTable t = synthetic_table(r);
  const auto p = backtest::parse_prices(format_prices_csv(t, "2021-01-08"));
  CHECK(p.dates == std::vector<std::string>{"2021-01-08", "2021-01-11", "2021-01-12",
                                            "2021-01-13"});
  CHECK(p.prices(0, 0) == 100.0);
  CHECK(p.prices(0, 1) == doctest::Approx(110.0));
  CHECK(p.prices(0, 2) == doctest::Approx(55.0));
  CHECK(p.prices(0, 3) == doctest::Approx(66.0));

  const auto half = backtest::parse_prices(format_prices_csv(t, "2021-01-08", 0.5));
  CHECK(half.prices(0, 1) == doctest::Approx(105.0));
  CHECK_THROWS_AS(format_prices_csv(t, "2021-13-01"), ParameterError);
}

TEST_CASE("log histogram") {
  const std::vector<double> v = {std::exp(0.1), std::exp(0.5), std::exp(0.9), 0.0, -1.0};
  const Histogram h = log_histogram(v, 2, 0.0, 1.0);
  CHECK(h.edges == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(h.counts == std::vector<long>{1, 2});

  const Histogram clamp = log_histogram({std::exp(-5.0), std::exp(5.0)}, 4, 0.0, 1.0);
  CHECK(clamp.counts == std::vector<long>{1, 0, 0, 1});

  const Histogram autorange = log_histogram({1.0, 2.0, 4.0, 8.0}, 3);
  long total = 0;
  for (long c : autorange.counts) total += c;
  CHECK(total == 4);
  CHECK(autorange.edges.front() == doctest::Approx(0.0));
  CHECK(autorange.edges.back() == doctest::Approx(std::log(8.0)));

  const std::string csv = format_histogram_csv(h);
  CHECK(csv.rfind("log_lambda_left,log_lambda_right,count\n", 0) == 0);
  CHECK_THROWS_AS(log_histogram(v, 0), ParameterError);
}

TEST_CASE("cleaning report json carries the diagnostics") {
  market::FactorModelSpec spec;
  spec.m = 12;
  spec.n = 200;
  spec.k = 1;
  spec.seed = 4;
  const auto panel = market::gen_panel(spec);
  const rmt::CleaningReport r = rmt::clean_covariance(panel.returns);
  const auto j = nlohmann::json::parse(
      cleaning_report_json(r, synthetic_table(panel.returns).labels));
  CHECK(j.at("k_hat").get<long>() == r.k_hat);
  CHECK(j.at("m").get<long>() == 12);
  CHECK(j.at("lambda_bar").get<double>() == r.lambda_bar);
  CHECK(j.at("eigenvalues").size() == 12);
  CHECK(j.at("selected_eigenvalues").size() == static_cast<std::size_t>(r.k_hat));
  CHECK(j.at("labels").size() == 12);
}

TEST_CASE("backtest outputs are written side by side") {
  Matrix rets(2, 30);
  std::mt19937_64 rng(5);
  rets = 0.01 * oracle::gaussian(2, 30, rng);
  const auto prices = backtest::parse_prices(format_prices_csv(synthetic_table(rets), "2020-01-06"));
  const auto panel = backtest::to_returns(prices);
  backtest::BacktestConfig cfg;
  cfg.window_days = 10;
  cfg.rebalance_days = 5;
  cfg.estimator = backtest::Estimator::scm;
  const auto a = backtest::run_backtest(panel, cfg);
  cfg.estimator = backtest::Estimator::rmt_tyler_whitened;
  const auto b = backtest::run_backtest(panel, cfg);

  const fs::path dir = scratch_dir("outputs");
  write_backtest_outputs(dir, {a, b}, panel.labels, cfg);
  for (const char* f : {"result.json", "weights.csv", "wealth.csv", "turnover.csv"})
    CHECK(fs::exists(dir / f));
  const std::string wealth = read_file(dir / "wealth.csv");
  CHECK(wealth.rfind("date,scm,rmt_tyler_whitened\n", 0) == 0);
  const std::string turnover = read_file(dir / "turnover.csv");
  CHECK(turnover.rfind("date,scm,scm_cumulative,rmt_tyler_whitened,rmt_tyler_whitened_cumulative\n",
                       0) == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "result.json"));
  CHECK(j.contains("config"));

  BenchmarkSeries bad{"IDX", {100.0}, {}};
  CHECK_THROWS_AS(write_backtest_outputs(dir, {a}, panel.labels, cfg, bad), ParameterError);
  fs::remove_all(dir);
}
