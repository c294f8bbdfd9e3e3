#include "cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <thread>

#include "rmtfolio/allocation.hpp"
#include "rmtfolio/backtest.hpp"
#include "rmtfolio/errors.hpp"
#include "rmtfolio/io.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"
#include "rmtfolio/robust_estimation.hpp"

namespace rmtfolio::cli {

namespace {

io::ReturnsTable load_returns(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ParameterError("missing --returns <csv>");
  return io::parse_returns_csv(io::read_file(cfg.input), cfg.layout);
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string percent(double v) { return fixed(100.0 * v, 2) + "%"; }

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("RMTFOLIO_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  market::FactorModelSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  const market::SyntheticPanel panel = market::gen_panel(spec);
  const io::ReturnsTable table = io::synthetic_table(panel.returns);

  io::atomic_write(cfg.out / "returns.csv", io::format_returns_csv(table, cfg.layout));
  io::atomic_write(cfg.out / "truth.json", io::ground_truth_json(spec, panel));
  io::atomic_write(cfg.out / "true_scatter.csv",
                   io::format_matrix_csv(panel.true_scatter,
                                         robust::Normalization::covariance_scale));
  if (cfg.write_prices) {
    io::atomic_write(cfg.out / "prices.csv", io::format_prices_csv(table, cfg.start_date, cfg.price_scale));
  }
  out << "synth: m=" << spec.m << " N=" << spec.n << " K=" << spec.k << " rho=" << spec.rho
      << " nu=" << spec.nu << " factor_snr=" << spec.factor_snr << " seed=" << spec.seed
      << "\n  wrote " << (cfg.out / "returns.csv").string() << "\n";
}

void cmd_clean(const RunConfig& cfg, std::ostream& out) {
  const io::ReturnsTable table = load_returns(cfg);
  const rmt::CleaningReport report = rmt::clean_covariance(table.data, cfg.cleaning);

  std::vector<double> eig(report.spectrum.eigenvalues.data(),
                          report.spectrum.eigenvalues.data() + report.spectrum.size());
  io::atomic_write(cfg.out / "report.json", io::cleaning_report_json(report, table.labels));
  io::atomic_write(cfg.out / "denoised.csv",
                   io::format_matrix_csv(report.denoised, report.normalization));
  io::atomic_write(cfg.out / "eigen_hist.csv",
                   io::format_histogram_csv(io::log_histogram(eig, cfg.bins)));

  out << "clean: m=" << table.data.rows() << " N=" << table.data.cols()
      << " c=" << fixed(report.ratio_c) << " lambda_bar=" << fixed(report.lambda_bar)
      << "\n  k_hat=" << report.k_hat << " selected:";
  for (Eigen::Index i = 0; i < report.k_hat; ++i) {
    out << " " << fixed(report.spectrum.eigenvalues[i]);
  }
  out << "\n";
  for (const auto& w : report.warnings) out << "  warning: " << w << "\n";
}

void cmd_allocate(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::string> labels;
  Matrix sigma;
  std::string estimator = "given";
  if (cfg.cov) {
    io::MatrixFile mf = io::parse_matrix_csv(io::read_file(*cfg.cov));
    sigma = std::move(mf.values);
    labels = io::synthetic_table(Matrix(sigma.rows(), 0)).labels;
  } else {
    const io::ReturnsTable table = load_returns(cfg);
    labels = table.labels;
    backtest::BacktestConfig bc = cfg.backtest;
    bc.cleaning = cfg.cleaning;
    sigma = backtest::estimate_window(table.data, bc).covariance;
    estimator = std::string(backtest::to_string(bc.estimator));
  }
  alloc::OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  const alloc::CovarianceInput cov(std::move(sigma));
  const alloc::OptimizationResult r = alloc::maximize_variety_detailed(cov, opt);

  io::atomic_write(cfg.out / "weights.csv", io::format_weights_csv(labels, r.weights.values()));
  io::atomic_write(cfg.out / "weights.json", io::weights_json(labels, r, estimator));
  out << "allocate: m=" << cov.size() << " estimator=" << estimator
      << " VR=" << fixed(r.variety_ratio, 6) << " KKT=" << r.kkt_residual << "\n";
}

void cmd_backtest(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ParameterError("missing --prices <csv>");
  backtest::PricePanel prices = backtest::load_prices(cfg.input, cfg.missing);
  std::optional<Vector> bench_prices;
  if (cfg.benchmark) bench_prices = backtest::take_asset(prices, *cfg.benchmark);
  const backtest::ReturnsPanel returns = backtest::to_returns(prices);

  backtest::BacktestConfig bc = cfg.backtest;
  bc.cleaning = cfg.cleaning;
  bc.optimizer = cfg.optimizer;
  bc.optimizer.seed = cfg.seed;

  std::vector<backtest::Estimator> estimators;
  if (cfg.compare) {
    estimators = {backtest::Estimator::scm, backtest::Estimator::rmt_tyler_whitened};
  } else {
    estimators = {bc.estimator};
  }
  std::vector<backtest::BacktestResult> results;
  for (auto e : estimators) {
    bc.estimator = e;
    results.push_back(backtest::run_backtest(returns, bc));
  }
  std::optional<io::BenchmarkSeries> bench;
  if (bench_prices) {
    io::BenchmarkSeries b;
    b.label = *cfg.benchmark;
    b.wealth = backtest::benchmark_wealth(*bench_prices, results.front());
    b.stats = backtest::perf_stats(b.wealth, bc.annualization_days);
    bench = std::move(b);
  }
  io::write_backtest_outputs(cfg.out, results, returns.labels, bc, bench);

  out << "backtest: m=" << returns.assets() << " returns=" << returns.periods()
      << " rebalances=" << results.front().schedule.size() << "\n";
  out << "  " << std::left << std::setw(20) << "portfolio" << std::setw(12) << "ann.ret"
      << std::setw(12) << "ann.vol" << std::setw(10) << "ratio" << std::setw(10) << "maxDD"
      << "turnover\n";
  auto row = [&](const std::string& name, const backtest::PerfStats& s, double turnover) {
    out << "  " << std::setw(20) << name << std::setw(12) << percent(s.annualized_return)
        << std::setw(12) << percent(s.annualized_volatility) << std::setw(10)
        << (s.ratio ? fixed(*s.ratio, 2) : std::string("n/a")) << std::setw(10)
        << percent(s.max_drawdown) << fixed(turnover, 3) << "\n";
  };
  for (const auto& r : results) {
    const auto cum = r.cumulative_turnover();
    row(std::string(backtest::to_string(r.estimator)), r.stats, cum.empty() ? 0.0 : cum.back());
  }
  if (bench) row(bench->label, bench->stats, 0.0);
}

OrderExperiment run_order_experiment(const market::FactorModelSpec& spec, int trials,
                                     const rmt::CleaningConfig& cleaning, int workers) {
  spec.validate();
  if (trials < 1) throw ParameterError("mc-order: trials must be >= 1");
  const Eigen::Index m = spec.m;
  const double lambda_bar =
      rmt::mp_upper_bound(static_cast<double>(m) / static_cast<double>(spec.n));

  struct Trial {
    long k[3] = {0, 0, 0};
    Vector eig[3];
    std::optional<Error> error;
  };
  std::vector<Trial> out(static_cast<std::size_t>(trials));

  auto work = [&](int t) {
    Trial& r = out[static_cast<std::size_t>(t)];
    try {
      market::FactorModelSpec s = spec;
      s.seed = spec.seed + static_cast<std::uint64_t>(t);
      const Matrix x = market::gen_panel(s).returns;

      Vector scm_eig = eigen_symmetric(robust::scm(x).values()).eigenvalues;
      scm_eig /= scm_eig.mean();
      r.k[0] = rmt::select_order(scm_eig, lambda_bar);
      r.eig[0] = std::move(scm_eig);

      Vector tyl_eig = eigen_symmetric(robust::tyler(x, cleaning.tyler).values()).eigenvalues;
      r.k[1] = rmt::select_order(tyl_eig, lambda_bar);
      r.eig[1] = std::move(tyl_eig);

      rmt::CleaningConfig c = cleaning;
      c.demean = false;
      rmt::CleaningReport rep = rmt::clean_covariance(x, c);
      r.k[2] = rep.k_hat;
      r.eig[2] = rep.spectrum.eigenvalues;
    } catch (const Error& e) {
      r.error.emplace(e.kind(), "mc-order: trial " + std::to_string(t) + ": " + e.what());
    }
  };

  const int n_workers = std::clamp(workers, 1, trials);
  if (n_workers == 1) {
    for (int t = 0; t < trials; ++t) work(t);
  } else {
    std::vector<std::thread> pool;
    std::mutex mu;
    int next = 0;
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          int t;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= trials) return;
            t = next++;
          }
          work(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  OrderExperiment e;
  e.trials = trials;
  e.lambda_bar = lambda_bar;
  for (const Trial& r : out) {
    if (r.error) throw *r.error;
    for (int v = 0; v < 3; ++v) {
      const std::string name = OrderExperiment::kVariants[v];
      ++e.tallies[name][r.k[v]];
      auto& pool = e.pooled_eigenvalues[name];
      pool.insert(pool.end(), r.eig[v].data(), r.eig[v].data() + r.eig[v].size());
    }
  }
  return e;
}

std::string format_order_rates_csv(const OrderExperiment& e) {
  std::string out = "variant,k,count,frequency\n";
  for (const char* v : OrderExperiment::kVariants) {
    const auto it = e.tallies.find(v);
    if (it == e.tallies.end()) continue;
    for (const auto& [k, count] : it->second) {
      out += std::string(v) + "," + std::to_string(k) + "," + std::to_string(count) + "," +
             io::format_double(static_cast<double>(count) / e.trials) + "\n";
    }
  }
  return out;
}

void cmd_mc_order(const RunConfig& cfg, std::ostream& out) {
  market::FactorModelSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  const OrderExperiment e = run_order_experiment(spec, cfg.trials, cfg.cleaning, worker_count());

  io::atomic_write(cfg.out / "order_rates.csv", format_order_rates_csv(e));
  for (const char* v : OrderExperiment::kVariants) {
    io::atomic_write(cfg.out / (std::string("eigen_hist_") + v + ".csv"),
                     io::format_histogram_csv(
                         io::log_histogram(e.pooled_eigenvalues.at(v), cfg.bins)));
  }
  out << "mc-order: trials=" << e.trials << " m=" << spec.m << " N=" << spec.n
      << " K=" << spec.k << " lambda_bar=" << fixed(e.lambda_bar) << "\n";
  for (const char* v : OrderExperiment::kVariants) {
    const auto& tally = e.tallies.at(v);
    auto it = tally.find(static_cast<long>(spec.k));
    const int hits = it == tally.end() ? 0 : it->second;
    out << "  " << std::left << std::setw(16) << v << " k_hat==K in " << hits << "/"
        << e.trials << " trials\n";
  }
}

}  // namespace rmtfolio::cli
