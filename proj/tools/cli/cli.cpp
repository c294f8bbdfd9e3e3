#include "cli/cli.hpp"

#include <optional>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "rmtfolio/errors.hpp"

namespace rmtfolio::cli {

namespace {

// Flag values; unset optionals leave the config-file/default value alone.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  std::optional<long long> m, n, k;
  std::optional<double> rho, nu, factor_snr;
  std::optional<std::string> layout;
  bool prices = false;
  std::optional<std::string> start_date;
  std::optional<double> price_scale;

  std::optional<std::string> input;
  std::optional<std::string> cov;
  bool no_demean = false;
  std::optional<int> tyler_max_iter;
  std::optional<double> tyler_tol, eigen_floor;
  std::optional<std::string> clip_rule;
  std::optional<int> bins;

  std::optional<std::string> estimator;
  std::optional<int> starts, opt_max_iter;

  bool compare = false;
  std::optional<long long> window, rebalance;
  std::optional<int> annualization;
  std::optional<std::string> benchmark;
  std::optional<std::string> missing;

  std::optional<int> trials;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON config file");
  sub->add_option("--seed", o.seed, "RNG seed for every stochastic step");
  sub->add_option("--out", o.out, "Output directory");
}

void add_model(CLI::App* sub, Overrides& o) {
  sub->add_option("--m", o.m, "Asset count");
  sub->add_option("--N", o.n, "Sample count");
  sub->add_option("--K", o.k, "True factor count");
  sub->add_option("--rho", o.rho, "Toeplitz correlation parameter");
  sub->add_option("--nu", o.nu, "Texture shape parameter");
  sub->add_option("--factor-snr", o.factor_snr, "Per-factor power multiplier");
}

void add_tyler(CLI::App* sub, Overrides& o) {
  sub->add_option("--tyler-max-iter", o.tyler_max_iter, "Tyler iteration cap");
  sub->add_option("--tyler-tol", o.tyler_tol, "Tyler relative Frobenius tolerance");
  sub->add_option("--eigen-floor", o.eigen_floor, "Eigenvalue floor relative to the mean");
}

void add_cleaning(CLI::App* sub, Overrides& o) {
  add_tyler(sub, o);
  sub->add_flag("--no-demean", o.no_demean, "Do not subtract per-asset window means");
  sub->add_option("--clip-rule", o.clip_rule, "trace_preserving | literal");
}

void add_optimizer(CLI::App* sub, Overrides& o) {
  sub->add_option("--starts", o.starts, "Random optimizer starts");
  sub->add_option("--opt-max-iter", o.opt_max_iter, "Optimizer iterations per start");
}

void apply(const Overrides& o, RunConfig& cfg) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.m) cfg.synth.m = *o.m;
  if (o.n) cfg.synth.n = *o.n;
  if (o.k) cfg.synth.k = *o.k;
  if (o.rho) cfg.synth.rho = *o.rho;
  if (o.nu) cfg.synth.nu = *o.nu;
  if (o.factor_snr) cfg.synth.factor_snr = *o.factor_snr;
  if (o.layout) cfg.layout = layout_from_string(*o.layout);
  if (o.prices) cfg.write_prices = true;
  if (o.start_date) cfg.start_date = *o.start_date;
  if (o.price_scale) cfg.price_scale = *o.price_scale;
  if (o.input) cfg.input = *o.input;
  if (o.cov) cfg.cov = *o.cov;
  if (o.no_demean) cfg.cleaning.demean = false;
  if (o.tyler_max_iter) cfg.cleaning.tyler.max_iter = *o.tyler_max_iter;
  if (o.tyler_tol) cfg.cleaning.tyler.tol = *o.tyler_tol;
  if (o.eigen_floor) cfg.cleaning.tyler.eigen_floor = *o.eigen_floor;
  if (o.clip_rule) {
    if (*o.clip_rule == "trace_preserving") {
      cfg.cleaning.clip_rule = rmt::ClipRule::trace_preserving;
    } else if (*o.clip_rule == "literal") {
      cfg.cleaning.clip_rule = rmt::ClipRule::literal;
    } else {
      throw ParameterError("--clip-rule must be trace_preserving or literal");
    }
  }
  if (o.bins) cfg.bins = *o.bins;
  if (o.estimator) cfg.backtest.estimator = backtest::estimator_from_string(*o.estimator);
  if (o.starts) cfg.optimizer.starts = *o.starts;
  if (o.opt_max_iter) cfg.optimizer.max_iter = *o.opt_max_iter;
  if (o.compare) cfg.compare = true;
  if (o.window) cfg.backtest.window_days = *o.window;
  if (o.rebalance) cfg.backtest.rebalance_days = *o.rebalance;
  if (o.annualization) cfg.backtest.annualization_days = *o.annualization;
  if (o.benchmark) cfg.benchmark = *o.benchmark;
  if (o.missing) {
    if (*o.missing == "error") {
      cfg.missing = backtest::MissingPolicy::error;
    } else if (*o.missing == "ffill") {
      cfg.missing = backtest::MissingPolicy::forward_fill;
    } else {
      throw ParameterError("--missing must be error or ffill");
    }
  }
  if (o.trials) cfg.trials = *o.trials;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter:
      return kUsageError;
    case ErrorKind::data:
      return kDataError;
    case ErrorKind::numerical:
      return kNumericalError;
  }
  return kNumericalError;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rmtfolio: robust covariance cleaning and Maximum Variety portfolios"};
  app.require_subcommand(1);
  Overrides o;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic factor-model panel");
  add_common(synth, o);
  add_model(synth, o);
  synth->add_option("--layout", o.layout, "columns (default) | rows");
  synth->add_flag("--prices", o.prices, "Also write prices.csv compounded from 100");
  synth->add_option("--start-date", o.start_date, "First date of prices.csv");
  synth->add_option("--price-scale", o.price_scale, "prices.csv compounds scale * r_t (0.1)");

  CLI::App* clean = app.add_subcommand("clean", "De-noise the covariance of a returns panel");
  add_common(clean, o);
  add_cleaning(clean, o);
  clean->add_option("--returns", o.input, "Returns CSV")->required();
  clean->add_option("--layout", o.layout, "columns (default) | rows");
  clean->add_option("--bins", o.bins, "Eigenvalue histogram bins");

  CLI::App* allocate = app.add_subcommand("allocate", "Maximum Variety weights");
  add_common(allocate, o);
  add_cleaning(allocate, o);
  add_optimizer(allocate, o);
  allocate->add_option("--returns", o.input, "Returns CSV");
  allocate->add_option("--cov", o.cov, "Covariance matrix CSV instead of returns");
  allocate->add_option("--layout", o.layout, "columns (default) | rows");
  allocate->add_option("--estimator", o.estimator, "scm | rmt_tyler_whitened");

  CLI::App* bt = app.add_subcommand("backtest", "Rolling-window Maximum Variety backtest");
  add_common(bt, o);
  add_cleaning(bt, o);
  add_optimizer(bt, o);
  bt->add_option("--prices", o.input, "Price CSV (Date,<labels>)")->required();
  bt->add_option("--estimator", o.estimator, "scm | rmt_tyler_whitened");
  bt->add_flag("--compare", o.compare, "Run both estimators on the same schedule");
  bt->add_option("--window", o.window, "Estimation window in trading days");
  bt->add_option("--rebalance", o.rebalance, "Holding period in trading days");
  bt->add_option("--annualization", o.annualization, "Trading days per year");
  bt->add_option("--benchmark", o.benchmark, "Price column reported but not allocated");
  bt->add_option("--missing", o.missing, "error (default) | ffill");

  CLI::App* mc = app.add_subcommand("mc-order", "Monte-Carlo model-order detection rates");
  add_common(mc, o);
  add_model(mc, o);
  add_tyler(mc, o);
  mc->add_option("--trials", o.trials, "Number of trials");
  mc->add_option("--bins", o.bins, "Pooled eigenvalue histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    RunConfig cfg;
    if (o.config) apply_config_file(*o.config, cfg);
    apply(o, cfg);
    cfg.validate();
    if (synth->parsed()) {
      cmd_synth(cfg, out);
    } else if (clean->parsed()) {
      cmd_clean(cfg, out);
    } else if (allocate->parsed()) {
      if (!cfg.cov && cfg.input.empty()) {
        throw ParameterError("allocate: pass --returns or --cov");
      }
      cmd_allocate(cfg, out);
    } else if (bt->parsed()) {
      cmd_backtest(cfg, out);
    } else if (mc->parsed()) {
      cmd_mc_order(cfg, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  }
  return kSuccess;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  argv.reserve(storage.size());
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rmtfolio::cli
