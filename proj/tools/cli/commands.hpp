#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace rmtfolio::cli {

void cmd_synth(const RunConfig& cfg, std::ostream& out);
void cmd_clean(const RunConfig& cfg, std::ostream& out);
void cmd_allocate(const RunConfig& cfg, std::ostream& out);
void cmd_backtest(const RunConfig& cfg, std::ostream& out);
void cmd_mc_order(const RunConfig& cfg, std::ostream& out);

/// Worker threads for Monte-Carlo runs: RMTFOLIO_WORKERS, else hardware
/// concurrency, at least 1.
int worker_count();

/// Order-selection tallies for the three estimator variants.
struct OrderExperiment {
  static constexpr const char* kVariants[3] = {"scm", "tyler", "whitened_tyler"};

  int trials = 0;
  double lambda_bar = 0.0;
  std::map<std::string, std::map<long, int>> tallies;         ///< variant -> k -> count
  std::map<std::string, std::vector<double>> pooled_eigenvalues;
};

/// Trial t draws the panel with seed `spec.seed + t`; results do not depend
/// on the worker count.
///  - scm: SCM eigenvalues over their mean, counted above lambda_bar
///  - tyler: trace-m Tyler eigenvalues counted above lambda_bar
///  - whitened_tyler: k_hat of the full cleaning pipeline
OrderExperiment run_order_experiment(const market::FactorModelSpec& spec, int trials,
                                     const rmt::CleaningConfig& cleaning, int workers);

std::string format_order_rates_csv(const OrderExperiment& e);

}  // namespace rmtfolio::cli
