#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rmtfolio/backtest.hpp"
#include "rmtfolio/io.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"

namespace rmtfolio::cli {

/// Every setting a subcommand can read. Defaults, then the --config file,
/// then explicit flags.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  market::FactorModelSpec synth;
  rmt::CleaningConfig cleaning;
  backtest::BacktestConfig backtest;
  alloc::OptimizerConfig optimizer;

  bool compare = false;
  std::optional<std::string> benchmark;
  backtest::MissingPolicy missing = backtest::MissingPolicy::error;

  int trials = 100;
  int bins = 100;

  // Subcommand inputs and output shape.
  std::filesystem::path input;               ///< returns or prices CSV
  std::optional<std::filesystem::path> cov;  ///< allocate: matrix CSV instead of returns
  io::Layout layout = io::Layout::assets_as_columns;
  bool write_prices = false;
  std::string start_date = "2000-01-03";
  double price_scale = 0.1;  ///< prices.csv compounds price_scale * r_t

  /// Checks every section; throws ParameterError.
  void validate() const;
};

io::Layout layout_from_string(const std::string& s);

/// Reads a JSON config file into `cfg`. Unknown keys are errors.
/// Recognised sections: synth, synth_output, tyler, cleaning, optimizer,
/// backtest, mc_order, plus top-level seed and out.
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);
void apply_config_text(const std::string& json_text, RunConfig& cfg);

}  // namespace rmtfolio::cli
