#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmtfolio/allocation.hpp"
#include "rmtfolio/backtest.hpp"
#include "rmtfolio/linalg.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"
#include "rmtfolio/robust_estimation.hpp"

namespace rmtfolio::io {

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// --- square matrices -------------------------------------------------------
// First line "<m>,<normalization>", then m rows of m comma-separated values.

struct MatrixFile {
  Matrix values;
  robust::Normalization normalization = robust::Normalization::covariance_scale;
};

std::string format_matrix_csv(const Matrix& a, robust::Normalization tag);
MatrixFile parse_matrix_csv(std::string_view text);

// --- return panels ---------------------------------------------------------

enum class Layout {
  assets_as_columns,  ///< header "t,<labels>", one row per observation
  assets_as_rows,     ///< header "asset,<keys>", one row per asset
};

struct ReturnsTable {
  std::vector<std::string> labels;  ///< m asset labels
  std::vector<std::string> keys;    ///< N observation keys (index or date)
  Matrix data;                      ///< m x N
};

std::string format_returns_csv(const ReturnsTable& table,
                               Layout layout = Layout::assets_as_columns);
ReturnsTable parse_returns_csv(std::string_view text,
                               Layout layout = Layout::assets_as_columns);

/// Labels A001.. and keys 0..N-1 for a synthetic panel.
ReturnsTable synthetic_table(const Matrix& returns);

/// Compounds scale * r_t from 100 into a price CSV ("Date,<labels>") with
/// consecutive weekdays starting at `start_date` (YYYY-MM-DD).
std::string format_prices_csv(const ReturnsTable& table, std::string_view start_date,
                              double scale = 1.0);

std::string ground_truth_json(const market::FactorModelSpec& spec,
                              const market::SyntheticPanel& panel);

// --- cleaning --------------------------------------------------------------

struct Histogram {
  std::vector<double> edges;  ///< bins + 1 increasing edges
  std::vector<long> counts;
};

/// Histogram of log(values) over [lo, hi] in `bins` equal bins. Values
/// outside the range fall into the end bins; non-positive values are skipped.
Histogram log_histogram(const std::vector<double>& values, int bins, double lo, double hi);
Histogram log_histogram(const std::vector<double>& values, int bins);

/// Columns log_lambda_left,log_lambda_right,count.
std::string format_histogram_csv(const Histogram& h);

std::string cleaning_report_json(const rmt::CleaningReport& report,
                                 const std::vector<std::string>& labels);

// --- allocation ------------------------------------------------------------

std::string format_weights_csv(const std::vector<std::string>& labels, const Vector& w);
std::string weights_json(const std::vector<std::string>& labels,
                         const alloc::OptimizationResult& result,
                         std::string_view estimator);

// --- backtest --------------------------------------------------------------

struct BenchmarkSeries {
  std::string label;
  std::vector<double> wealth;
  backtest::PerfStats stats;
};

/// result.json, weights.csv, wealth.csv, turnover.csv under `dir`. Several
/// results must share one schedule; their series are written side by side.
void write_backtest_outputs(const std::filesystem::path& dir,
                            const std::vector<backtest::BacktestResult>& results,
                            const std::vector<std::string>& labels,
                            const backtest::BacktestConfig& cfg,
                            const std::optional<BenchmarkSeries>& benchmark = std::nullopt);

std::string backtest_result_json(const std::vector<backtest::BacktestResult>& results,
                                 const std::vector<std::string>& labels,
                                 const backtest::BacktestConfig& cfg,
                                 const std::optional<BenchmarkSeries>& benchmark);

}  // namespace rmtfolio::io
