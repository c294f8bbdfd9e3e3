#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmtfolio/allocation.hpp"
#include "rmtfolio/errors.hpp"
#include "rmtfolio/linalg.hpp"
#include "rmtfolio/rmt_denoise.hpp"

namespace rmtfolio::backtest {

enum class MissingPolicy { error, forward_fill };

/// Daily close prices, assets as rows.
struct PricePanel {
  std::vector<std::string> dates;   ///< ISO-8601, strictly increasing
  std::vector<std::string> labels;
  Matrix prices;                    ///< m x T, all > 0
  std::vector<int> fill_counts;     ///< forward-filled cells per asset

  Eigen::Index assets() const { return prices.rows(); }
  Eigen::Index periods() const { return prices.cols(); }
};

struct ReturnsPanel {
  std::vector<std::string> dates;   ///< date of the closing price of each return
  std::vector<std::string> labels;
  Matrix returns;                   ///< m x (T - 1)

  Eigen::Index assets() const { return returns.rows(); }
  Eigen::Index periods() const { return returns.cols(); }
};

/// Header `Date,<label1>,...,<labelm>`; one row per date. Empty cells are
/// missing values handled per `policy`. Errors name the offending row/column.
PricePanel load_prices(const std::filesystem::path& path,
                       MissingPolicy policy = MissingPolicy::error);
PricePanel parse_prices(std::string_view csv_text,
                        MissingPolicy policy = MissingPolicy::error);

/// True when `s` is a valid calendar date in YYYY-MM-DD form.
bool is_iso_date(std::string_view s);

/// Removes the asset named `label` and returns its price series.
Vector take_asset(PricePanel& panel, std::string_view label);

/// Simple returns p_t / p_{t-1} - 1.
ReturnsPanel to_returns(const PricePanel& panel);

enum class Estimator { scm, rmt_tyler_whitened };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view s);

struct BacktestConfig {
  Eigen::Index window_days = 252;
  Eigen::Index rebalance_days = 20;
  Estimator estimator = Estimator::rmt_tyler_whitened;
  alloc::OptimizerConfig optimizer;
  rmt::CleaningConfig cleaning;
  int annualization_days = 252;

  void validate() const;
};

/// Return indices [window_begin, window_end) estimate the weights that are
/// then held over [hold_begin, hold_end); hold_begin == window_end.
struct RebalancePeriod {
  Eigen::Index window_begin = 0;
  Eigen::Index window_end = 0;
  Eigen::Index hold_begin = 0;
  Eigen::Index hold_end = 0;

  bool operator==(const RebalancePeriod&) const = default;
};

/// Full holding periods only; the first rebalance is at index window_days.
/// Throws IngestionError when fewer than window + rebalance returns exist.
std::vector<RebalancePeriod> rolling_schedule(Eigen::Index periods,
                                              Eigen::Index window_days,
                                              Eigen::Index rebalance_days);
std::vector<RebalancePeriod> rolling_schedule(const ReturnsPanel& panel,
                                              const BacktestConfig& cfg);

/// L1 distance between weight vectors, in [0, 2].
double turnover(const alloc::WeightVector& prev, const alloc::WeightVector& next);

struct PerfStats {
  double annualized_return = 0.0;
  double annualized_volatility = 0.0;
  std::optional<double> ratio;      ///< unset when volatility is zero
  double max_drawdown = 0.0;
};

/// Annualized geometric return, sample volatility of the period returns
/// scaled by sqrt(annualization_days), their ratio, and maximum drawdown.
PerfStats perf_stats(const std::vector<double>& wealth, int annualization_days = 252);

struct BacktestResult {
  Estimator estimator = Estimator::scm;
  std::vector<RebalancePeriod> schedule;
  std::vector<std::string> rebalance_dates;   ///< close at which weights are set
  std::vector<Vector> weights;                ///< target weights per rebalance
  std::vector<std::string> wealth_dates;
  std::vector<double> wealth;                 ///< starts at 100
  std::vector<double> turnover;               ///< between consecutive targets
  std::vector<Eigen::Index> k_hat;            ///< rmt estimator only
  std::vector<Vector> selected_eigenvalues;   ///< rmt estimator only
  std::vector<double> lambda_bar;             ///< rmt estimator only
  std::vector<double> variety_ratio;          ///< in-sample VR at each target
  PerfStats stats;

  std::vector<double> cumulative_turnover() const;
};

/// Raised when a rebalance fails; wraps the underlying error's kind.
class BacktestError : public Error {
 public:
  BacktestError(ErrorKind kind, const std::string& what, std::string date)
      : Error(kind, what), date_(std::move(date)) {}

  const std::string& date() const noexcept { return date_; }

 private:
  std::string date_;
};

/// Covariance estimate for one window (m x window) under `estimator`.
struct WindowEstimate {
  Matrix covariance;
  std::optional<rmt::CleaningReport> report;
};
WindowEstimate estimate_window(const Matrix& window, const BacktestConfig& cfg);

BacktestResult run_backtest(const ReturnsPanel& panel, const BacktestConfig& cfg);

/// Buy-and-hold wealth of a single price series rebased to 100 over the
/// dates a backtest result covers (e.g. a benchmark column).
std::vector<double> benchmark_wealth(const Vector& prices, const BacktestResult& result);

}  // namespace rmtfolio::backtest
