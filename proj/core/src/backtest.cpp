#include "rmtfolio/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "rmtfolio/robust_estimation.hpp"

namespace rmtfolio::backtest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

}  // namespace

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int y = std::stoi(std::string(s.substr(0, 4)));
  const int mo = std::stoi(std::string(s.substr(5, 2)));
  const int d = std::stoi(std::string(s.substr(8, 2)));
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (mo < 1 || mo > 12 || d < 1) return false;
  const int limit = days[mo - 1] + (mo == 2 && is_leap(y) ? 1 : 0);
  return d <= limit;
}

PricePanel parse_prices(std::string_view text, MissingPolicy policy) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(start, nl - start);
      if (!trim(line).empty()) lines.push_back(line);
      start = nl + 1;
    }
  }
  if (lines.empty()) throw IngestionError("prices: empty file");

  const auto header = split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "Date") {
    throw IngestionError("prices: header must be 'Date,<label1>,...'");
  }
  PricePanel panel;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) {
      throw IngestionError("prices: empty asset label in column " + std::to_string(j + 1));
    }
    panel.labels.emplace_back(header[j]);
  }
  const std::size_t m = panel.labels.size();
  const std::size_t t_count = lines.size() - 1;
  panel.prices.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t_count));
  panel.fill_counts.assign(m, 0);

  for (std::size_t r = 0; r < t_count; ++r) {
    const std::size_t row_no = r + 2;  // 1-based file line
    const auto fields = split_fields(lines[r + 1]);
    if (fields.size() != m + 1) {
      throw IngestionError("prices: row " + std::to_string(row_no) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(m + 1));
    }
    if (!is_iso_date(fields[0])) {
      throw IngestionError("prices: row " + std::to_string(row_no) +
                           ", column Date: invalid date '" + std::string(fields[0]) + "'");
    }
    if (!panel.dates.empty() && !(std::string(fields[0]) > panel.dates.back())) {
      throw IngestionError("prices: row " + std::to_string(row_no) +
                           ": dates must be strictly increasing");
    }
    panel.dates.emplace_back(fields[0]);
    const auto col = static_cast<Eigen::Index>(r);
    for (std::size_t j = 0; j < m; ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      std::string_view cell = fields[j + 1];
      const std::string where = "prices: row " + std::to_string(row_no) +
                                ", column " + panel.labels[j];
      if (cell.empty()) {
        if (policy == MissingPolicy::error) {
          throw IngestionError(where + ": missing value");
        }
        if (r == 0) {
          throw IngestionError(where + ": missing value with nothing to forward-fill");
        }
        panel.prices(i, col) = panel.prices(i, col - 1);
        ++panel.fill_counts[j];
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw IngestionError(where + ": cannot parse '" + std::string(cell) + "'");
      }
      if (!(v > 0.0)) {
        throw IngestionError(where + ": price must be positive, got " + std::string(cell));
      }
      panel.prices(i, col) = v;
    }
  }
  return panel;
}

PricePanel load_prices(const std::filesystem::path& path, MissingPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("prices: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_prices(buf.str(), policy);
}

Vector take_asset(PricePanel& panel, std::string_view label) {
  auto it = std::find(panel.labels.begin(), panel.labels.end(), label);
  if (it == panel.labels.end()) {
    throw IngestionError("prices: no column named '" + std::string(label) + "'");
  }
  const auto idx = static_cast<Eigen::Index>(it - panel.labels.begin());
  Vector series = panel.prices.row(idx).transpose();
  const Eigen::Index m = panel.assets();
  Matrix rest(m - 1, panel.periods());
  for (Eigen::Index i = 0, k = 0; i < m; ++i) {
    if (i != idx) rest.row(k++) = panel.prices.row(i);
  }
  panel.prices = std::move(rest);
  panel.labels.erase(it);
  panel.fill_counts.erase(panel.fill_counts.begin() + idx);
  return series;
}

ReturnsPanel to_returns(const PricePanel& panel) {
  if (panel.periods() < 2) {
    throw IngestionError("to_returns: need at least two price dates");
  }
  ReturnsPanel out;
  out.labels = panel.labels;
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  const Eigen::Index t = panel.periods() - 1;
  out.returns = (panel.prices.rightCols(t).array() /
                 panel.prices.leftCols(t).array() - 1.0).matrix();
  return out;
}

std::string_view to_string(Estimator e) {
  return e == Estimator::scm ? "scm" : "rmt_tyler_whitened";
}

Estimator estimator_from_string(std::string_view s) {
  if (s == "scm") return Estimator::scm;
  if (s == "rmt_tyler_whitened" || s == "rmt") return Estimator::rmt_tyler_whitened;
  throw ParameterError("unknown estimator '" + std::string(s) +
                       "' (expected scm or rmt_tyler_whitened)");
}

void BacktestConfig::validate() const {
  if (window_days < 2) throw ParameterError("backtest: window_days must be >= 2");
  if (rebalance_days < 1) throw ParameterError("backtest: rebalance_days must be >= 1");
  if (annualization_days < 1) {
    throw ParameterError("backtest: annualization_days must be >= 1");
  }
  optimizer.validate();
  cleaning.tyler.validate();
}

std::vector<RebalancePeriod> rolling_schedule(Eigen::Index periods,
                                              Eigen::Index window_days,
                                              Eigen::Index rebalance_days) {
  if (window_days < 1 || rebalance_days < 1) {
    throw ParameterError("rolling_schedule: window and rebalance must be >= 1");
  }
  const Eigen::Index required = window_days + rebalance_days;
  if (periods < required) {
    throw IngestionError("rolling_schedule: insufficient history: " +
                         std::to_string(periods) + " returns, need at least " +
                         std::to_string(required) + " (window " +
                         std::to_string(window_days) + " + rebalance " +
                         std::to_string(rebalance_days) + ")");
  }
  std::vector<RebalancePeriod> out;
  for (Eigen::Index s = window_days; s + rebalance_days <= periods; s += rebalance_days) {
    out.push_back({s - window_days, s, s, s + rebalance_days});
  }
  return out;
}

std::vector<RebalancePeriod> rolling_schedule(const ReturnsPanel& panel,
                                              const BacktestConfig& cfg) {
  if (cfg.estimator == Estimator::rmt_tyler_whitened && panel.assets() > 1 &&
      cfg.window_days <= panel.assets()) {
    throw ParameterError("backtest: window_days (" + std::to_string(cfg.window_days) +
                         ") must exceed the asset count (" +
                         std::to_string(panel.assets()) + ") for the Tyler estimator");
  }
  return rolling_schedule(panel.periods(), cfg.window_days, cfg.rebalance_days);
}

double turnover(const alloc::WeightVector& prev, const alloc::WeightVector& next) {
  if (prev.size() != next.size()) {
    throw ParameterError("turnover: dimension mismatch");
  }
  return std::min(2.0, (prev.values() - next.values()).cwiseAbs().sum());
}

PerfStats perf_stats(const std::vector<double>& wealth, int annualization_days) {
  if (wealth.size() < 2) throw ParameterError("perf_stats: need at least two points");
  if (annualization_days < 1) {
    throw ParameterError("perf_stats: annualization_days must be >= 1");
  }
  for (double w : wealth) {
    if (!(w > 0.0)) throw ParameterError("perf_stats: wealth must be positive");
  }
  PerfStats out;
  const double steps = static_cast<double>(wealth.size() - 1);
  const double ann = static_cast<double>(annualization_days);
  out.annualized_return = std::pow(wealth.back() / wealth.front(), ann / steps) - 1.0;

  std::vector<double> r(wealth.size() - 1);
  for (std::size_t t = 1; t < wealth.size(); ++t) r[t - 1] = wealth[t] / wealth[t - 1] - 1.0;
  if (r.size() >= 2) {
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    out.annualized_volatility =
        std::sqrt(ss / static_cast<double>(r.size() - 1)) * std::sqrt(ann);
  }
  if (out.annualized_volatility > 0.0) {
    out.ratio = out.annualized_return / out.annualized_volatility;
  }
  double peak = wealth.front();
  for (double w : wealth) {
    peak = std::max(peak, w);
    out.max_drawdown = std::max(out.max_drawdown, 1.0 - w / peak);
  }
  return out;
}

std::vector<double> BacktestResult::cumulative_turnover() const {
  std::vector<double> out(turnover.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < turnover.size(); ++i) out[i] = acc += turnover[i];
  return out;
}

WindowEstimate estimate_window(const Matrix& window, const BacktestConfig& cfg) {
  WindowEstimate out;
  if (cfg.estimator == Estimator::scm) {
    out.covariance = robust::scm(robust::demean(window)).values();
  } else {
    rmt::CleaningReport report = rmt::clean_covariance(window, cfg.cleaning);
    out.covariance = report.denoised;
    out.report = std::move(report);
  }
  return out;
}

BacktestResult run_backtest(const ReturnsPanel& panel, const BacktestConfig& cfg) {
  cfg.validate();
  const Eigen::Index m = panel.assets();
  if (m < 1) throw IngestionError("backtest: panel has no assets");
  if (static_cast<Eigen::Index>(panel.dates.size()) != panel.periods()) {
    throw ParameterError("backtest: date count does not match return count");
  }

  BacktestResult result;
  result.estimator = cfg.estimator;
  result.schedule = rolling_schedule(panel, cfg);

  double wealth = 100.0;
  result.wealth.push_back(wealth);
  result.wealth_dates.push_back(panel.dates[static_cast<std::size_t>(
      result.schedule.front().window_end - 1)]);

  std::optional<alloc::WeightVector> previous;
  for (const RebalancePeriod& period : result.schedule) {
    const std::string& date =
        panel.dates[static_cast<std::size_t>(period.window_end - 1)];
    result.rebalance_dates.push_back(date);

    std::optional<alloc::WeightVector> target;
    double vr = 1.0;
    try {
      if (m == 1) {
        // The simplex is a single point; no estimate needed.
        target.emplace(Vector::Ones(1));
      } else {
        const Matrix window = panel.returns.middleCols(
            period.window_begin, period.window_end - period.window_begin);
        WindowEstimate est = estimate_window(window, cfg);
        alloc::CovarianceInput cov(std::move(est.covariance));
        alloc::OptimizationResult opt = alloc::maximize_variety_detailed(cov, cfg.optimizer);
        vr = opt.variety_ratio;
        target.emplace(opt.weights);
        if (est.report) {
          result.k_hat.push_back(est.report->k_hat);
          result.selected_eigenvalues.push_back(est.report->selected_eigenvalues());
          result.lambda_bar.push_back(est.report->lambda_bar);
        }
      }
    } catch (const Error& e) {
      throw BacktestError(e.kind(), "backtest: rebalance at " + date + " failed: " + e.what(),
                          date);
    }
    if (m == 1 && cfg.estimator == Estimator::rmt_tyler_whitened) {
      result.k_hat.push_back(0);
      result.selected_eigenvalues.emplace_back();
      result.lambda_bar.push_back(0.0);
    }

    if (previous) result.turnover.push_back(turnover(*previous, *target));
    result.weights.push_back(target->values());
    result.variety_ratio.push_back(vr);

    // Buy-and-hold: holdings drift with prices inside the period.
    Vector holdings = wealth * target->values();
    for (Eigen::Index t = period.hold_begin; t < period.hold_end; ++t) {
      holdings = holdings.cwiseProduct((panel.returns.col(t).array() + 1.0).matrix());
      wealth = holdings.sum();
      result.wealth.push_back(wealth);
      result.wealth_dates.push_back(panel.dates[static_cast<std::size_t>(t)]);
    }
    previous = std::move(target);
  }
  result.stats = perf_stats(result.wealth, cfg.annualization_days);
  return result;
}

std::vector<double> benchmark_wealth(const Vector& prices, const BacktestResult& result) {
  if (result.schedule.empty()) return {};
  // Return index s spans prices s -> s + 1.
  const Eigen::Index start = result.schedule.front().hold_begin;
  const Eigen::Index end = result.schedule.back().hold_end;
  if (end >= prices.size()) {
    throw ParameterError("benchmark_wealth: price series shorter than the backtest");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(end - start + 1));
  for (Eigen::Index t = start; t <= end; ++t) {
    out.push_back(100.0 * prices[t] / prices[start]);
  }
  return out;
}

}  // namespace rmtfolio::backtest
