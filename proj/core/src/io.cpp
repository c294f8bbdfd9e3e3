#include "rmtfolio/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "rmtfolio/errors.hpp"

namespace rmtfolio::io {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorKind::numerical, "format_double failed");
  return std::string(buf.data(), ptr);
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IngestionError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IngestionError("cannot rename " + tmp.string() + " to " + path.string() +
                         ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(start, nl - start));
    if (!line.empty()) out.push_back(line);
    start = nl + 1;
  }
  return out;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double to_number(std::string_view s, std::size_t line_no, std::size_t col) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw IngestionError("csv: line " + std::to_string(line_no) + ", column " +
                         std::to_string(col) + ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json stats_json(const backtest::PerfStats& s) {
  return json{{"annualized_return", s.annualized_return},
              {"annualized_volatility", s.annualized_volatility},
              {"ratio", optional_json(s.ratio)},
              {"max_drawdown", s.max_drawdown}};
}

// Days since 1970-01-01 for a proleptic Gregorian date, and back.
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y, m, d);
  return buf;
}

bool is_weekend(long days) {
  // 1970-01-01 was a Thursday.
  const long wd = ((days % 7) + 7 + 3) % 7;  // 0 = Monday
  return wd >= 5;
}

}  // namespace

// --- matrices ---------------------------------------------------------------

std::string format_matrix_csv(const Matrix& a, robust::Normalization tag) {
  std::string out = std::to_string(a.rows()) + "," + std::string(robust::to_string(tag)) + "\n";
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) out += ',';
      out += format_double(a(i, j));
    }
    out += '\n';
  }
  return out;
}

MatrixFile parse_matrix_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw IngestionError("matrix csv: empty input");
  const auto header = fields_of(lines[0]);
  if (header.size() != 2) {
    throw IngestionError("matrix csv: header must be '<m>,<normalization>'");
  }
  const double md = to_number(header[0], 1, 1);
  if (md < 1 || md != std::floor(md)) throw IngestionError("matrix csv: bad dimension");
  const auto m = static_cast<Eigen::Index>(md);
  MatrixFile out;
  try {
    out.normalization = robust::normalization_from_string(header[1]);
  } catch (const ParameterError& e) {
    throw IngestionError(std::string("matrix csv: ") + e.what());
  }
  if (static_cast<Eigen::Index>(lines.size()) != m + 1) {
    throw IngestionError("matrix csv: expected " + std::to_string(m) + " rows");
  }
  out.values.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto f = fields_of(lines[static_cast<std::size_t>(i + 1)]);
    if (static_cast<Eigen::Index>(f.size()) != m) {
      throw IngestionError("matrix csv: line " + std::to_string(i + 2) + " has " +
                           std::to_string(f.size()) + " values, expected " +
                           std::to_string(m));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      out.values(i, j) = to_number(f[static_cast<std::size_t>(j)],
                                   static_cast<std::size_t>(i + 2),
                                   static_cast<std::size_t>(j + 1));
    }
  }
  return out;
}

// --- returns ----------------------------------------------------------------

std::string format_returns_csv(const ReturnsTable& t, Layout layout) {
  const Eigen::Index m = t.data.rows();
  const Eigen::Index n = t.data.cols();
  std::string out;
  if (layout == Layout::assets_as_columns) {
    out += "t";
    for (const auto& l : t.labels) out += "," + l;
    out += '\n';
    for (Eigen::Index k = 0; k < n; ++k) {
      out += t.keys[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < m; ++i) out += "," + format_double(t.data(i, k));
      out += '\n';
    }
  } else {
    out += "asset";
    for (const auto& k : t.keys) out += "," + k;
    out += '\n';
    for (Eigen::Index i = 0; i < m; ++i) {
      out += t.labels[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < n; ++k) out += "," + format_double(t.data(i, k));
      out += '\n';
    }
  }
  return out;
}

ReturnsTable parse_returns_csv(std::string_view text, Layout layout) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw IngestionError("returns csv: need a header and data rows");
  const auto header = fields_of(lines[0]);
  if (header.size() < 2) throw IngestionError("returns csv: header has no value columns");
  const std::size_t rows = lines.size() - 1;
  const std::size_t cols = header.size() - 1;

  std::vector<std::string> row_keys;
  Matrix grid(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto f = fields_of(lines[r + 1]);
    if (f.size() != header.size()) {
      throw IngestionError("returns csv: line " + std::to_string(r + 2) + " has " +
                           std::to_string(f.size()) + " fields, expected " +
                           std::to_string(header.size()));
    }
    row_keys.emplace_back(f[0]);
    for (std::size_t c = 0; c < cols; ++c) {
      grid(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          to_number(f[c + 1], r + 2, c + 2);
    }
  }
  std::vector<std::string> col_keys;
  for (std::size_t c = 1; c < header.size(); ++c) col_keys.emplace_back(header[c]);

  ReturnsTable out;
  if (layout == Layout::assets_as_columns) {
    out.labels = std::move(col_keys);
    out.keys = std::move(row_keys);
    out.data = grid.transpose();
  } else {
    out.labels = std::move(row_keys);
    out.keys = std::move(col_keys);
    out.data = std::move(grid);
  }
  return out;
}

ReturnsTable synthetic_table(const Matrix& returns) {
  ReturnsTable t;
  t.data = returns;
  const int width = returns.rows() >= 1000 ? 4 : 3;
  for (Eigen::Index i = 0; i < returns.rows(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "A%0*ld", width, static_cast<long>(i + 1));
    t.labels.emplace_back(buf);
  }
  for (Eigen::Index k = 0; k < returns.cols(); ++k) t.keys.push_back(std::to_string(k));
  return t;
}

std::string format_prices_csv(const ReturnsTable& t, std::string_view start_date,
                              double scale) {
  if (!(scale > 0.0)) throw ParameterError("price scale must be > 0");
  if (!backtest::is_iso_date(start_date)) {
    throw ParameterError("start date must be YYYY-MM-DD");
  }
  const std::string s(start_date);
  long day = days_from_civil(std::stoi(s.substr(0, 4)),
                             static_cast<unsigned>(std::stoi(s.substr(5, 2))),
                             static_cast<unsigned>(std::stoi(s.substr(8, 2))));
  while (is_weekend(day)) ++day;
  auto next_weekday = [&] {
    do ++day;
    while (is_weekend(day));
  };

  std::string out = "Date";
  for (const auto& l : t.labels) out += "," + l;
  out += '\n';
  Vector price = Vector::Constant(t.data.rows(), 100.0);
  auto emit = [&] {
    out += civil_from_days(day);
    for (Eigen::Index i = 0; i < price.size(); ++i) out += "," + format_double(price[i]);
    out += '\n';
  };
  emit();
  for (Eigen::Index k = 0; k < t.data.cols(); ++k) {
    for (Eigen::Index i = 0; i < price.size(); ++i) {
      const double r = scale * t.data(i, k);
      if (!(r > -1.0)) throw DegenerateError("returns <= -100% cannot be compounded");
      price[i] *= 1.0 + r;
    }
    next_weekday();
    emit();
  }
  return out;
}

std::string ground_truth_json(const market::FactorModelSpec& spec,
                              const market::SyntheticPanel& panel) {
  json j;
  j["spec"] = {{"m", spec.m},     {"N", spec.n},
               {"K", spec.k},     {"rho", spec.rho},
               {"nu", spec.nu},   {"factor_snr", spec.factor_snr},
               {"seed", spec.seed}};
  j["K"] = spec.k;
  json loadings = json::array();
  for (Eigen::Index i = 0; i < panel.true_loadings.rows(); ++i) {
    loadings.push_back(vector_json(panel.true_loadings.row(i).transpose()));
  }
  j["loadings"] = std::move(loadings);
  j["textures"] = vector_json(panel.textures);
  j["scatter_lag_values"] = vector_json(panel.true_scatter.row(0).transpose());
  return j.dump(2) + "\n";
}

// --- cleaning ---------------------------------------------------------------

Histogram log_histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1) throw ParameterError("histogram: bins must be >= 1");
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  }
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!(v > 0.0)) continue;
    const double x = std::log(v);
    int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

Histogram log_histogram(const std::vector<double>& values, int bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!(v > 0.0)) continue;
    lo = std::min(lo, std::log(v));
    hi = std::max(hi, std::log(v));
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  return log_histogram(values, bins, lo, hi);
}

std::string format_histogram_csv(const Histogram& h) {
  std::string out = "log_lambda_left,log_lambda_right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += format_double(h.edges[b]) + "," + format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
  }
  return out;
}

std::string cleaning_report_json(const rmt::CleaningReport& r,
                                 const std::vector<std::string>& labels) {
  json j;
  j["k_hat"] = r.k_hat;
  j["lambda_bar"] = r.lambda_bar;
  j["log_lambda_bar"] = std::log(r.lambda_bar);
  j["ratio_c"] = r.ratio_c;
  j["m"] = r.spectrum.size();
  j["eigenvalues"] = vector_json(r.spectrum.eigenvalues);
  j["selected_eigenvalues"] = vector_json(r.selected_eigenvalues());
  j["clipped_eigenvalues"] = vector_json(r.clipped_spectrum);
  j["normalization"] = std::string(robust::to_string(r.normalization));
  j["tyler_iterations"] = r.tyler_iterations;
  j["whitened_tyler_iterations"] = r.whitened_tyler_iterations;
  j["warnings"] = r.warnings;
  j["labels"] = labels;
  return j.dump(2) + "\n";
}

// --- allocation -------------------------------------------------------------

std::string format_weights_csv(const std::vector<std::string>& labels, const Vector& w) {
  std::string out = "asset,weight\n";
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    out += labels[static_cast<std::size_t>(i)] + "," + format_double(w[i]) + "\n";
  }
  return out;
}

std::string weights_json(const std::vector<std::string>& labels,
                         const alloc::OptimizationResult& r, std::string_view estimator) {
  json weights = json::object();
  for (Eigen::Index i = 0; i < r.weights.size(); ++i) {
    weights[labels[static_cast<std::size_t>(i)]] = r.weights[i];
  }
  json j;
  j["estimator"] = std::string(estimator);
  j["weights"] = std::move(weights);
  j["diagnostics"] = {{"variety_ratio", r.variety_ratio},
                      {"iterations", r.iterations},
                      {"total_iterations", r.total_iterations},
                      {"kkt_residual", r.kkt_residual},
                      {"best_start", r.best_start}};
  return j.dump(2) + "\n";
}

// --- backtest ---------------------------------------------------------------

std::string backtest_result_json(const std::vector<backtest::BacktestResult>& results,
                                 const std::vector<std::string>& labels,
                                 const backtest::BacktestConfig& cfg,
                                 const std::optional<BenchmarkSeries>& benchmark) {
  json j;
  j["config"] = {{"window_days", cfg.window_days},
                 {"rebalance_days", cfg.rebalance_days},
                 {"annualization_days", cfg.annualization_days},
                 {"optimizer",
                  {{"starts", cfg.optimizer.starts},
                   {"max_iter", cfg.optimizer.max_iter},
                   {"tol_vr", cfg.optimizer.tol_vr},
                   {"kkt_tol", cfg.optimizer.kkt_tol},
                   {"seed", cfg.optimizer.seed}}},
                 {"tyler",
                  {{"max_iter", cfg.cleaning.tyler.max_iter},
                   {"tol", cfg.cleaning.tyler.tol},
                   {"eigen_floor", cfg.cleaning.tyler.eigen_floor}}},
                 {"demean", cfg.cleaning.demean}};
  j["assets"] = labels;
  json est = json::object();
  for (const auto& r : results) {
    json e;
    e["summary"] = stats_json(r.stats);
    e["final_wealth"] = r.wealth.back();
    e["rebalances"] = r.rebalance_dates.size();
    double total = 0.0;
    for (double t : r.turnover) total += t;
    e["cumulative_turnover"] = total;
    e["rebalance_dates"] = r.rebalance_dates;
    if (!r.k_hat.empty()) {
      e["k_hat"] = r.k_hat;
      json sel = json::array();
      for (const auto& v : r.selected_eigenvalues) sel.push_back(vector_json(v));
      e["selected_eigenvalues"] = std::move(sel);
      e["lambda_bar"] = r.lambda_bar;
    }
    e["variety_ratio"] = r.variety_ratio;
    est[std::string(backtest::to_string(r.estimator))] = std::move(e);
  }
  j["estimators"] = std::move(est);
  if (benchmark) {
    j["benchmark"] = {{"label", benchmark->label},
                      {"summary", stats_json(benchmark->stats)},
                      {"final_wealth", benchmark->wealth.back()}};
  }
  return j.dump(2) + "\n";
}

void write_backtest_outputs(const std::filesystem::path& dir,
                            const std::vector<backtest::BacktestResult>& results,
                            const std::vector<std::string>& labels,
                            const backtest::BacktestConfig& cfg,
                            const std::optional<BenchmarkSeries>& benchmark) {
  if (results.empty()) throw ParameterError("write_backtest_outputs: no results");
  const auto& ref = results.front();
  for (const auto& r : results) {
    if (r.schedule != ref.schedule || r.wealth_dates != ref.wealth_dates) {
      throw ParameterError("write_backtest_outputs: results use different schedules");
    }
  }
  if (benchmark && benchmark->wealth.size() != ref.wealth.size()) {
    throw ParameterError("write_backtest_outputs: benchmark length mismatch");
  }

  std::string weights = "date,estimator";
  for (const auto& l : labels) weights += "," + l;
  weights += '\n';
  for (const auto& r : results) {
    for (std::size_t p = 0; p < r.weights.size(); ++p) {
      weights += r.rebalance_dates[p] + "," + std::string(backtest::to_string(r.estimator));
      for (Eigen::Index i = 0; i < r.weights[p].size(); ++i) {
        weights += "," + format_double(r.weights[p][i]);
      }
      weights += '\n';
    }
  }

  std::string wealth = "date";
  for (const auto& r : results) wealth += "," + std::string(backtest::to_string(r.estimator));
  if (benchmark) wealth += "," + benchmark->label;
  wealth += '\n';
  for (std::size_t t = 0; t < ref.wealth.size(); ++t) {
    wealth += ref.wealth_dates[t];
    for (const auto& r : results) wealth += "," + format_double(r.wealth[t]);
    if (benchmark) wealth += "," + format_double(benchmark->wealth[t]);
    wealth += '\n';
  }

  std::string turnover = "date";
  for (const auto& r : results) {
    const std::string name(backtest::to_string(r.estimator));
    turnover += "," + name + "," + name + "_cumulative";
  }
  turnover += '\n';
  std::vector<std::vector<double>> cumulative;
  for (const auto& r : results) cumulative.push_back(r.cumulative_turnover());
  for (std::size_t p = 0; p < ref.turnover.size(); ++p) {
    turnover += ref.rebalance_dates[p + 1];
    for (std::size_t k = 0; k < results.size(); ++k) {
      turnover += "," + format_double(results[k].turnover[p]) + "," +
                  format_double(cumulative[k][p]);
    }
    turnover += '\n';
  }

  atomic_write(dir / "result.json", backtest_result_json(results, labels, cfg, benchmark));
  atomic_write(dir / "weights.csv", weights);
  atomic_write(dir / "wealth.csv", wealth);
  atomic_write(dir / "turnover.csv", turnover);
}

}  // namespace rmtfolio::io
