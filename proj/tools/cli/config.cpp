#include "cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rmtfolio/errors.hpp"

namespace rmtfolio::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ParameterError("config: unknown key '" + where + "." + it.key() + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw ParameterError("config: '" + where + "." + key + "' has the wrong type");
  }
}

void read_index(const json& obj, const char* key, Eigen::Index& dst, const std::string& where) {
  long long v = dst;
  read(obj, key, v, where);
  dst = static_cast<Eigen::Index>(v);
}

}  // namespace

io::Layout layout_from_string(const std::string& s) {
  if (s == "columns") return io::Layout::assets_as_columns;
  if (s == "rows") return io::Layout::assets_as_rows;
  throw ParameterError("layout must be 'columns' or 'rows'");
}

void RunConfig::validate() const {
  synth.validate();
  cleaning.tyler.validate();
  optimizer.validate();
  backtest.validate();
  if (trials < 1) throw ParameterError("mc-order: trials must be >= 1");
  if (bins < 1) throw ParameterError("bins must be >= 1");
  if (!(price_scale > 0.0)) throw ParameterError("price_scale must be > 0");
  if (!backtest::is_iso_date(start_date)) {
    throw ParameterError("start date must be YYYY-MM-DD");
  }
}

void apply_config_text(const std::string& text, RunConfig& cfg) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"seed", "out", "synth", "tyler", "cleaning", "optimizer", "backtest",
                  "mc_order", "synth_output"},
                 "config");
  read(root, "seed", cfg.seed, "config");
  if (root.contains("out")) {
    std::string out;
    read(root, "out", out, "config");
    cfg.out = out;
  }
  if (auto it = root.find("synth"); it != root.end()) {
    const json& s = *it;
    reject_unknown(s, {"m", "N", "K", "rho", "nu", "factor_snr"}, "synth");
    read_index(s, "m", cfg.synth.m, "synth");
    read_index(s, "N", cfg.synth.n, "synth");
    read_index(s, "K", cfg.synth.k, "synth");
    read(s, "rho", cfg.synth.rho, "synth");
    read(s, "nu", cfg.synth.nu, "synth");
    read(s, "factor_snr", cfg.synth.factor_snr, "synth");
  }
  if (auto it = root.find("tyler"); it != root.end()) {
    reject_unknown(*it, {"max_iter", "tol", "eigen_floor"}, "tyler");
    read(*it, "max_iter", cfg.cleaning.tyler.max_iter, "tyler");
    read(*it, "tol", cfg.cleaning.tyler.tol, "tyler");
    read(*it, "eigen_floor", cfg.cleaning.tyler.eigen_floor, "tyler");
  }
  if (auto it = root.find("cleaning"); it != root.end()) {
    reject_unknown(*it, {"demean", "clip_rule", "match_sample_variances"}, "cleaning");
    read(*it, "demean", cfg.cleaning.demean, "cleaning");
    read(*it, "match_sample_variances", cfg.cleaning.match_sample_variances, "cleaning");
    if (it->contains("clip_rule")) {
      std::string rule;
      read(*it, "clip_rule", rule, "cleaning");
      if (rule == "trace_preserving") {
        cfg.cleaning.clip_rule = rmt::ClipRule::trace_preserving;
      } else if (rule == "literal") {
        cfg.cleaning.clip_rule = rmt::ClipRule::literal;
      } else {
        throw ParameterError("config: cleaning.clip_rule must be trace_preserving or literal");
      }
    }
  }
  if (auto it = root.find("optimizer"); it != root.end()) {
    reject_unknown(*it, {"starts", "max_iter", "tol_vr", "kkt_tol"}, "optimizer");
    read(*it, "starts", cfg.optimizer.starts, "optimizer");
    read(*it, "max_iter", cfg.optimizer.max_iter, "optimizer");
    read(*it, "tol_vr", cfg.optimizer.tol_vr, "optimizer");
    read(*it, "kkt_tol", cfg.optimizer.kkt_tol, "optimizer");
  }
  if (auto it = root.find("backtest"); it != root.end()) {
    reject_unknown(*it,
                   {"window_days", "rebalance_days", "estimator", "annualization_days",
                    "compare", "benchmark", "missing"},
                   "backtest");
    read_index(*it, "window_days", cfg.backtest.window_days, "backtest");
    read_index(*it, "rebalance_days", cfg.backtest.rebalance_days, "backtest");
    read(*it, "annualization_days", cfg.backtest.annualization_days, "backtest");
    read(*it, "compare", cfg.compare, "backtest");
    if (it->contains("estimator")) {
      std::string e;
      read(*it, "estimator", e, "backtest");
      cfg.backtest.estimator = backtest::estimator_from_string(e);
    }
    if (it->contains("benchmark")) {
      std::string b;
      read(*it, "benchmark", b, "backtest");
      cfg.benchmark = b;
    }
    if (it->contains("missing")) {
      std::string p;
      read(*it, "missing", p, "backtest");
      if (p == "error") {
        cfg.missing = backtest::MissingPolicy::error;
      } else if (p == "ffill" || p == "forward_fill") {
        cfg.missing = backtest::MissingPolicy::forward_fill;
      } else {
        throw ParameterError("config: backtest.missing must be error or ffill");
      }
    }
  }
  if (auto it = root.find("synth_output"); it != root.end()) {
    reject_unknown(*it, {"layout", "prices", "start_date", "price_scale"}, "synth_output");
    read(*it, "price_scale", cfg.price_scale, "synth_output");
    if (it->contains("layout")) {
      std::string l;
      read(*it, "layout", l, "synth_output");
      cfg.layout = layout_from_string(l);
    }
    read(*it, "prices", cfg.write_prices, "synth_output");
    read(*it, "start_date", cfg.start_date, "synth_output");
  }
  if (auto it = root.find("mc_order"); it != root.end()) {
    reject_unknown(*it, {"trials", "bins"}, "mc_order");
    read(*it, "trials", cfg.trials, "mc_order");
    read(*it, "bins", cfg.bins, "mc_order");
  }
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(buf.str(), cfg);
}

}  // namespace rmtfolio::cli
