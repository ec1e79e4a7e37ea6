#include "bdpp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bdpp {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError(path + "." + key, "unknown key");
}

double get_num(const json& obj, const std::string& path, const std::string& key,
               double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(path + "." + key, "missing required field");
    return fallback;
  }
  if (!obj[key].is_number())
    throw ConfigError(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

std::string get_str(const json& obj, const std::string& path,
                    const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string())
    throw ConfigError(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

AlphaRegVariant parse_alpha_variant(const std::string& s, const std::string& path) {
  if (s == "none") return AlphaRegVariant::None;
  if (s == "l2_adam_emulated") return AlphaRegVariant::L2AdamEmulated;
  if (s == "weight_decay") return AlphaRegVariant::WeightDecay;
  if (s == "beta_decay") return AlphaRegVariant::BetaDecay;
  if (s == "beta_global") return AlphaRegVariant::BetaGlobal;
  if (s == "beta_zero") return AlphaRegVariant::BetaZero;
  throw ConfigError(path, "unknown alpha regularizer variant '" + s + "'");
}

WeightRegVariant parse_weight_variant(const std::string& s, const std::string& path) {
  if (s == "l2") return WeightRegVariant::L2;
  if (s == "larger_l2") return WeightRegVariant::LargerL2;
  if (s == "random_smoothing") return WeightRegVariant::RandomSmoothing;
  if (s == "flooding") return WeightRegVariant::Flooding;
  throw ConfigError(path, "unknown weight regularizer variant '" + s + "'");
}

LambdaKind parse_lambda_kind(const std::string& s, const std::string& path) {
  if (s == "constant") return LambdaKind::Constant;
  if (s == "linear_increase") return LambdaKind::LinearIncrease;
  if (s == "linear_decay") return LambdaKind::LinearDecay;
  throw ConfigError(path, "unknown schedule kind '" + s + "'");
}

StopCriterion parse_criterion(const std::string& s, const std::string& path) {
  if (s == "none") return StopCriterion::None;
  if (s == "c1") return StopCriterion::C1;
  if (s == "c2") return StopCriterion::C2;
  if (s == "c3") return StopCriterion::C3;
  throw ConfigError(path, "unknown early stop criterion '" + s + "'");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("(document)", std::string("invalid JSON: ") + e.what());
  }
  require_keys(doc, "(root)",
               {"search", "regularizers", "proxy", "task", "benchmark", "output"});
  RunConfig cfg;

  if (doc.contains("search")) {
    const auto& s = doc["search"];
    require_keys(s, "search",
                 {"eta_alpha", "eta_w", "batch_size", "split_fraction_w",
                  "early_stop", "seed", "plateau_window", "plateau_tol"});
    cfg.search.eta_alpha = get_num(s, "search", "eta_alpha", cfg.search.eta_alpha);
    cfg.search.eta_w = get_num(s, "search", "eta_w", cfg.search.eta_w);
    cfg.search.batch_size = static_cast<std::size_t>(
        get_num(s, "search", "batch_size", static_cast<double>(cfg.search.batch_size)));
    cfg.search.split_fraction_w =
        get_num(s, "search", "split_fraction_w", cfg.search.split_fraction_w);
    cfg.search.early_stop = parse_criterion(
        get_str(s, "search", "early_stop", "none"), "search.early_stop");
    cfg.search.seed = static_cast<std::uint64_t>(
        get_num(s, "search", "seed", static_cast<double>(cfg.search.seed)));
    cfg.search.plateau_window = static_cast<int>(
        get_num(s, "search", "plateau_window", cfg.search.plateau_window));
    cfg.search.plateau_tol =
        get_num(s, "search", "plateau_tol", cfg.search.plateau_tol);
    if (!(cfg.search.eta_alpha > 0.0))
      throw ConfigError("search.eta_alpha", "must be > 0");
    if (!(cfg.search.eta_w > 0.0))
      throw ConfigError("search.eta_w", "must be > 0");
    if (cfg.search.batch_size < 1)
      throw ConfigError("search.batch_size", "must be >= 1");
    if (!(cfg.search.split_fraction_w > 0.0 && cfg.search.split_fraction_w < 1.0))
      throw ConfigError("search.split_fraction_w", "must be in (0,1)");
    if (cfg.search.plateau_window < 1)
      throw ConfigError("search.plateau_window", "must be >= 1");
  }

  if (doc.contains("proxy")) {
    const auto& p = doc["proxy"];
    require_keys(p, "proxy", {"data_fraction", "channels", "layers", "epochs"});
    auto& px = cfg.search.proxy;
    px.data_fraction = get_num(p, "proxy", "data_fraction", px.data_fraction);
    px.channels = static_cast<std::size_t>(
        get_num(p, "proxy", "channels", static_cast<double>(px.channels)));
    px.layers = static_cast<std::size_t>(
        get_num(p, "proxy", "layers", static_cast<double>(px.layers)));
    px.max_epochs = static_cast<int>(get_num(p, "proxy", "epochs", px.max_epochs));
    if (!(px.data_fraction > 0.0 && px.data_fraction <= 1.0))
      throw ConfigError("proxy.data_fraction", "must be in (0,1]");
    if (px.channels < 1) throw ConfigError("proxy.channels", "must be >= 1");
    if (px.layers < 1) throw ConfigError("proxy.layers", "must be >= 1");
    if (px.max_epochs < 1) throw ConfigError("proxy.epochs", "must be >= 1");
  }

  if (doc.contains("regularizers")) {
    const auto& r = doc["regularizers"];
    require_keys(r, "regularizers", {"alpha", "weight"});
    if (r.contains("alpha")) {
      const auto& a = r["alpha"];
      require_keys(a, "regularizers.alpha", {"variant", "schedule"});
      cfg.search.alpha_reg.variant = parse_alpha_variant(
          get_str(a, "regularizers.alpha", "variant", "none"),
          "regularizers.alpha.variant");
      if (a.contains("schedule")) {
        const auto& sc = a["schedule"];
        require_keys(sc, "regularizers.alpha.schedule", {"kind", "start", "end"});
        auto& sch = cfg.search.alpha_reg.schedule;
        sch.kind = parse_lambda_kind(
            get_str(sc, "regularizers.alpha.schedule", "kind", "constant"),
            "regularizers.alpha.schedule.kind");
        sch.start = get_num(sc, "regularizers.alpha.schedule", "start", 0.0);
        sch.end = get_num(sc, "regularizers.alpha.schedule", "end", sch.start);
        if (sch.kind == LambdaKind::Constant) sch.end = sch.start;
        if (sch.start < 0.0 || sch.end < 0.0)
          throw ConfigError("regularizers.alpha.schedule", "lambda must be >= 0");
        if (sch.kind == LambdaKind::LinearIncrease && sch.end < sch.start)
          throw ConfigError("regularizers.alpha.schedule",
                            "linear_increase requires end >= start");
        if (sch.kind == LambdaKind::LinearDecay && sch.end > sch.start)
          throw ConfigError("regularizers.alpha.schedule",
                            "linear_decay requires end <= start");
      }
    }
    if (r.contains("weight")) {
      const auto& w = r["weight"];
      require_keys(w, "regularizers.weight", {"variant", "coefficient"});
      cfg.search.weight_reg.variant =
          parse_weight_variant(get_str(w, "regularizers.weight", "variant", "l2"),
                               "regularizers.weight.variant");
      cfg.search.weight_reg.coefficient =
          get_num(w, "regularizers.weight", "coefficient", 0.0);
      if (cfg.search.weight_reg.coefficient < 0.0)
        throw ConfigError("regularizers.weight.coefficient", "must be >= 0");
    }
  }

  if (doc.contains("task")) {
    const auto& t = doc["task"];
    require_keys(t, "task", {"seed", "n", "dim", "num_classes", "noise"});
    cfg.task.seed = static_cast<std::uint64_t>(
        get_num(t, "task", "seed", static_cast<double>(cfg.task.seed)));
    cfg.task.n = static_cast<std::size_t>(
        get_num(t, "task", "n", static_cast<double>(cfg.task.n)));
    cfg.task.dim = static_cast<std::size_t>(
        get_num(t, "task", "dim", static_cast<double>(cfg.task.dim)));
    cfg.task.num_classes = static_cast<std::size_t>(
        get_num(t, "task", "num_classes", static_cast<double>(cfg.task.num_classes)));
    cfg.task.noise = get_num(t, "task", "noise", cfg.task.noise);
    if (cfg.task.n < 2) throw ConfigError("task.n", "must be >= 2");
    if (cfg.task.num_classes < 2)
      throw ConfigError("task.num_classes", "must be >= 2");
    if (cfg.task.dim < cfg.task.num_classes)
      throw ConfigError("task.dim", "must be >= task.num_classes");
    if (!(cfg.task.noise > 0.0)) throw ConfigError("task.noise", "must be > 0");
  }

  if (cfg.task.dim < cfg.search.proxy.channels)
    throw ConfigError("proxy.channels", "must be <= task.dim");

  if (doc.contains("benchmark")) {
    const auto& b = doc["benchmark"];
    require_keys(b, "benchmark", {"mode", "seed", "path"});
    const std::string mode = get_str(b, "benchmark", "mode", "none");
    if (mode == "none") {
      cfg.benchmark.mode = BenchmarkRef::Mode::None;
    } else if (mode == "generated") {
      cfg.benchmark.mode = BenchmarkRef::Mode::Generated;
      cfg.benchmark.seed =
          static_cast<std::uint64_t>(get_num(b, "benchmark", "seed", 0.0));
    } else if (mode == "imported") {
      cfg.benchmark.mode = BenchmarkRef::Mode::Imported;
      cfg.benchmark.path = get_str(b, "benchmark", "path", "");
      if (cfg.benchmark.path.empty())
        throw ConfigError("benchmark.path", "required for imported mode");
    } else {
      throw ConfigError("benchmark.mode", "must be none|generated|imported");
    }
  }

  if (doc.contains("output")) {
    const auto& o = doc["output"];
    require_keys(o, "output", {"trajectory"});
    cfg.trajectory_path = get_str(o, "output", "trajectory", cfg.trajectory_path);
  }

  // the schedule spans the whole search
  cfg.search.alpha_reg.schedule.total_epochs = cfg.search.proxy.max_epochs;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace bdpp
