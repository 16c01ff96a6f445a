#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "occf/errors.hpp"
#include "occf/harness.hpp"

namespace occf {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + num(values[i]);
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParameterError("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_pairs() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"experiment", experiment},
      {"pf", list(pf)},
      {"ts_grid", list(ts_grid)},
      {"tr_grid", list(tr_grid)},
      {"replicates", std::to_string(replicates)},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
      {"model", model},
      {"n_users", std::to_string(n_users)},
      {"n_items", std::to_string(n_items)},
      {"n_types", std::to_string(n_types)},
      {"delta", num(delta)},
      {"nu", num(nu)},
      {"gamma_target", gamma_target ? num(*gamma_target) : "none"},
      {"observed_fraction", num(observed_fraction)},
      {"corpus", corpus.empty() ? "none" : corpus},
      {"alpha", num(alpha)},
      {"eta", num(eta)},
      {"batch_size", std::to_string(batch_size)},
      {"k_neighbors", std::to_string(k_neighbors)},
      {"allow_repeat", b(allow_repeat)},
      {"random_on_cold", b(random_on_cold)},
      {"sim_skip_rated_only", b(sim_skip_rated_only)},
      {"fixed_ratings", b(fixed_ratings)},
      {"use_recommended", b(use_recommended)},
      {"pref_factor", num(pref_factor)},
      {"ts_fixed", num(ts_fixed)},
      {"exploit_scope", exploit_scope},
      {"horizon", std::to_string(horizon)},
      {"confidence", num(confidence)},
      {"lambda", num(lambda)},
      {"output", output.empty() ? "none" : output},
  };
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [key, value] : ExperimentConfig{}.to_pairs()) out.push_back(key);
  return out;
}

void ExperimentConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, raw] : values) {
    const std::string value = trim(raw);
    if (key == "experiment") experiment = value;
    else if (key == "pf") pf = to_list(key, value);
    else if (key == "ts_grid") ts_grid = to_list(key, value);
    else if (key == "tr_grid") tr_grid = to_list(key, value);
    else if (key == "replicates") replicates = static_cast<int>(to_long(key, value));
    else if (key == "seed") seed = to_u64(key, value);
    else if (key == "threads") threads = static_cast<int>(to_long(key, value));
    else if (key == "model") model = value;
    else if (key == "n_users") n_users = static_cast<int>(to_long(key, value));
    else if (key == "n_items") n_items = static_cast<int>(to_long(key, value));
    else if (key == "n_types") n_types = static_cast<int>(to_long(key, value));
    else if (key == "delta") delta = to_double(key, value);
    else if (key == "nu") nu = to_double(key, value);
    else if (key == "gamma_target") {
      if (value == "none" || value.empty()) gamma_target.reset();
      else gamma_target = to_double(key, value);
    }
    else if (key == "observed_fraction") observed_fraction = to_double(key, value);
    else if (key == "corpus") corpus = value == "none" ? "" : value;
    else if (key == "alpha") alpha = to_double(key, value);
    else if (key == "eta") eta = to_double(key, value);
    else if (key == "batch_size") batch_size = static_cast<int>(to_long(key, value));
    else if (key == "k_neighbors") k_neighbors = static_cast<int>(to_long(key, value));
    else if (key == "allow_repeat") allow_repeat = to_bool(key, value);
    else if (key == "random_on_cold") random_on_cold = to_bool(key, value);
    else if (key == "sim_skip_rated_only") sim_skip_rated_only = to_bool(key, value);
    else if (key == "fixed_ratings") fixed_ratings = to_bool(key, value);
    else if (key == "use_recommended") use_recommended = to_bool(key, value);
    else if (key == "pref_factor") pref_factor = to_double(key, value);
    else if (key == "ts_fixed") ts_fixed = to_double(key, value);
    else if (key == "exploit_scope") exploit_scope = value;
    else if (key == "horizon") horizon = to_long(key, value);
    else if (key == "confidence") confidence = to_double(key, value);
    else if (key == "lambda") lambda = to_double(key, value);
    else if (key == "output") output = value == "none" ? "" : value;
    else throw ParameterError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> ids{"one-vs-two", "sim-scaling", "pref-scaling",
                                            "synthetic-theorem"};
  if (std::find(ids.begin(), ids.end(), experiment) == ids.end())
    throw ParameterError("unknown experiment '" + experiment + "'");
  if (pf.empty()) throw ParameterError("pf list is empty");
  for (double p : pf)
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError("pf values must lie in (0, 1]");
  if (ts_grid.empty()) throw ParameterError("ts_grid is empty");
  if (tr_grid.empty()) throw ParameterError("tr_grid is empty");
  for (double x : ts_grid)
    if (x < 0) throw ParameterError("ts_grid values must be non-negative");
  for (double x : tr_grid)
    if (x < 0) throw ParameterError("tr_grid values must be non-negative");
  if (replicates < 1) throw ParameterError("replicates must be at least 1");
  if (threads < 1) throw ParameterError("threads must be at least 1");
  if (model != "random" && model != "blocks") throw ParameterError("model must be random or blocks");
  if (horizon < 1) throw ParameterError("horizon must be at least 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("confidence must lie in (0, 1)");
  if (exploit_scope != "i2" && exploit_scope != "all")
    throw ParameterError("exploit_scope must be i2 or all");
  if (pref_factor <= 0 || ts_fixed < 0) throw ParameterError("staging factors must be positive");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

ModelParams model_params(const ExperimentConfig& cfg, double pf) {
  ModelParams p;
  p.n_users = cfg.n_users;
  p.n_items = cfg.n_items;
  p.n_types = cfg.n_types;
  p.delta = cfg.delta;
  p.nu = cfg.nu;
  p.pf = pf;
  p.gamma_target = cfg.gamma_target;
  return p;
}

AlgoParams algo_params(const ExperimentConfig& cfg, FeedbackMode mode) {
  AlgoParams a;
  a.alpha = cfg.alpha;
  a.eta = cfg.eta;
  a.batch_size = cfg.batch_size;
  a.k_neighbors = cfg.k_neighbors;
  a.feedback_mode = mode;
  a.allow_repeat = cfg.allow_repeat;
  a.random_on_cold = cfg.random_on_cold;
  a.sim_skip_rated_only = cfg.sim_skip_rated_only;
  return a;
}

}  // namespace occf
