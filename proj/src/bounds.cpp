#include "occf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "occf/errors.hpp"

namespace occf {

namespace {

double preference_fraction(const BoundsInput& in) {
  return std::max(1.0 / in.horizon, 2.0 / (in.eta * static_cast<double>(in.batch_size)));
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0)) throw DomainError(std::string(name) + " must be positive");
}

}  // namespace

double t_start(const BoundsInput& in) {
  require_positive(static_cast<double>(in.n_users), "N");
  require_positive(static_cast<double>(in.batch_size), "Q");
  require_positive(static_cast<double>(in.k_neighbors), "k");
  require_positive(in.delta_gap, "Delta");
  require_positive(in.confidence, "delta");
  require_positive(in.horizon, "T");
  if (!(in.alpha > 0.0 && in.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");

  const double exponent = 1.0 / (1.0 - in.alpha);
  const double log_term =
      std::max(std::log(4.0 * in.n_users * in.batch_size / (in.k_neighbors * in.delta_gap)),
               std::log(88.0 / in.confidence));
  const double numerator = std::pow(512.0 * log_term, exponent);

  const double separation = 3.0 * in.pf * in.pf * (1.0 - in.gamma) * (1.0 - in.gamma) * in.nu;
  if (!(separation > 0.0))
    throw DomainError("3 pf^2 (1-gamma)^2 nu must be positive (gamma < 1, pf > 0, nu > 0)");
  const double schedule = 1.0 - preference_fraction(in);
  if (!(schedule > 0.0))
    throw DomainError("1 - max(1/T, 2/(eta Q)) must be positive (needs T > 1 and eta Q > 2)");
  return numerator / (std::pow(separation, exponent) * schedule);
}

double reward_lower_bound(const BoundsInput& in, double ts) {
  const double T = in.horizon;
  if (T < ts) throw DomainError("horizon T is below T_start");
  const double a = in.alpha;
  const double learning = std::pow(2.0, a) * std::pow(T - ts, 1.0 - a) / (T * (1.0 - a));
  return (1.0 - ts / T - learning - preference_fraction(in)) * (1.0 - in.confidence);
}

double reward_lower_bound(const BoundsInput& in) { return reward_lower_bound(in, t_start(in)); }

Prop1Bound prop1_bound(const BoundsInput& in) {
  if (!(in.lambda > 0.0 && in.lambda < 1.0)) throw DomainError("lambda must lie in (0, 1)");
  if (in.n_types < 1) throw DomainError("K must be at least 1");
  if (in.n_items < in.n_types) throw DomainError("the hard instance needs M >= K");
  require_positive(in.pf, "pf");
  return {in.lambda + 1.0 / static_cast<double>(in.n_types), in.lambda / (in.pf * in.pf)};
}

std::vector<std::pair<std::string, bool>> ConditionFlags::named() const {
  return {{"users_per_type", users_per_type}, {"batch_ratio", batch_ratio},
          {"batch_floor", batch_floor},       {"neighbors_max", neighbors_max},
          {"eta_max", eta_max},               {"eta_batch", eta_batch},
          {"horizon_window", horizon_window}};
}

double min_users_per_type(const BoundsInput& in) {
  const double ratio =
      64.0 * std::log(8.0 * in.n_items / in.confidence) / (in.pf * in.delta_gap * in.delta_gap);
  return (40.0 / 9.0) * ratio * (10.0 / in.nu) * std::log(4.0 / in.confidence);
}

ConditionFlags check_conditions(const BoundsInput& in) {
  ConditionFlags f;
  const double N = static_cast<double>(in.n_users);
  const double K = static_cast<double>(in.n_types);
  const double k = static_cast<double>(in.k_neighbors);
  const double Q = static_cast<double>(in.batch_size);
  f.users_per_type = N / K >= min_users_per_type(in);
  f.batch_ratio =
      k / Q >= 64.0 * std::log(8.0 * in.n_items / in.confidence) / (in.pf * in.delta_gap * in.delta_gap);
  f.batch_floor = Q >= (10.0 / in.nu) * std::log(4.0 / in.confidence);
  f.neighbors_max = k <= 9.0 * N / (40.0 * K);
  f.eta_max = in.eta <= in.nu / 2.0;
  f.eta_batch = in.eta * Q >= 2.0;
  try {
    const double ts = t_start(in);
    f.horizon_window = in.horizon >= ts && in.horizon <= 0.8 * in.nu * in.n_items * in.pf;
  } catch (const DomainError&) {
    f.horizon_window = false;
  }
  return f;
}

RecommendedParams recommended_params(const BoundsInput& in) {
  RecommendedParams r;
  r.eta = in.nu / 2.0;
  r.k_exact = 9.0 / 40.0 * static_cast<double>(in.n_users) / static_cast<double>(in.n_types);
  r.k_neighbors = std::max(1L, static_cast<long>(std::floor(r.k_exact)));
  r.q_exact = static_cast<double>(r.k_neighbors) * in.pf * in.delta_gap * in.delta_gap /
              (64.0 * std::log(8.0 * in.n_items / in.confidence));
  r.batch_size = std::max(1L, static_cast<long>(std::floor(r.q_exact)));

  BoundsInput applied = in;
  applied.eta = r.eta;
  applied.k_neighbors = r.k_neighbors;
  applied.batch_size = r.batch_size;
  r.flags = check_conditions(applied);
  return r;
}

BoundsReport evaluate_bounds(const BoundsInput& in) {
  BoundsReport report;
  try {
    report.t_start = t_start(in);
    report.t_start_defined = true;
  } catch (const DomainError& e) {
    report.t_start_error = e.what();
  }
  if (report.t_start_defined && in.horizon >= report.t_start) {
    report.reward_lower_bound = reward_lower_bound(in, report.t_start);
    report.reward_bound_defined = true;
  }
  report.prop1 = prop1_bound(in);
  report.recommended = recommended_params(in);
  report.flags = check_conditions(in);
  return report;
}

namespace {

std::vector<std::pair<std::string, std::string>> report_fields(const BoundsInput& in,
                                                               const BoundsReport& r) {
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
  };
  std::vector<std::pair<std::string, std::string>> fields{
      {"N", std::to_string(in.n_users)},
      {"M", std::to_string(in.n_items)},
      {"K", std::to_string(in.n_types)},
      {"Delta", num(in.delta_gap)},
      {"nu", num(in.nu)},
      {"pf", num(in.pf)},
      {"gamma", num(in.gamma)},
      {"alpha", num(in.alpha)},
      {"eta", num(in.eta)},
      {"Q", std::to_string(in.batch_size)},
      {"k", std::to_string(in.k_neighbors)},
      {"delta", num(in.confidence)},
      {"T", num(in.horizon)},
      {"lambda", num(in.lambda)},
      {"t_start", r.t_start_defined ? num(r.t_start) : "undefined (" + r.t_start_error + ")"},
      {"reward_lower_bound", r.reward_bound_defined ? num(r.reward_lower_bound)
                             : r.t_start_defined ? "undefined (T < t_start)"
                                                 : "undefined"},
      {"prop1_bound", num(r.prop1.bound)},
      {"prop1_horizon", num(r.prop1.horizon)},
      {"recommended_eta", num(r.recommended.eta)},
      {"recommended_k", std::to_string(r.recommended.k_neighbors)},
      {"recommended_Q", std::to_string(r.recommended.batch_size)},
      {"recommended_all_conditions", r.recommended.flags.all() ? "true" : "false"},
  };
  for (const auto& [name, ok] : r.flags.named())
    fields.emplace_back("condition_" + name, ok ? "true" : "false");
  fields.emplace_back("all_conditions", r.flags.all() ? "true" : "false");
  return fields;
}

}  // namespace

std::string format_report(const BoundsInput& in, const BoundsReport& report) {
  const auto fields = report_fields(in, report);
  std::size_t width = 0;
  for (const auto& f : fields) width = std::max(width, f.first.size());
  std::ostringstream os;
  for (const auto& [key, value] : fields)
    os << std::left << std::setw(static_cast<int>(width)) << key << "  " << value << '\n';
  return os.str();
}

std::string report_csv(const BoundsInput& in, const BoundsReport& report) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [key, value] : report_fields(in, report)) os << key << ',' << value << '\n';
  return os.str();
}

}  // namespace occf
