#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occf/model.hpp"
#include "occf/usercf.hpp"

namespace occf {

// ---- rewards --------------------------------------------------------------

/// Sum over users of the stored signed entry of the item recommended at
/// step t (replay only); exhausted users contribute 0.
long stored_reward_sum(const Environment& env, const RunTrace& trace, long t);

/// (1/N) * stored_reward_sum. DispatchError for synthetic environments.
double reward_at(const Environment& env, const RunTrace& trace, long t);

/// Number of users whose step-t recommendation is likable (synthetic only).
long likable_count_at(const Environment& env, const RunTrace& trace, long t);

/// Fraction of users whose step-t recommendation is likable (p_ui > 1/2).
/// DispatchError for replay environments.
double likable_reward_at(const Environment& env, const RunTrace& trace, long t);

/// acc-reward(T) for T = 0..len(trace): prefix sums of reward_at, computed
/// from integer numerators so that equal recommendation multisets give
/// bit-identical totals.
std::vector<double> acc_reward_curve(const Environment& env, const RunTrace& trace);

/// Reward of a single set of recommendations (one entry per user), using
/// stored ratings for replay and likability for synthetic environments.
double step_reward(const Environment& env, std::span<const int> items);

// ---- curves ---------------------------------------------------------------

struct CurveRow {
  double x = 0;
  double mean = 0;
  double std_error = 0;
  int n = 1;
  std::string label;
  bool operator==(const CurveRow&) const = default;
};

struct CurveTable {
  std::vector<CurveRow> rows;

  std::vector<std::string> labels() const;
  /// Rows carrying `label`, sorted by x.
  std::vector<CurveRow> curve(const std::string& label) const;
  bool operator==(const CurveTable&) const = default;
};

struct Summary {
  double mean = 0;
  double std_error = 0;
};

/// Mean and standard error (sample sd / sqrt(n); 0 for n = 1).
Summary summarize(std::span<const double> values);

/// Header x,mean,stderr,n,label; rows ordered by label then x; numbers with
/// 10 significant digits. Throws on an empty table.
std::string curve_csv(const CurveTable& table);
void write_csv(const CurveTable& table, const std::filesystem::path& path);
CurveTable parse_curve_csv(const std::string& text);
CurveTable read_csv(const std::filesystem::path& path);

/// Largest vertical gap between any two of the labelled curves after linear
/// interpolation onto the union of their x values inside the common x range,
/// divided by the dynamic range of all their means.
double collapse_gap(const CurveTable& table, const std::vector<std::string>& labels);

/// Centered moving average with the given window (shrinks at the edges).
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

/// Rises then falls: the smoothed series peaks strictly inside, its mean
/// derivative is positive before the peak and negative after it.
bool is_inverse_u(std::span<const double> series, std::size_t window);

// ---- experiments ----------------------------------------------------------

struct ExperimentConfig {
  std::string experiment = "synthetic-theorem";  // one-vs-two | sim-scaling | pref-scaling | synthetic-theorem
  std::vector<double> pf{1.0, 0.75, 0.5};
  std::vector<double> ts_grid{0, 2, 4, 8, 16, 32, 64};  // similarity steps times pf^2
  std::vector<double> tr_grid{0, 5, 10, 20, 40, 80};    // preference steps times pf
  int replicates = 20;
  std::uint64_t seed = 1;
  int threads = 1;

  // synthetic model
  std::string model = "random";  // random | blocks
  int n_users = 400;
  int n_items = 600;
  int n_types = 4;
  double delta = 0.3;
  double nu = 0.3;
  std::optional<double> gamma_target;
  double observed_fraction = 0.35;  // synthetic signed matrix for one-vs-two

  // replay corpus (grid file); empty means synthetic
  std::string corpus;

  // algorithm
  double alpha = 0.5;
  double eta = 0.5;
  int batch_size = 10;
  int k_neighbors = 20;
  bool allow_repeat = true;
  bool random_on_cold = false;
  bool sim_skip_rated_only = false;
  bool fixed_ratings = false;
  bool use_recommended = false;

  // staged experiments
  double pref_factor = 3.0;  // preference phase of 3M/(k pf) items
  double ts_fixed = 25.0;    // similarity phase of 25/pf^2 steps
  std::string exploit_scope = "i2";  // i2 | all: candidates of the final exploitation step

  // bounds / horizon
  long horizon = 200;
  double confidence = 0.1;
  double lambda = 0.3;

  std::string output;

  /// Throws ParameterError for empty grids, replicates < 1 and similar.
  void validate() const;

  /// Key/value view, in a fixed order; used for the metadata sidecar.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  /// Applies `key = value` settings; unknown keys are rejected.
  void apply(const std::map<std::string, std::string>& values);
  static std::vector<std::string> keys();
};

/// Reads `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

ModelParams model_params(const ExperimentConfig& cfg, double pf);
AlgoParams algo_params(const ExperimentConfig& cfg, FeedbackMode mode);

/// Clustered signed matrix: each entry is observed with probability
/// `observed_fraction`, and observed entries are +1 with probability p_ui.
RatingsMatrix make_clustered_signed_matrix(const PreferenceMatrix& prefs,
                                           double observed_fraction, std::uint64_t seed);

/// Runs fn(replicate) for replicate = 0..n-1 on up to `threads` threads.
void for_each_replicate(int n, int threads, const std::function<void(int)>& fn);

/// acc-reward vs T for the one-class and two-class variants, each item
/// recommended at most once per user and T running to M.
CurveTable run_one_vs_two(const ExperimentConfig& cfg);

/// Exploitation reward after a preference phase on I2 and T_s similarity
/// steps on I1; one curve per pf against x = T_s * pf^2.
CurveTable run_sim_scaling(const ExperimentConfig& cfg);

/// Exploitation reward after ts_fixed/pf^2 similarity steps on I1 and T_r
/// preference recommendations on I2; one curve per pf against x = T_r * pf.
CurveTable run_pref_scaling(const ExperimentConfig& cfg);

/// Full User-CF runs on a synthetic model: per-step and cumulative likable
/// fraction, with the reward lower bound and the cold-start marker overlaid.
CurveTable run_synthetic_theorem(const ExperimentConfig& cfg);

CurveTable run_experiment(const ExperimentConfig& cfg);

/// `<path>.meta`: resolved config plus the assumptions the run made.
void write_metadata(const ExperimentConfig& cfg, const std::filesystem::path& csv_path,
                    const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace occf
