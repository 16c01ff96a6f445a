#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occf/grid.hpp"
#include "occf/model.hpp"
#include "occf/rng.hpp"

namespace occf {

/// User-CF configuration.
struct AlgoParams {
  double alpha = 0.5;  // similarity-exploration learning rate, in (0, 4/7)
  double eta = 0.5;    // preference-exploration rate, in (0, 1)
  int batch_size = 4;  // Q
  int k_neighbors = 10;
  FeedbackMode feedback_mode = FeedbackMode::one_class;
  bool allow_repeat = true;          // unrated items may be recommended again
  bool random_on_cold = false;       // uniform pick when every estimate is 0
  bool sim_skip_rated_only = false;  // similarity steps skip rated, not recommended, items

  /// Throws ParameterError unless alpha in (0,4/7), eta in (0,1), Q >= 1,
  /// k >= 1 and eta*Q >= 2.
  void validate() const;
};

enum class StepKind { preference, similarity, exploit };

const char* to_string(StepKind kind) noexcept;

struct StepType {
  StepKind kind = StepKind::preference;
  int batch = -1;  // q, for preference steps only
  bool operator==(const StepType&) const = default;
};

// Item value used when a user has nothing left to recommend.
inline constexpr int kExhausted = -1;

/// Evolving User-CF state.
///
/// Besides the response and flag matrices the state keeps the Gram matrix of
/// the similarity-response vectors up to date, so neighbor scoring is O(N)
/// per user. Mutation goes only through record()/commit().
class AlgoState {
 public:
  AlgoState(std::size_t n_users, std::size_t n_items, std::vector<int> perm,
            std::vector<std::vector<int>> batches);

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_batches() const noexcept { return batches_.size(); }
  const std::vector<int>& perm() const noexcept { return perm_; }
  const std::vector<std::vector<int>>& batches() const noexcept { return batches_; }
  long t() const noexcept { return t_; }
  void advance_time() noexcept { ++t_; }

  int sim_response(std::size_t u, std::size_t i) const { return sim_(u, i); }
  int response(std::size_t u, std::size_t i) const { return responses_(u, i); }
  bool recommended(std::size_t u, std::size_t i) const { return recommended_(u, i) != 0; }
  bool rated(std::size_t u, std::size_t i) const { return rated_(u, i) != 0; }

  const Grid<std::int8_t>& sim_responses() const noexcept { return sim_; }
  const Grid<std::int8_t>& all_responses() const noexcept { return responses_; }
  const Grid<std::uint8_t>& recommended_flags() const noexcept { return recommended_; }
  const Grid<std::uint8_t>& rated_flags() const noexcept { return rated_; }

  /// <r^sim_u, r^sim_v>
  int similarity_score(std::size_t u, std::size_t v) const { return gram_(u, v); }

  /// First item in permutation order not yet recommended (or not yet rated)
  /// to u; kExhausted when none.
  int first_unrecommended(std::size_t u) const;
  int first_unrated(std::size_t u) const;

  /// Records that `item` was recommended to u in a step of the given kind
  /// with response in {-1, 0, +1}. A nonzero response marks the item rated.
  /// This is also the scripted-driver entry point for staged experiments.
  void record(std::size_t u, int item, int response, StepKind kind);

  /// Applies one simultaneous step; users with kExhausted are skipped.
  void commit(StepKind kind, std::span<const int> items, std::span<const int> responses);

 private:
  std::size_t n_users_;
  std::size_t n_items_;
  std::vector<int> perm_;
  std::vector<std::vector<int>> batches_;
  long t_ = 0;

  Grid<std::int8_t> sim_;
  Grid<std::int8_t> responses_;
  Grid<std::uint8_t> recommended_;
  Grid<std::uint8_t> rated_;
  Grid<std::int32_t> gram_;
  // Nonzero similarity responses per item: (user, value).
  std::vector<std::vector<std::pair<int, std::int8_t>>> sim_columns_;
  // Positions in perm_ before which every item is recommended / rated.
  std::vector<std::size_t> unrecommended_cursor_;
  std::vector<std::size_t> unrated_cursor_;
};

/// Random permutation and random partition of the items into ceil(M/Q)
/// batches of size Q (last possibly smaller); all arrays zeroed, t = 0.
AlgoState init_state(const AlgoParams& params, std::size_t n_users, std::size_t n_items,
                     std::uint64_t seed);

/// Batch index q if t = floor(eta*Q*q) for some q < n_batches.
std::optional<int> preference_batch_at(long t, const AlgoParams& params, std::size_t n_batches);

/// p_J = (t - floor(t/(eta*Q)))^(-alpha) for a non-preference step.
double similarity_probability(long t, const AlgoParams& params);

StepType step_type(long t, const AlgoParams& params, std::size_t n_batches, Rng& rng);

struct StepStats {
  int fallbacks = 0;
  int exhausted = 0;
};

/// True when item i may be recommended to u at all.
bool eligible(const AlgoState& state, const AlgoParams& params, std::size_t u, std::size_t i);

std::vector<int> choose_similarity(const AlgoState& state, const AlgoParams& params,
                                   StepStats* stats = nullptr);
std::vector<int> choose_preference(const AlgoState& state, const AlgoParams& params, int batch,
                                   Rng& rng, StepStats* stats = nullptr);

/// The k users v != u with the largest similarity score, ties by index.
std::vector<int> nearest_neighbors(const AlgoState& state, std::size_t u, int k);

/// Neighbor-averaged estimate: (1/n_ui) * sum_{v in N_u} o_vi, where n_ui
/// counts neighbors that were ever recommended i; 0 when n_ui = 0.
double estimate_p_hat(const AlgoState& state, std::size_t u, std::size_t i,
                      std::span<const int> neighbors);

/// Estimates for every item at once (same definition as estimate_p_hat).
std::vector<double> estimate_p_hat_row(const AlgoState& state, std::span<const int> neighbors);

/// Index of the largest score among candidates (mask != 0), lowest index on
/// ties; kExhausted if there is no candidate.
int argmax_candidate(std::span<const double> scores, std::span<const std::uint8_t> mask);

std::vector<int> choose_exploit(const AlgoState& state, const AlgoParams& params, Rng& rng,
                                StepStats* stats = nullptr);

/// Samples one response per recommended item from the environment.
std::vector<int> sample_responses(const Environment& env, std::span<const int> items, Rng& rng);

// Full steps: choose on the frozen state, sample, commit.
std::vector<int> similarity_explore(AlgoState& state, const AlgoParams& params,
                                    const Environment& env, Rng& env_rng,
                                    StepStats* stats = nullptr);
std::vector<int> preference_explore(AlgoState& state, const AlgoParams& params, int batch,
                                    const Environment& env, Rng& algo_rng, Rng& env_rng,
                                    StepStats* stats = nullptr);
std::vector<int> exploit(AlgoState& state, const AlgoParams& params, const Environment& env,
                         Rng& algo_rng, Rng& env_rng, StepStats* stats = nullptr);

struct StepRecord {
  long t = 0;
  StepType type;
  std::vector<int> items;               // kExhausted for users without a recommendation
  std::vector<std::int8_t> responses;   // 0 for exhausted users
  int fallbacks = 0;
  int exhausted = 0;
};

struct RunTrace {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<StepRecord> steps;
};

/// Runs User-CF for `horizon` steps. All recommendations of a step are
/// computed from the state at the end of the previous step, then the
/// responses are applied as one batch.
RunTrace run(const Environment& env, const AlgoParams& params, long horizon, std::uint64_t seed);

/// CSV with columns t,step_type,user,item,response; exhausted users omitted.
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
std::string trace_csv(const RunTrace& trace);

}  // namespace occf
