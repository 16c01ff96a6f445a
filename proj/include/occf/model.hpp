#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "occf/grid.hpp"
#include "occf/ratings.hpp"
#include "occf/rng.hpp"

namespace occf {

/// Latent environment parameters.
///
/// Every user likes at least a fraction `nu` of the items; likable
/// probabilities sit at or above 1/2 + delta and the others at or below
/// 1/2 - delta. `pf` is the probability that a user reports a like.
struct ModelParams {
  int n_users = 0;
  int n_items = 0;
  int n_types = 1;
  double delta = 0.25;
  double nu = 0.5;
  double pf = 1.0;
  std::optional<double> gamma_target;
  int retry_budget = 100;

  /// Throws ParameterError when the invariants do not hold.
  void validate() const;
};

struct PreferenceMatrix {
  Grid<double> probs;        // p_ui
  std::vector<int> type_of;  // user -> type in [0, n_types)
  int n_types = 1;
  double achieved_gamma = 0.0;

  std::size_t n_users() const noexcept { return probs.rows(); }
  std::size_t n_items() const noexcept { return probs.cols(); }
  bool likable(std::size_t u, std::size_t i) const { return probs(u, i) > 0.5; }
};

/// Number of likable items per type for the given parameters: ceil(nu * M).
int likable_count(const ModelParams& params);

/// Draws a preference matrix with round-robin type assignment and
/// ceil(nu*M) likable items per type. When `gamma_target` is set the likable
/// sets are redrawn until the measured separation is at most the target, or
/// the retry budget runs out (GenerationError carrying the best gamma seen).
PreferenceMatrix generate_model(const ModelParams& params, std::uint64_t seed);

/// Smallest gamma such that, for every user u,
///   gamma * min_{v in T_u} <p_u, p_v>  >=  max_{v not in T_u} <p_u, p_v>.
/// Returns 0 when fewer than two types exist.
double check_separation(const PreferenceMatrix& pm);

/// K non-overlapping types with {0,1} preferences: type c likes exactly the
/// item block [c*M/K, (c+1)*M/K). Users are assigned round-robin.
PreferenceMatrix make_disjoint_block_model(int n_users, int n_items, int n_types);

struct ModelFile {
  ModelParams params;
  PreferenceMatrix matrix;
};

void write_preference_matrix(const std::filesystem::path& path, const ModelParams& params,
                             const PreferenceMatrix& pm);
ModelFile read_preference_matrix(const std::filesystem::path& path);

enum class FeedbackMode { one_class, two_class };

const char* to_string(FeedbackMode mode) noexcept;
FeedbackMode parse_feedback_mode(const std::string& text);

/// The response channel. Either a synthetic Bernoulli model or a replayed
/// signed ratings matrix; immutable once built.
class Environment {
 public:
  static Environment synthetic(std::shared_ptr<const PreferenceMatrix> prefs, double pf,
                               FeedbackMode mode, std::uint64_t seed,
                               bool fixed_ratings = false);
  static Environment replay(std::shared_ptr<const RatingsMatrix> ratings, double pf,
                            FeedbackMode mode, std::uint64_t seed = 0);

  bool is_synthetic() const noexcept;
  const PreferenceMatrix& preferences() const;  // DispatchError for replay
  const RatingsMatrix& ratings() const;         // DispatchError for synthetic

  std::size_t n_users() const noexcept;
  std::size_t n_items() const noexcept;
  double pf() const noexcept { return pf_; }
  FeedbackMode feedback_mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool fixed_ratings() const noexcept { return fixed_ratings_; }

  Environment with(double pf, FeedbackMode mode) const;

 private:
  using Source = std::variant<std::shared_ptr<const PreferenceMatrix>,
                              std::shared_ptr<const RatingsMatrix>>;
  Environment(Source source, double pf, FeedbackMode mode, std::uint64_t seed, bool fixed);

  Source source_;
  double pf_;
  FeedbackMode mode_;
  std::uint64_t seed_;
  bool fixed_ratings_;
};

/// One response to recommending item i to user u.
///
/// One-class: 1 iff the hidden rating is a like and the pf coin succeeds,
/// else 0. Two-class: the hidden rating (+1/-1) iff the pf coin succeeds,
/// else 0. Replay reads the hidden rating from the stored matrix; a stored 0
/// never produces a response.
int sample_response(const Environment& env, std::size_t u, std::size_t i, Rng& rng);

}  // namespace occf
