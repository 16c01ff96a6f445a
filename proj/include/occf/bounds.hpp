#pragma once

#include <string>
#include <utility>
#include <vector>

namespace occf {

/// Inputs to the closed-form sample-complexity quantities.
struct BoundsInput {
  long n_users = 0;           // N
  long n_items = 0;           // M
  long n_types = 1;           // K
  double delta_gap = 0.25;    // Delta
  double nu = 0.5;
  double pf = 1.0;
  double gamma = 0.0;
  double alpha = 0.1;
  double eta = 0.5;
  long batch_size = 1;        // Q
  long k_neighbors = 1;       // k
  double confidence = 0.1;    // delta (failure probability)
  double horizon = 1;         // T
  double lambda = 0.5;        // level of the any-algorithm bound
};

/// Cold-start time with every constant explicit:
///
///   (512 max(log(4NQ/(k Delta)), log(88/delta)))^(1/(1-alpha))
///   ----------------------------------------------------------------------
///   (3 pf^2 (1-gamma)^2 nu)^(1/(1-alpha)) * (1 - max(1/T, 2/(eta Q)))
///
/// Throws DomainError when the denominator is not positive.
double t_start(const BoundsInput& in);

/// Normalized lower bound on the accumulated likable reward, reward(T)/(N T):
///
///   (1 - Ts/T - 2^alpha (T-Ts)^(1-alpha) / (T(1-alpha)) - max(1/T, 2/(eta Q))) (1-delta)
///
/// Requires T >= Ts (DomainError otherwise). May be negative.
double reward_lower_bound(const BoundsInput& in);

/// Same as above with a precomputed cold-start time.
double reward_lower_bound(const BoundsInput& in, double t_start_value);

struct Prop1Bound {
  double bound;    // lambda + 1/K
  double horizon;  // lambda / pf^2
};

/// Upper bound on the reward of any online algorithm on the hard instance,
/// valid for T <= lambda/pf^2. Requires M >= K.
Prop1Bound prop1_bound(const BoundsInput& in);

struct ConditionFlags {
  bool users_per_type = false;   // N/K large enough for the batch-size floor
  bool batch_ratio = false;      // k/Q >= 64 log(8M/delta) / (pf Delta^2)
  bool batch_floor = false;      // Q >= (10/nu) log(4/delta)
  bool neighbors_max = false;    // k <= 9N/(40K)
  bool eta_max = false;          // eta <= nu/2
  bool eta_batch = false;        // eta Q >= 2
  bool horizon_window = false;   // T in [T_start, (4/5) nu M pf]

  bool all() const noexcept {
    return users_per_type && batch_ratio && batch_floor && neighbors_max && eta_max &&
           eta_batch && horizon_window;
  }
  std::vector<std::pair<std::string, bool>> named() const;
};

/// Evaluates every validity condition for the (eta, k, Q) held in `in`.
ConditionFlags check_conditions(const BoundsInput& in);

struct RecommendedParams {
  double eta = 0;
  long k_neighbors = 1;
  long batch_size = 1;
  double k_exact = 0;  // (9/40) N/K before rounding
  double q_exact = 0;  // k pf Delta^2 / (64 log(8M/delta)) with the rounded k
  ConditionFlags flags;
};

/// eta = nu/2, k = floor((9/40) N/K), Q = floor(k pf Delta^2 / (64 log(8M/delta))),
/// with k and Q at least 1. Infeasibility is reported through the flags.
RecommendedParams recommended_params(const BoundsInput& in);

/// Minimum users per type for which the recommended batch size meets the
/// batch-size floor: N/K >= (40/9) (64 log(8M/delta)/(pf Delta^2)) (10/nu) log(4/delta).
double min_users_per_type(const BoundsInput& in);

struct BoundsReport {
  double t_start = 0;
  bool t_start_defined = false;
  std::string t_start_error;  // why the cold-start time is undefined
  double reward_lower_bound = 0;
  bool reward_bound_defined = false;  // false when T < T_start
  Prop1Bound prop1{};
  RecommendedParams recommended;
  ConditionFlags flags;
};

BoundsReport evaluate_bounds(const BoundsInput& in);

std::string format_report(const BoundsInput& in, const BoundsReport& report);
std::string report_csv(const BoundsInput& in, const BoundsReport& report);

}  // namespace occf
