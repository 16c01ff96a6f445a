#include "occf/usercf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "occf/errors.hpp"

namespace occf {

void AlgoParams::validate() const {
  if (!(alpha > 0.0 && alpha < 4.0 / 7.0)) throw ParameterError("alpha must lie in (0, 4/7)");
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
  if (batch_size < 1) throw ParameterError("batch_size must be positive");
  if (k_neighbors < 1) throw ParameterError("k_neighbors must be positive");
  if (eta * batch_size < 2.0) throw ParameterError("eta * batch_size must be at least 2");
}

const char* to_string(StepKind kind) noexcept {
  switch (kind) {
    case StepKind::preference: return "preference";
    case StepKind::similarity: return "similarity";
    case StepKind::exploit: return "exploit";
  }
  return "?";
}

AlgoState::AlgoState(std::size_t n_users, std::size_t n_items, std::vector<int> perm,
                     std::vector<std::vector<int>> batches)
    : n_users_(n_users),
      n_items_(n_items),
      perm_(std::move(perm)),
      batches_(std::move(batches)),
      sim_(n_users, n_items),
      responses_(n_users, n_items),
      recommended_(n_users, n_items),
      rated_(n_users, n_items),
      gram_(n_users, n_users),
      sim_columns_(n_items),
      unrecommended_cursor_(n_users, 0),
      unrated_cursor_(n_users, 0) {
  if (perm_.size() != n_items_) throw ParameterError("permutation length must equal n_items");
  std::vector<char> seen(n_items_, 0);
  for (int i : perm_) {
    if (i < 0 || static_cast<std::size_t>(i) >= n_items_ || seen[static_cast<std::size_t>(i)])
      throw ParameterError("perm is not a permutation of the items");
    seen[static_cast<std::size_t>(i)] = 1;
  }
  std::fill(seen.begin(), seen.end(), 0);
  std::size_t covered = 0;
  for (const auto& batch : batches_) {
    for (int i : batch) {
      if (i < 0 || static_cast<std::size_t>(i) >= n_items_ || seen[static_cast<std::size_t>(i)])
        throw ParameterError("batches do not partition the items");
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != n_items_) throw ParameterError("batches do not cover every item");
}

int AlgoState::first_unrecommended(std::size_t u) const {
  const std::size_t pos = unrecommended_cursor_[u];
  return pos < n_items_ ? perm_[pos] : kExhausted;
}

int AlgoState::first_unrated(std::size_t u) const {
  const std::size_t pos = unrated_cursor_[u];
  return pos < n_items_ ? perm_[pos] : kExhausted;
}

void AlgoState::record(std::size_t u, int item, int response, StepKind kind) {
  if (item == kExhausted) return;
  if (u >= n_users_ || item < 0 || static_cast<std::size_t>(item) >= n_items_)
    throw ParameterError("record: index out of range");
  if (response < -1 || response > 1) throw ParameterError("record: response outside {-1,0,1}");
  const auto i = static_cast<std::size_t>(item);
  if (rated_(u, i)) throw std::logic_error("record: item already rated by this user");

  recommended_(u, i) = 1;
  if (response != 0) {
    responses_(u, i) = static_cast<std::int8_t>(response);
    rated_(u, i) = 1;
    if (kind == StepKind::similarity) {
      const auto value = static_cast<std::int8_t>(response);
      sim_(u, i) = value;
      auto& column = sim_columns_[i];
      for (const auto& [v, other] : column) {
        const int product = value * other;
        gram_(u, static_cast<std::size_t>(v)) += product;
        gram_(static_cast<std::size_t>(v), u) += product;
      }
      gram_(u, u) += value * value;
      column.emplace_back(static_cast<int>(u), value);
    }
  }

  auto& rec_pos = unrecommended_cursor_[u];
  while (rec_pos < n_items_ && recommended_(u, static_cast<std::size_t>(perm_[rec_pos]))) ++rec_pos;
  auto& rated_pos = unrated_cursor_[u];
  while (rated_pos < n_items_ && rated_(u, static_cast<std::size_t>(perm_[rated_pos]))) ++rated_pos;
}

void AlgoState::commit(StepKind kind, std::span<const int> items, std::span<const int> responses) {
  if (items.size() != n_users_ || responses.size() != n_users_)
    throw ParameterError("commit: one item and one response per user required");
  for (std::size_t u = 0; u < n_users_; ++u) record(u, items[u], responses[u], kind);
}

AlgoState init_state(const AlgoParams& params, std::size_t n_users, std::size_t n_items,
                     std::uint64_t seed) {
  params.validate();
  if (n_users == 0 || n_items == 0) throw ParameterError("empty user or item set");
  const auto q = static_cast<std::size_t>(params.batch_size);
  if (q > n_items) throw ParameterError("batch_size exceeds n_items");
  if (static_cast<std::size_t>(params.k_neighbors) > n_users - 1)
    throw ParameterError("k_neighbors must be at most n_users - 1");

  Rng rng(seed);
  std::vector<int> perm(n_items);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());

  std::vector<int> shuffled(n_items);
  std::iota(shuffled.begin(), shuffled.end(), 0);
  rng.shuffle(shuffled.begin(), shuffled.end());
  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < n_items; start += q) {
    const std::size_t end = std::min(n_items, start + q);
    batches.emplace_back(shuffled.begin() + static_cast<long>(start),
                         shuffled.begin() + static_cast<long>(end));
  }
  return AlgoState(n_users, n_items, std::move(perm), std::move(batches));
}

std::optional<int> preference_batch_at(long t, const AlgoParams& params, std::size_t n_batches) {
  if (t < 0) return std::nullopt;
  const double spacing = params.eta * params.batch_size;
  const auto guess = static_cast<long>(std::floor(static_cast<double>(t) / spacing));
  for (long q = std::max(0L, guess - 1); q <= guess + 1; ++q) {
    if (static_cast<std::size_t>(q) >= n_batches) break;
    if (static_cast<long>(std::floor(spacing * static_cast<double>(q))) == t)
      return static_cast<int>(q);
  }
  return std::nullopt;
}

double similarity_probability(long t, const AlgoParams& params) {
  const double spacing = params.eta * params.batch_size;
  const auto q = static_cast<long>(std::floor(static_cast<double>(t) / spacing));
  const long gap = t - q;
  if (gap <= 0)
    throw ScheduleError("t - floor(t/(eta*Q)) = " + std::to_string(gap) + " at t = " +
                        std::to_string(t));
  return std::pow(static_cast<double>(gap), -params.alpha);
}

StepType step_type(long t, const AlgoParams& params, std::size_t n_batches, Rng& rng) {
  if (t < 0) throw ScheduleError("negative time step");
  if (auto q = preference_batch_at(t, params, n_batches)) return {StepKind::preference, *q};
  const double p_sim = similarity_probability(t, params);
  return {rng.uniform() < p_sim ? StepKind::similarity : StepKind::exploit, -1};
}

bool eligible(const AlgoState& state, const AlgoParams& params, std::size_t u, std::size_t i) {
  if (state.rated(u, i)) return false;
  return params.allow_repeat || !state.recommended(u, i);
}

std::vector<int> choose_similarity(const AlgoState& state, const AlgoParams& params,
                                   StepStats* stats) {
  std::vector<int> items(state.n_users(), kExhausted);
  for (std::size_t u = 0; u < state.n_users(); ++u) {
    int item = params.sim_skip_rated_only ? state.first_unrated(u) : state.first_unrecommended(u);
    if (params.sim_skip_rated_only && item != kExhausted &&
        !eligible(state, params, u, static_cast<std::size_t>(item)))
      item = state.first_unrecommended(u);
    if (item == kExhausted && params.allow_repeat) {
      item = state.first_unrated(u);
      if (item != kExhausted && stats) ++stats->fallbacks;
    }
    if (item == kExhausted && stats) ++stats->exhausted;
    items[u] = item;
  }
  return items;
}

std::vector<int> choose_preference(const AlgoState& state, const AlgoParams& params, int batch,
                                   Rng& rng, StepStats* stats) {
  if (batch < 0 || static_cast<std::size_t>(batch) >= state.n_batches())
    throw ParameterError("preference step for a nonexistent batch");
  const auto& members = state.batches()[static_cast<std::size_t>(batch)];
  std::vector<int> items(state.n_users(), kExhausted);
  std::vector<int> pool;
  for (std::size_t u = 0; u < state.n_users(); ++u) {
    pool.clear();
    for (int i : members)
      if (eligible(state, params, u, static_cast<std::size_t>(i))) pool.push_back(i);
    if (pool.empty()) {
      for (std::size_t i = 0; i < state.n_items(); ++i)
        if (eligible(state, params, u, i)) pool.push_back(static_cast<int>(i));
      if (!pool.empty() && stats) ++stats->fallbacks;
    }
    if (pool.empty()) {
      if (stats) ++stats->exhausted;
      continue;
    }
    items[u] = pool[rng.below(pool.size())];
  }
  return items;
}

std::vector<int> nearest_neighbors(const AlgoState& state, std::size_t u, int k) {
  const std::size_t n = state.n_users();
  if (k < 0 || static_cast<std::size_t>(k) > n - 1)
    throw ParameterError("nearest_neighbors: k must be in [0, N-1]");
  std::vector<int> others;
  others.reserve(n - 1);
  for (std::size_t v = 0; v < n; ++v)
    if (v != u) others.push_back(static_cast<int>(v));
  auto better = [&](int a, int b) {
    const int sa = state.similarity_score(u, static_cast<std::size_t>(a));
    const int sb = state.similarity_score(u, static_cast<std::size_t>(b));
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(others.begin(), others.begin() + k, others.end(), better);
  others.resize(static_cast<std::size_t>(k));
  return others;
}

double estimate_p_hat(const AlgoState& state, std::size_t, std::size_t i,
                      std::span<const int> neighbors) {
  int received = 0;
  int total = 0;
  for (int v : neighbors) {
    const auto vv = static_cast<std::size_t>(v);
    if (state.recommended(vv, i)) ++received;
    total += state.response(vv, i);
  }
  return received > 0 ? static_cast<double>(total) / received : 0.0;
}

std::vector<double> estimate_p_hat_row(const AlgoState& state, std::span<const int> neighbors) {
  const std::size_t m = state.n_items();
  std::vector<int> received(m, 0);
  std::vector<int> total(m, 0);
  for (int v : neighbors) {
    const auto rec = state.recommended_flags().row(static_cast<std::size_t>(v));
    const auto resp = state.all_responses().row(static_cast<std::size_t>(v));
    for (std::size_t i = 0; i < m; ++i) {
      received[i] += rec[i];
      total[i] += resp[i];
    }
  }
  std::vector<double> p_hat(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (received[i] > 0) p_hat[i] = static_cast<double>(total[i]) / received[i];
  return p_hat;
}

int argmax_candidate(std::span<const double> scores, std::span<const std::uint8_t> mask) {
  int best = kExhausted;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    if (best == kExhausted || scores[i] > scores[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> choose_exploit(const AlgoState& state, const AlgoParams& params, Rng& rng,
                                StepStats* stats) {
  const std::size_t m = state.n_items();
  std::vector<int> items(state.n_users(), kExhausted);
  std::vector<std::uint8_t> mask(m);
  for (std::size_t u = 0; u < state.n_users(); ++u) {
    const auto neighbors = nearest_neighbors(state, u, params.k_neighbors);
    const auto p_hat = estimate_p_hat_row(state, neighbors);
    std::size_t n_candidates = 0;
    bool all_zero = true;
    for (std::size_t i = 0; i < m; ++i) {
      mask[i] = eligible(state, params, u, i) ? 1 : 0;
      if (mask[i]) {
        ++n_candidates;
        if (p_hat[i] != 0.0) all_zero = false;
      }
    }
    if (n_candidates == 0) {
      if (stats) ++stats->exhausted;
      continue;
    }
    if (params.random_on_cold && all_zero) {
      auto pick = rng.below(n_candidates);
      for (std::size_t i = 0; i < m; ++i)
        if (mask[i] && pick-- == 0) {
          items[u] = static_cast<int>(i);
          break;
        }
    } else {
      items[u] = argmax_candidate(p_hat, mask);
    }
  }
  return items;
}

std::vector<int> sample_responses(const Environment& env, std::span<const int> items, Rng& rng) {
  std::vector<int> responses(items.size(), 0);
  for (std::size_t u = 0; u < items.size(); ++u)
    if (items[u] != kExhausted)
      responses[u] = sample_response(env, u, static_cast<std::size_t>(items[u]), rng);
  return responses;
}

std::vector<int> similarity_explore(AlgoState& state, const AlgoParams& params,
                                    const Environment& env, Rng& env_rng, StepStats* stats) {
  auto items = choose_similarity(state, params, stats);
  state.commit(StepKind::similarity, items, sample_responses(env, items, env_rng));
  return items;
}

std::vector<int> preference_explore(AlgoState& state, const AlgoParams& params, int batch,
                                    const Environment& env, Rng& algo_rng, Rng& env_rng,
                                    StepStats* stats) {
  auto items = choose_preference(state, params, batch, algo_rng, stats);
  state.commit(StepKind::preference, items, sample_responses(env, items, env_rng));
  return items;
}

std::vector<int> exploit(AlgoState& state, const AlgoParams& params, const Environment& env,
                         Rng& algo_rng, Rng& env_rng, StepStats* stats) {
  auto items = choose_exploit(state, params, algo_rng, stats);
  state.commit(StepKind::exploit, items, sample_responses(env, items, env_rng));
  return items;
}

RunTrace run(const Environment& env, const AlgoParams& params, long horizon, std::uint64_t seed) {
  if (horizon < 1) throw ParameterError("horizon must be at least 1");
  AlgoState state = init_state(params, env.n_users(), env.n_items(),
                               derive_seed(seed, {stream_id(Stream::algorithm), 0}));
  Rng schedule_rng(derive_seed(seed, {stream_id(Stream::schedule)}));
  Rng algo_rng(derive_seed(seed, {stream_id(Stream::algorithm), 1}));
  Rng env_rng(derive_seed(seed, {stream_id(Stream::responses)}));

  RunTrace trace;
  trace.n_users = env.n_users();
  trace.n_items = env.n_items();
  trace.steps.reserve(static_cast<std::size_t>(horizon));
  for (long t = 0; t < horizon; ++t) {
    StepRecord step;
    step.t = t;
    step.type = step_type(t, params, state.n_batches(), schedule_rng);
    StepStats stats;
    switch (step.type.kind) {
      case StepKind::preference:
        step.items = choose_preference(state, params, step.type.batch, algo_rng, &stats);
        break;
      case StepKind::similarity:
        step.items = choose_similarity(state, params, &stats);
        break;
      case StepKind::exploit:
        step.items = choose_exploit(state, params, algo_rng, &stats);
        break;
    }
    const auto responses = sample_responses(env, step.items, env_rng);
    state.commit(step.type.kind, step.items, responses);
    state.advance_time();
    step.responses.assign(responses.begin(), responses.end());
    step.fallbacks = stats.fallbacks;
    step.exhausted = stats.exhausted;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream os;
  os << "t,step_type,user,item,response\n";
  for (const auto& step : trace.steps)
    for (std::size_t u = 0; u < step.items.size(); ++u)
      if (step.items[u] != kExhausted)
        os << step.t << ',' << to_string(step.type.kind) << ',' << u << ',' << step.items[u] << ','
           << static_cast<int>(step.responses[u]) << '\n';
  return os.str();
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << trace_csv(trace);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace occf
