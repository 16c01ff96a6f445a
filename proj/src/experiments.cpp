#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>

#include "occf/bounds.hpp"
#include "occf/errors.hpp"
#include "occf/harness.hpp"
#include "occf/ingest.hpp"

namespace occf {

namespace {

std::string pf_label(const std::string& prefix, double pf) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%spf=%g", prefix.c_str(), pf);
  return buf;
}

std::uint64_t seed_for(const ExperimentConfig& cfg, Stream s, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return derive_seed(cfg.seed, {stream_id(s), a, b});
}

// Rows of a table from per-replicate series aligned on a shared x grid.
void append_summaries(CurveTable& table, const std::string& label, const std::vector<double>& xs,
                      const std::vector<std::vector<double>>& per_replicate) {
  std::vector<double> column(per_replicate.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    for (std::size_t r = 0; r < per_replicate.size(); ++r) column[r] = per_replicate[r][j];
    const auto s = summarize(column);
    table.rows.push_back({xs[j], s.mean, s.std_error, static_cast<int>(column.size()), label});
  }
}

std::shared_ptr<const PreferenceMatrix> synthetic_preferences(const ExperimentConfig& cfg,
                                                              int replicate) {
  if (cfg.model == "blocks")
    return std::make_shared<PreferenceMatrix>(
        make_disjoint_block_model(cfg.n_users, cfg.n_items, cfg.n_types));
  return std::make_shared<PreferenceMatrix>(
      generate_model(model_params(cfg, 1.0), seed_for(cfg, Stream::model, replicate)));
}

// Staged runs share one replay corpus across replicates, or draw a fresh
// synthetic model per replicate.
struct Source {
  std::shared_ptr<const RatingsMatrix> corpus;

  Environment environment(const ExperimentConfig& cfg, int replicate, double pf) const {
    if (corpus) return Environment::replay(corpus, pf, FeedbackMode::one_class);
    return Environment::synthetic(synthetic_preferences(cfg, replicate), pf,
                                  FeedbackMode::one_class,
                                  seed_for(cfg, Stream::hidden_ratings, replicate),
                                  cfg.fixed_ratings);
  }
};

Source make_source(const ExperimentConfig& cfg) {
  Source s;
  if (!cfg.corpus.empty()) s.corpus = std::make_shared<RatingsMatrix>(load_corpus(cfg.corpus));
  return s;
}

struct Split {
  std::vector<int> first;   // I1, walked in this order by similarity steps
  std::vector<int> second;  // I2
};

Split random_split(std::size_t n_items, std::uint64_t seed) {
  std::vector<int> items(n_items);
  for (std::size_t i = 0; i < n_items; ++i) items[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(items.begin(), items.end());
  const auto half = static_cast<std::ptrdiff_t>(n_items / 2);
  return {{items.begin(), items.begin() + half}, {items.begin() + half, items.end()}};
}

// Permutation starting with I1 so that similarity steps walk I1 in order.
AlgoState staged_state(const Environment& env, const Split& split) {
  std::vector<int> perm = split.first;
  perm.insert(perm.end(), split.second.begin(), split.second.end());
  std::vector<int> all(env.n_items());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return AlgoState(env.n_users(), env.n_items(), std::move(perm), {std::move(all)});
}

AlgoParams staged_params(const ExperimentConfig& cfg) {
  AlgoParams p = algo_params(cfg, FeedbackMode::one_class);
  if (p.k_neighbors < 1) throw ParameterError("k_neighbors must be at least 1");
  return p;
}

// One exploitation step evaluated on the current state without committing it.
// With scope "i2" only items of the second half are candidates.
double exploit_reward(const AlgoState& state, const AlgoParams& params, const Environment& env,
                      const std::vector<std::uint8_t>& in_scope, Rng& rng) {
  const std::size_t m = state.n_items();
  std::vector<int> items(state.n_users(), kExhausted);
  std::vector<std::uint8_t> mask(m);
  for (std::size_t u = 0; u < state.n_users(); ++u) {
    const auto neighbors = nearest_neighbors(state, u, params.k_neighbors);
    const auto p_hat = estimate_p_hat_row(state, neighbors);
    std::size_t n_candidates = 0;
    bool cold = true;
    for (std::size_t i = 0; i < m; ++i) {
      mask[i] = in_scope[i] && eligible(state, params, u, i) ? 1 : 0;
      if (mask[i]) {
        ++n_candidates;
        if (p_hat[i] != 0.0) cold = false;
      }
    }
    if (n_candidates == 0) continue;
    if (params.random_on_cold && cold) {
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
  return step_reward(env, items);
}

std::vector<std::uint8_t> scope_mask(const ExperimentConfig& cfg, const Environment& env,
                                     const Split& split) {
  std::vector<std::uint8_t> mask(env.n_items(), cfg.exploit_scope == "all" ? 1 : 0);
  for (int i : split.second) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

void similarity_steps(AlgoState& state, const AlgoParams& params, const Environment& env,
                      long steps, Rng& env_rng) {
  for (long s = 0; s < steps; ++s) similarity_explore(state, params, env, env_rng);
}

// Each user receives the next `count` items of a private random order of I2.
void preference_steps(AlgoState& state, const Environment& env,
                      const std::vector<std::vector<int>>& orders, std::size_t from,
                      std::size_t count, Rng& env_rng) {
  for (std::size_t j = from; j < from + count; ++j)
    for (std::size_t u = 0; u < state.n_users(); ++u) {
      const int item = orders[u][j];
      state.record(u, item, sample_response(env, u, static_cast<std::size_t>(item), env_rng),
                   StepKind::preference);
    }
}

std::vector<std::vector<int>> private_orders(std::size_t n_users, const std::vector<int>& items,
                                             Rng& rng) {
  std::vector<std::vector<int>> orders(n_users, items);
  for (auto& o : orders) rng.shuffle(o.begin(), o.end());
  return orders;
}

std::vector<double> sorted_grid(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

CurveTable run_one_vs_two(const ExperimentConfig& cfg) {
  cfg.validate();
  std::shared_ptr<const RatingsMatrix> matrix;
  if (!cfg.corpus.empty()) {
    matrix = std::make_shared<RatingsMatrix>(load_corpus(cfg.corpus));
  } else {
    const auto prefs = generate_model(model_params(cfg, 1.0), seed_for(cfg, Stream::model));
    matrix = std::make_shared<RatingsMatrix>(make_clustered_signed_matrix(
        prefs, cfg.observed_fraction, seed_for(cfg, Stream::environment)));
  }
  const double pf_one = cfg.pf.front();
  const long horizon = static_cast<long>(matrix->n_items());
  const Environment one = Environment::replay(matrix, pf_one, FeedbackMode::one_class);
  const Environment two = Environment::replay(matrix, 1.0, FeedbackMode::two_class);

  AlgoParams p1 = algo_params(cfg, FeedbackMode::one_class);
  AlgoParams p2 = algo_params(cfg, FeedbackMode::two_class);
  p1.allow_repeat = p2.allow_repeat = false;

  std::vector<std::vector<double>> acc_one(cfg.replicates), acc_two(cfg.replicates);
  for_each_replicate(cfg.replicates, cfg.threads, [&](int r) {
    const auto seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)});
    acc_one[r] = acc_reward_curve(one, run(one, p1, horizon, seed));
    acc_two[r] = acc_reward_curve(two, run(two, p2, horizon, seed));
  });

  std::vector<double> xs(static_cast<std::size_t>(horizon) + 1);
  for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = static_cast<double>(t);
  CurveTable table;
  append_summaries(table, "one-class", xs, acc_one);
  append_summaries(table, "two-class", xs, acc_two);
  return table;
}

CurveTable run_sim_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  const Source source = make_source(cfg);
  const AlgoParams params = staged_params(cfg);
  const auto grid = sorted_grid(cfg.ts_grid);
  const std::size_t n_pf = cfg.pf.size();

  // results[pf][replicate][grid point]
  std::vector<std::vector<std::vector<double>>> results(
      n_pf, std::vector<std::vector<double>>(cfg.replicates));
  std::vector<std::vector<double>> xs(n_pf);
  for (std::size_t f = 0; f < n_pf; ++f) {
    const double pf = cfg.pf[f];
    for (double x : grid) xs[f].push_back(std::round(x / (pf * pf)) * pf * pf);
  }

  for_each_replicate(cfg.replicates, cfg.threads, [&](int r) {
    for (std::size_t f = 0; f < n_pf; ++f) {
      const double pf = cfg.pf[f];
      const Environment env = source.environment(cfg, r, pf);
      const Split split = random_split(env.n_items(), seed_for(cfg, Stream::split, r));
      const auto n_pref = static_cast<std::size_t>(
          std::lround(cfg.pref_factor * static_cast<double>(env.n_items()) /
                      (params.k_neighbors * pf)));
      if (n_pref > split.second.size())
        throw ParameterError("preference phase of " + std::to_string(n_pref) +
                             " items exceeds |I2| = " + std::to_string(split.second.size()));
      const long last = std::lround(grid.back() / (pf * pf));
      if (last > static_cast<long>(split.first.size()))
        throw ParameterError("ts_grid needs " + std::to_string(last) +
                             " similarity steps but |I1| = " + std::to_string(split.first.size()));

      AlgoState state = staged_state(env, split);
      const auto scope = scope_mask(cfg, env, split);
      Rng stage_rng(seed_for(cfg, Stream::staging, r, f));
      Rng env_rng(seed_for(cfg, Stream::responses, r, f));
      Rng algo_rng(seed_for(cfg, Stream::algorithm, r, f));
      preference_steps(state, env, private_orders(env.n_users(), split.second, stage_rng), 0,
                       n_pref, env_rng);
      long done = 0;
      for (double x : grid) {
        const long target = std::lround(x / (pf * pf));
        similarity_steps(state, params, env, target - done, env_rng);
        done = target;
        results[f][r].push_back(exploit_reward(state, params, env, scope, algo_rng));
      }
    }
  });

  CurveTable table;
  for (std::size_t f = 0; f < n_pf; ++f) append_summaries(table, pf_label("", cfg.pf[f]), xs[f], results[f]);
  return table;
}

CurveTable run_pref_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  const Source source = make_source(cfg);
  const AlgoParams params = staged_params(cfg);
  const auto grid = sorted_grid(cfg.tr_grid);
  const std::size_t n_pf = cfg.pf.size();

  std::vector<std::vector<std::vector<double>>> results(
      n_pf, std::vector<std::vector<double>>(cfg.replicates));
  std::vector<std::vector<double>> xs(n_pf);
  for (std::size_t f = 0; f < n_pf; ++f) {
    const double pf = cfg.pf[f];
    for (double x : grid) xs[f].push_back(std::round(x / pf) * pf);
  }

  for_each_replicate(cfg.replicates, cfg.threads, [&](int r) {
    for (std::size_t f = 0; f < n_pf; ++f) {
      const double pf = cfg.pf[f];
      const Environment env = source.environment(cfg, r, pf);
      const Split split = random_split(env.n_items(), seed_for(cfg, Stream::split, r));
      const long n_sim = std::lround(cfg.ts_fixed / (pf * pf));
      if (n_sim > static_cast<long>(split.first.size()))
        throw ParameterError("similarity phase of " + std::to_string(n_sim) +
                             " steps exceeds |I1| = " + std::to_string(split.first.size()));
      const auto last = static_cast<std::size_t>(std::lround(grid.back() / pf));
      if (last > split.second.size())
        throw ParameterError("tr_grid needs " + std::to_string(last) +
                             " preference recommendations but |I2| = " +
                             std::to_string(split.second.size()));

      AlgoState state = staged_state(env, split);
      const auto scope = scope_mask(cfg, env, split);
      Rng stage_rng(seed_for(cfg, Stream::staging, r, f));
      Rng env_rng(seed_for(cfg, Stream::responses, r, f));
      Rng algo_rng(seed_for(cfg, Stream::algorithm, r, f));
      similarity_steps(state, params, env, n_sim, env_rng);
      const auto orders = private_orders(env.n_users(), split.second, stage_rng);
      std::size_t done = 0;
      for (double x : grid) {
        const auto target = static_cast<std::size_t>(std::lround(x / pf));
        preference_steps(state, env, orders, done, target - done, env_rng);
        done = target;
        results[f][r].push_back(exploit_reward(state, params, env, scope, algo_rng));
      }
    }
  });

  CurveTable table;
  for (std::size_t f = 0; f < n_pf; ++f) append_summaries(table, pf_label("", cfg.pf[f]), xs[f], results[f]);
  return table;
}

CurveTable run_synthetic_theorem(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.corpus.empty()) throw ParameterError("synthetic-theorem runs on a synthetic model only");
  const bool blocks = cfg.model == "blocks";

  std::vector<std::shared_ptr<const PreferenceMatrix>> models(cfg.replicates);
  double gamma = 0.0;
  for (int r = 0; r < cfg.replicates; ++r) {
    models[r] = synthetic_preferences(cfg, r);
    gamma = std::max(gamma, models[r]->achieved_gamma);
  }

  CurveTable table;
  for (double pf : cfg.pf) {
    BoundsInput in;
    in.n_users = cfg.n_users;
    in.n_items = cfg.n_items;
    in.n_types = cfg.n_types;
    in.delta_gap = blocks ? 0.5 : cfg.delta;
    in.nu = blocks ? 1.0 / cfg.n_types : cfg.nu;
    in.pf = pf;
    in.gamma = gamma;
    in.alpha = cfg.alpha;
    in.eta = cfg.eta;
    in.batch_size = cfg.batch_size;
    in.k_neighbors = cfg.k_neighbors;
    in.confidence = cfg.confidence;
    in.horizon = static_cast<double>(cfg.horizon);
    in.lambda = cfg.lambda;

    AlgoParams params = algo_params(cfg, FeedbackMode::one_class);
    if (cfg.use_recommended) {
      const auto rec = recommended_params(in);
      params.eta = in.eta = rec.eta;
      params.k_neighbors = static_cast<int>(in.k_neighbors = rec.k_neighbors);
      params.batch_size = static_cast<int>(in.batch_size = rec.batch_size);
    }
    const auto flags = check_conditions(in);
    if (!flags.all()) {
      std::string failed;
      for (const auto& [name, ok] : flags.named())
        if (!ok) failed += (failed.empty() ? "" : " ") + name;
      std::cerr << "warning: validity conditions not met for " << pf_label("", pf) << ": "
                << failed << '\n';
    }

    std::vector<std::vector<double>> step(cfg.replicates), cumulative(cfg.replicates);
    for_each_replicate(cfg.replicates, cfg.threads, [&](int r) {
      const auto env = Environment::synthetic(models[r], pf, FeedbackMode::one_class,
                                              seed_for(cfg, Stream::hidden_ratings, r),
                                              cfg.fixed_ratings);
      const auto trace = run(env, params, cfg.horizon, derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)}));
      long total = 0;
      for (long t = 0; t < cfg.horizon; ++t) {
        const long c = likable_count_at(env, trace, t);
        total += c;
        step[r].push_back(static_cast<double>(c) / cfg.n_users);
        cumulative[r].push_back(static_cast<double>(total) / (static_cast<double>(cfg.n_users) * (t + 1)));
      }
    });

    std::vector<double> xs(static_cast<std::size_t>(cfg.horizon));
    for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = static_cast<double>(t + 1);
    append_summaries(table, pf_label("step ", pf), xs, step);
    append_summaries(table, pf_label("cumulative ", pf), xs, cumulative);

    try {
      const double ts = t_start(in);
      table.rows.push_back({ts, 0.0, 0.0, 1, pf_label("t_start ", pf)});
      for (long T = std::max<long>(1, static_cast<long>(std::ceil(ts))); T <= cfg.horizon; ++T) {
        BoundsInput at = in;
        at.horizon = static_cast<double>(T);
        const double ts_T = t_start(at);
        if (T >= ts_T)
          table.rows.push_back({static_cast<double>(T), reward_lower_bound(at, ts_T), 0.0, 1,
                                pf_label("bound ", pf)});
      }
    } catch (const DomainError& e) {
      std::cerr << "warning: no cold-start time for " << pf_label("", pf) << ": " << e.what()
                << '\n';
    }
  }
  return table;
}

CurveTable run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "one-vs-two") return run_one_vs_two(cfg);
  if (cfg.experiment == "sim-scaling") return run_sim_scaling(cfg);
  if (cfg.experiment == "pref-scaling") return run_pref_scaling(cfg);
  if (cfg.experiment == "synthetic-theorem") return run_synthetic_theorem(cfg);
  throw ParameterError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace occf
