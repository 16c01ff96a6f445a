#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <numeric>

#include "occf/errors.hpp"
#include "occf/model.hpp"

using namespace occf;

namespace {

ModelParams params(int n, int m, int k, double delta, double nu) {
  ModelParams p;
  p.n_users = n;
  p.n_items = m;
  p.n_types = k;
  p.delta = delta;
  p.nu = nu;
  return p;
}

// Straight double loop over all user pairs.
double brute_gamma(const PreferenceMatrix& pm) {
  const std::size_t n = pm.n_users();
  auto dot = [&](std::size_t u, std::size_t v) {
    double s = 0;
    for (std::size_t i = 0; i < pm.n_items(); ++i) s += pm.probs(u, i) * pm.probs(v, i);
    return s;
  };
  double gamma = 0;
  for (std::size_t u = 0; u < n; ++u) {
    double same = std::numeric_limits<double>::infinity();
    double other = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (pm.type_of[v] == pm.type_of[u]) same = std::min(same, dot(u, v));
      else other = std::max(other, dot(u, v));
    }
    gamma = std::max(gamma, other / same);
  }
  return gamma;
}

PreferenceMatrix from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> types,
                           int n_types) {
  PreferenceMatrix pm;
  pm.probs = Grid<double>(rows.size(), rows.front().size());
  for (std::size_t u = 0; u < rows.size(); ++u)
    for (std::size_t i = 0; i < rows[u].size(); ++i) pm.probs(u, i) = rows[u][i];
  pm.type_of = std::move(types);
  pm.n_types = n_types;
  return pm;
}

}  // namespace

TEST_CASE("generated matrices satisfy the model invariants on every seed") {
  const auto p = params(36, 50, 3, 0.2, 0.3);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto pm = generate_model(p, seed);
    REQUIRE(pm.n_users() == 36);
    std::vector<int> members(3, 0);
    for (std::size_t u = 0; u < pm.n_users(); ++u) {
      CHECK(pm.type_of[u] == static_cast<int>(u % 3));
      ++members[static_cast<std::size_t>(pm.type_of[u])];
      int likable = 0;
      for (std::size_t i = 0; i < pm.n_items(); ++i) {
        const double x = pm.probs(u, i);
        CHECK((x >= 0.7 || x <= 0.3));
        CHECK((x >= 0.0 && x <= 1.0));
        likable += pm.likable(u, i);
        // same type, same likable set
        const std::size_t head = static_cast<std::size_t>(pm.type_of[u]);
        CHECK(pm.likable(u, i) == pm.likable(head, i));
      }
      CHECK(likable == likable_count(p));
      CHECK(likable >= 0.3 * 50);
    }
    for (int c : members) CHECK(c >= 36 / (2 * 3));
  }
}

TEST_CASE("scan of a 60x120 draw finds no entry inside (0.2, 0.8)") {
  const auto pm = generate_model(params(60, 120, 3, 0.3, 0.25), 7);
  std::size_t scanned = 0, inside = 0;
  for (std::size_t u = 0; u < pm.n_users(); ++u)
    for (std::size_t i = 0; i < pm.n_items(); ++i) {
      ++scanned;
      if (pm.probs(u, i) > 0.2 && pm.probs(u, i) < 0.8) ++inside;
    }
  CHECK(scanned == 7200);
  CHECK(inside == 0);
}

TEST_CASE("single type shares one likable set and reports gamma 0") {
  const auto pm = generate_model(params(10, 20, 1, 0.25, 0.5), 3);
  CHECK(pm.achieved_gamma == 0.0);
  for (std::size_t u = 1; u < 10; ++u)
    for (std::size_t i = 0; i < 20; ++i) CHECK(pm.likable(u, i) == pm.likable(0, i));
  int count = 0;
  for (std::size_t i = 0; i < 20; ++i) count += pm.likable(0, i);
  CHECK(count == 10);
}

TEST_CASE("round robin gives exactly N/K users per type") {
  const auto pm = generate_model(params(40, 30, 4, 0.25, 0.3), 11);
  std::vector<int> members(4, 0);
  for (int t : pm.type_of) ++members[static_cast<std::size_t>(t)];
  CHECK(members == std::vector<int>{10, 10, 10, 10});
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(generate_model(params(5, 3, 4, 0.25, 0.5), 1), ParameterError);  // K > M
  CHECK_THROWS_AS(generate_model(params(3, 10, 4, 0.25, 0.5), 1), ParameterError);  // K > N
  CHECK_THROWS_AS(generate_model(params(5, 10, 1, 0.6, 0.5), 1), ParameterError);
  CHECK_THROWS_AS(generate_model(params(5, 10, 1, 0.25, 0.05), 1), ParameterError);  // nu M < 1
  auto p = params(5, 10, 1, 0.25, 0.5);
  p.pf = 0.0;
  CHECK_THROWS_AS(generate_model(p, 1), ParameterError);
}

TEST_CASE("check_separation matches the brute-force double loop") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto pm = generate_model(params(12, 15, 3, 0.2, 0.4), seed);
    CHECK(check_separation(pm) == doctest::Approx(brute_gamma(pm)).epsilon(1e-12));
    CHECK(pm.achieved_gamma == doctest::Approx(brute_gamma(pm)).epsilon(1e-12));
  }
}

TEST_CASE("check_separation edge cases") {
  SUBCASE("orthogonal supports give 0") {
    const auto pm = make_disjoint_block_model(6, 6, 2);
    CHECK(check_separation(pm) == 0.0);
  }
  SUBCASE("identical vectors across types give 1") {
    const auto pm = from_rows({{0.9, 0.1, 0.8}, {0.9, 0.1, 0.8}, {0.9, 0.1, 0.8}}, {0, 1, 2}, 3);
    CHECK(check_separation(pm) == doctest::Approx(1.0));
  }
  SUBCASE("zero same-type product is degenerate") {
    const auto pm = from_rows({{0.9, 0.0}, {0.0, 0.9}, {0.1, 0.1}}, {0, 0, 1}, 2);
    CHECK_THROWS_AS(check_separation(pm), DegenerateSeparationError);
  }
  SUBCASE("fewer than two types") {
    const auto pm = from_rows({{0.9, 0.1}, {0.8, 0.2}}, {0, 0}, 1);
    CHECK(check_separation(pm) == 0.0);
  }
}

TEST_CASE("gamma is invariant under relabelling users") {
  const auto pm = generate_model(params(15, 20, 3, 0.25, 0.3), 5);
  std::vector<std::size_t> order(pm.n_users());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::rotate(order.begin(), order.begin() + 4, order.end());
  PreferenceMatrix shuffled = pm;
  for (std::size_t u = 0; u < order.size(); ++u) {
    for (std::size_t i = 0; i < pm.n_items(); ++i) shuffled.probs(u, i) = pm.probs(order[u], i);
    shuffled.type_of[u] = pm.type_of[order[u]];
  }
  CHECK(check_separation(shuffled) == doctest::Approx(check_separation(pm)).epsilon(1e-12));
}

TEST_CASE("gamma target retries and failure") {
  auto p = params(20, 40, 4, 0.25, 0.3);
  p.gamma_target = 0.99;
  const auto pm = generate_model(p, 2);
  CHECK(pm.achieved_gamma <= 0.99);

  p.gamma_target = 0.0;  // random likable sets overlap, so this cannot be met
  p.retry_budget = 5;
  try {
    generate_model(p, 2);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.best_gamma() > 0.0);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto p = params(20, 25, 2, 0.3, 0.4);
  CHECK(generate_model(p, 9).probs == generate_model(p, 9).probs);
  CHECK_FALSE(generate_model(p, 9).probs == generate_model(p, 10).probs);
}

TEST_CASE("block model") {
  const auto pm = make_disjoint_block_model(20, 10, 5);
  for (std::size_t u = 0; u < 20; ++u) {
    const int c = pm.type_of[u];
    CHECK(c == static_cast<int>(u % 5));
    for (std::size_t i = 0; i < 10; ++i) {
      const bool in_block = static_cast<int>(i) / 2 == c;
      CHECK(pm.probs(u, i) == (in_block ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("response channel limits") {
  auto pm = std::make_shared<PreferenceMatrix>(from_rows({{1.0, 0.0, 0.7}}, {0}, 1));
  Rng rng(4);
  SUBCASE("pf = 0 never answers") {
    const auto env = Environment::synthetic(pm, 0.0, FeedbackMode::one_class, 1);
    for (int r = 0; r < 1000; ++r) CHECK(sample_response(env, 0, 2, rng) == 0);
  }
  SUBCASE("pf = 1 and p = 1 always likes") {
    const auto env = Environment::synthetic(pm, 1.0, FeedbackMode::one_class, 1);
    for (int r = 0; r < 1000; ++r) CHECK(sample_response(env, 0, 0, rng) == 1);
  }
  SUBCASE("two-class reveals dislikes") {
    const auto env = Environment::synthetic(pm, 1.0, FeedbackMode::two_class, 1);
    for (int r = 0; r < 100; ++r) CHECK(sample_response(env, 0, 1, rng) == -1);
  }
}

TEST_CASE("one-class response rate is p * pf within 3 standard errors") {
  auto pm = std::make_shared<PreferenceMatrix>(from_rows({{0.8, 0.3}}, {0}, 1));
  const auto env = Environment::synthetic(pm, 0.5, FeedbackMode::one_class, 1);
  Rng rng(12345);
  const int draws = 1000000;
  long hits = 0;
  for (int r = 0; r < draws; ++r) hits += sample_response(env, 0, 0, rng);
  const double rate = static_cast<double>(hits) / draws;
  const double se = std::sqrt(0.4 * 0.6 / draws);
  CHECK(std::abs(rate - 0.4) <= 3 * se);

  hits = 0;
  const int r2 = 200000;
  for (int r = 0; r < r2; ++r) hits += sample_response(env, 0, 1, rng);
  CHECK(std::abs(static_cast<double>(hits) / r2 - 0.15) <= 3 * std::sqrt(0.15 * 0.85 / r2));
}

TEST_CASE("fixed hidden ratings repeat per (user, item)") {
  auto pm = std::make_shared<PreferenceMatrix>(from_rows({{0.5, 0.5, 0.5, 0.5}}, {0}, 1));
  const auto env = Environment::synthetic(pm, 1.0, FeedbackMode::two_class, 77, true);
  Rng rng(1);
  for (std::size_t i = 0; i < 4; ++i) {
    const int first = sample_response(env, 0, i, rng);
    for (int r = 0; r < 20; ++r) CHECK(sample_response(env, 0, i, rng) == first);
  }
}

TEST_CASE("replay channel") {
  auto m = std::make_shared<RatingsMatrix>();
  m->entries = Grid<std::int8_t>(1, 3);
  m->entries(0, 0) = 1;
  m->entries(0, 1) = -1;
  Rng rng(2);
  const auto one = Environment::replay(m, 1.0, FeedbackMode::one_class);
  const auto two = Environment::replay(m, 1.0, FeedbackMode::two_class);
  CHECK(sample_response(one, 0, 0, rng) == 1);
  CHECK(sample_response(one, 0, 1, rng) == 0);
  CHECK(sample_response(two, 0, 1, rng) == -1);
  CHECK(sample_response(two, 0, 2, rng) == 0);
  CHECK_THROWS_AS(one.preferences(), DispatchError);
  CHECK_THROWS_AS(Environment::replay(m, 1.5, FeedbackMode::one_class), ParameterError);
}

TEST_CASE("response streams are deterministic") {
  auto pm = std::make_shared<PreferenceMatrix>(generate_model(params(5, 8, 1, 0.2, 0.5), 1));
  const auto env = Environment::synthetic(pm, 0.6, FeedbackMode::one_class, 3);
  Rng a(99), b(99);
  for (int r = 0; r < 200; ++r)
    CHECK(sample_response(env, r % 5, r % 8, a) == sample_response(env, r % 5, r % 8, b));
}

TEST_CASE("preference matrix file round trip") {
  const auto p = params(7, 9, 2, 0.3, 0.4);
  const auto pm = generate_model(p, 21);
  const auto path = std::filesystem::temp_directory_path() / "occf_model_roundtrip.txt";
  write_preference_matrix(path, p, pm);
  const auto back = read_preference_matrix(path);
  CHECK(back.matrix.probs == pm.probs);
  CHECK(back.matrix.type_of == pm.type_of);
  CHECK(back.params.n_types == 2);
  CHECK(back.params.delta == doctest::Approx(0.3));
  std::filesystem::remove(path);
}
