#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "occf/errors.hpp"
#include "occf/ingest.hpp"

using namespace occf;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("occf_test_" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("parse a single double-colon row") {
  const auto raw = parse_ratings_text("1::10::4::978300760\n", RatingsFormat::detect);
  REQUIRE(raw.triples.size() == 1);
  CHECK(raw.triples[0].user == 1);
  CHECK(raw.triples[0].item == 10);
  CHECK(raw.triples[0].rating == 4);
  CHECK(raw.triples[0].timestamp == 978300760);
  CHECK(raw.rows_read == 1);
}

TEST_CASE("duplicates keep the latest rating") {
  auto raw = parse_ratings_text("1::10::3::100\n1::10::5::200\n", RatingsFormat::double_colon);
  REQUIRE(raw.triples.size() == 1);
  CHECK(raw.triples[0].rating == 5);
  CHECK(raw.duplicates_resolved == 1);
  raw = parse_ratings_text("1::10::5::200\n1::10::3::100\n", RatingsFormat::double_colon);
  CHECK(raw.triples[0].rating == 5);
  raw = parse_ratings_text("1::10::5\n1::10::2\n", RatingsFormat::double_colon);
  CHECK(raw.triples[0].rating == 2);  // no timestamps: last in file
}

TEST_CASE("csv input with header") {
  const auto raw = parse_ratings_text("userId,movieId,rating,timestamp\n3,7,5,1\n4,7,1,2\n",
                                      RatingsFormat::detect);
  CHECK(raw.triples.size() == 2);
  CHECK(raw.triples[1].user == 4);
}

TEST_CASE("parse errors") {
  try {
    parse_ratings_text("", RatingsFormat::detect);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("no ratings parsed") != std::string::npos);
  }
  try {
    parse_ratings_text("1::2::3::4\n1::x::3::4\n", RatingsFormat::detect);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_ratings_text("1::2\n", RatingsFormat::detect), ParseError);
  CHECK_THROWS_AS(parse_ratings_format("xml"), ParameterError);
  CHECK_THROWS_AS(parse_ratings(temp_path("does_not_exist")), IoError);
}

TEST_CASE("binarization rule") {
  CHECK(binarize_rating(4) == 1);
  CHECK(binarize_rating(5) == 1);
  CHECK(binarize_rating(3) == -1);
  CHECK(binarize_rating(1) == -1);
  CHECK(binarize_rating(2) == -1);
  CHECK_THROWS_AS(binarize_rating(0), ParameterError);
  CHECK_THROWS_AS(binarize_rating(6), ParameterError);
  try {
    binarize_rating(3.5);
    FAIL("expected an error");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("3.5") != std::string::npos);
  }
  CHECK(binarize_rating(3.5, HalfStars::threshold) == -1);
  CHECK(binarize_rating(4.5, HalfStars::threshold) == 1);
  CHECK(binarize_rating(0.5, HalfStars::threshold) == -1);
  CHECK_THROWS_AS(binarize_rating(4.25, HalfStars::threshold), ParameterError);
  CHECK_THROWS_AS(binarize_rating(0, HalfStars::threshold), ParameterError);
  for (int r = 1; r <= 5; ++r)
    CHECK(binarize_rating(r, HalfStars::threshold) == binarize_rating(r));
  CHECK_THROWS_AS(parse_half_stars("round"), ParameterError);
}

TEST_CASE("balanced item passes a zero bias tolerance; unrated entries are zero") {
  std::vector<SignedRating> r;
  for (int u = 0; u < 20; ++u) r.push_back({u, 7, static_cast<std::int8_t>(u < 10 ? 1 : -1)});
  r.push_back({0, 8, 1});  // biased item, filtered out
  SelectionConfig cfg;
  cfg.n_users_out = 20;
  cfg.n_items_out = 1;
  cfg.bias_tolerance = 0.0;
  const auto m = select_submatrix(r, cfg);
  CHECK(m.col_ids == std::vector<std::int64_t>{7});
  cfg.n_items_out = 2;
  try {
    select_submatrix(r, cfg);
    FAIL("expected an error");
  } catch (const SelectionError& e) {
    CHECK(std::string(e.what()).find("only 1 items") != std::string::npos);
  }
  cfg.mode = SelectionMode::most_rated;
  cfg.n_users_out = 20;
  const auto all = select_submatrix(r, cfg);
  CHECK(all.col_ids == std::vector<std::int64_t>{7, 8});
  CHECK(all.entries(1, 1) == 0);
}

namespace {

// Straightforward reimplementation of the filter and both rankings.
RatingsMatrix brute_select(const std::vector<SignedRating>& r, const SelectionConfig& cfg) {
  std::map<std::int64_t, std::pair<int, int>> item;  // pos, neg
  for (const auto& x : r) (x.value > 0 ? item[x.item].first : item[x.item].second)++;
  std::vector<std::int64_t> kept;
  for (const auto& [id, pn] : item) {
    const int n = pn.first + pn.second;
    if (n < static_cast<int>(cfg.min_item_count)) continue;
    if (cfg.mode == SelectionMode::debiased &&
        std::abs(pn.first - pn.second) > cfg.bias_tolerance * n)
      continue;
    kept.push_back(id);
  }
  auto count = [&](std::int64_t id) { return item[id].first + item[id].second; };
  std::stable_sort(kept.begin(), kept.end(),
                   [&](auto a, auto b) { return count(a) > count(b); });
  kept.resize(cfg.n_items_out);
  std::map<std::int64_t, int> ucount;
  for (const auto& x : r)
    if (std::find(kept.begin(), kept.end(), x.item) != kept.end()) ucount[x.user]++;
  std::vector<std::int64_t> users;
  for (const auto& [id, c] : ucount) users.push_back(id);
  std::stable_sort(users.begin(), users.end(),
                   [&](auto a, auto b) { return ucount[a] > ucount[b]; });
  users.resize(cfg.n_users_out);
  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(users.size(), kept.size());
  for (const auto& x : r) {
    const auto ui = std::find(users.begin(), users.end(), x.user);
    const auto ii = std::find(kept.begin(), kept.end(), x.item);
    if (ui != users.end() && ii != kept.end())
      m.entries(static_cast<std::size_t>(ui - users.begin()), static_cast<std::size_t>(ii - kept.begin())) = x.value;
  }
  m.row_ids = users;
  m.col_ids = kept;
  return m;
}

}  // namespace

TEST_CASE("selection matches the brute-force oracle on random 50x40 inputs") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SignedRating> r;
    std::bernoulli_distribution present(0.3 + 0.02 * trial), pos(0.5);
    for (int u = 0; u < 50; ++u)
      for (int i = 0; i < 40; ++i)
        if (present(gen)) r.push_back({100 + u, 1000 + i, static_cast<std::int8_t>(pos(gen) ? 1 : -1)});
    SelectionConfig cfg;
    cfg.n_users_out = 30;
    cfg.n_items_out = 10;
    cfg.min_item_count = 5;
    cfg.bias_tolerance = 0.3;
    cfg.mode = trial % 2 ? SelectionMode::most_rated : SelectionMode::debiased;
    const auto want = brute_select(r, cfg);
    const auto got = select_submatrix(r, cfg);
    CHECK(got.row_ids == want.row_ids);
    CHECK(got.col_ids == want.col_ids);
    CHECK(matrix_grid_text(got) == matrix_grid_text(want));
    CHECK(got.stats == compute_stats(got.entries));
    CHECK(matrix_grid_text(select_submatrix(r, cfg)) == matrix_grid_text(got));
  }
}

TEST_CASE("grid export layout and round trip") {
  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(2, 2);
  m.entries(0, 0) = 1;
  m.entries(1, 0) = -1;
  m.entries(1, 1) = 1;
  CHECK(matrix_grid_text(m) == "1 0\n-1 1\n");

  const auto path = temp_path("grid.txt");
  export_matrix_image_data(m, path);
  const auto back = import_matrix_grid(path);
  CHECK(back.n_users() == 2);
  CHECK(back.n_items() == 2);
  const auto again = temp_path("grid2.txt");
  export_matrix_image_data(back, again);
  CHECK(slurp(path) == slurp(again));
  fs::remove(path);
  fs::remove(again);
}

TEST_CASE("exported token count is N*M") {
  std::mt19937_64 gen(1);
  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(13, 17);
  for (std::size_t u = 0; u < 13; ++u)
    for (std::size_t i = 0; i < 17; ++i) m.entries(u, i) = static_cast<std::int8_t>(static_cast<int>(gen() % 3) - 1);
  std::istringstream in(matrix_grid_text(m));
  std::string tok;
  std::size_t n = 0;
  while (in >> tok) ++n;
  CHECK(n == 13 * 17);
}

TEST_CASE("corpus file keeps ids and stats") {
  std::vector<SignedRating> r{{1, 5, 1}, {1, 6, -1}, {2, 5, -1}, {3, 6, 1}, {2, 6, 1}};
  SelectionConfig cfg;
  cfg.n_users_out = 3;
  cfg.n_items_out = 2;
  cfg.mode = SelectionMode::most_rated;
  const auto m = select_submatrix(r, cfg);
  const auto path = temp_path("corpus.txt");
  write_corpus(m, cfg, path);
  const auto back = load_corpus(path);
  CHECK(back.row_ids == m.row_ids);
  CHECK(back.col_ids == m.col_ids);
  CHECK(matrix_grid_text(back) == matrix_grid_text(m));
  CHECK(back.stats == m.stats);
  fs::remove(path);
  fs::remove(path.string() + ".meta");
}

TEST_CASE("malformed grids are rejected") {
  const auto path = temp_path("bad.txt");
  for (const char* text : {"1 0\n1\n", "1 2\n", "", "1 a\n"}) {
    std::ofstream(path) << text;
    CHECK_THROWS_AS(import_matrix_grid(path), ParseError);
  }
  fs::remove(path);
}
