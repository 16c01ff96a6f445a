#include "occf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "occf/errors.hpp"

namespace occf {

RatingStats compute_stats(const Grid<std::int8_t>& entries) {
  RatingStats stats;
  const auto data = entries.data();
  if (data.empty()) return stats;
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (auto v : data) {
    pos += v > 0;
    neg += v < 0;
  }
  stats.positive_fraction = static_cast<double>(pos) / static_cast<double>(data.size());
  stats.negative_fraction = static_cast<double>(neg) / static_cast<double>(data.size());
  return stats;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + sep.size();
  }
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const noexcept {
    return std::hash<std::int64_t>{}(p.first) * 1000003u ^ std::hash<std::int64_t>{}(p.second);
  }
};

}  // namespace

RatingsFormat parse_ratings_format(const std::string& text) {
  if (text == "::" || text == "double-colon" || text == "dat") return RatingsFormat::double_colon;
  if (text == "csv") return RatingsFormat::csv;
  if (text == "detect" || text == "auto") return RatingsFormat::detect;
  throw ParameterError("unknown ratings format '" + text + "'");
}

RawRatings parse_ratings_text(const std::string& text, RatingsFormat format) {
  RawRatings raw;
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::size_t, PairHash> index;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (format == RatingsFormat::detect) {
      format = view.find("::") != std::string_view::npos ? RatingsFormat::double_colon
                                                         : RatingsFormat::csv;
    }
    if (format == RatingsFormat::csv && raw.rows_read == 0 && !header_pending) {
      header_pending = true;  // first non-empty line of a CSV file is the header
      continue;
    }
    const auto fields = split(view, format == RatingsFormat::csv ? "," : "::");
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError("expected 3 or 4 fields, got " + std::to_string(fields.size()), line_no);
    RawRating r;
    if (!parse_number(fields[0], r.user)) throw ParseError("bad user id", line_no);
    if (!parse_number(fields[1], r.item)) throw ParseError("bad item id", line_no);
    if (!parse_number(fields[2], r.rating)) throw ParseError("bad rating", line_no);
    if (fields.size() == 4) {
      std::int64_t ts;
      if (!parse_number(fields[3], ts)) throw ParseError("bad timestamp", line_no);
      r.timestamp = ts;
    }
    ++raw.rows_read;

    const auto key = std::make_pair(r.user, r.item);
    auto [it, inserted] = index.emplace(key, raw.triples.size());
    if (inserted) {
      raw.triples.push_back(r);
      continue;
    }
    ++raw.duplicates_resolved;
    auto& kept = raw.triples[it->second];
    const bool older = kept.timestamp && r.timestamp && *r.timestamp < *kept.timestamp;
    if (!older) kept = r;
  }
  if (raw.triples.empty()) throw ParseError("no ratings parsed");
  return raw;
}

RawRatings parse_ratings(const std::filesystem::path& path, RatingsFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ratings_text(buffer.str(), format);
}

HalfStars parse_half_stars(const std::string& text) {
  if (text == "reject") return HalfStars::reject;
  if (text == "threshold") return HalfStars::threshold;
  throw ParameterError("unknown half-star policy '" + text + "'");
}

int binarize_rating(double rating, HalfStars policy) {
  const bool whole = rating == std::floor(rating) && rating >= 1.0 && rating <= 5.0;
  const bool half = 2 * rating == std::floor(2 * rating) && rating >= 0.5 && rating <= 5.0;
  if (policy == HalfStars::reject ? !whole : !half) {
    std::ostringstream os;
    os << "rating " << rating << " is outside "
       << (policy == HalfStars::reject ? "{1,2,3,4,5}" : "{0.5,1,...,5}");
    throw ParameterError(os.str());
  }
  return rating >= 4.0 ? 1 : -1;
}

std::vector<SignedRating> binarize(const RawRatings& raw, HalfStars policy) {
  std::vector<SignedRating> out;
  out.reserve(raw.triples.size());
  for (const auto& r : raw.triples)
    out.push_back({r.user, r.item, static_cast<std::int8_t>(binarize_rating(r.rating, policy))});
  return out;
}

SelectionMode parse_selection_mode(const std::string& text) {
  if (text == "debiased") return SelectionMode::debiased;
  if (text == "most-rated") return SelectionMode::most_rated;
  throw ParameterError("unknown selection mode '" + text + "'");
}

const char* to_string(SelectionMode mode) noexcept {
  return mode == SelectionMode::debiased ? "debiased" : "most-rated";
}

RatingsMatrix select_submatrix(const std::vector<SignedRating>& ratings,
                               const SelectionConfig& cfg) {
  if (cfg.n_users_out == 0 || cfg.n_items_out == 0)
    throw ParameterError("output dimensions must be positive");

  struct ItemCounts {
    std::size_t pos = 0, neg = 0;
  };
  std::map<std::int64_t, ItemCounts> items;
  for (const auto& r : ratings) {
    auto& c = items[r.item];
    (r.value > 0 ? c.pos : c.neg) += 1;
  }

  std::vector<std::pair<std::int64_t, std::size_t>> survivors;  // (id, count)
  for (const auto& [id, c] : items) {
    const std::size_t rated = c.pos + c.neg;
    if (rated < cfg.min_item_count) continue;
    if (cfg.mode == SelectionMode::debiased) {
      const double bias = std::fabs(static_cast<double>(c.pos) - static_cast<double>(c.neg)) /
                          static_cast<double>(rated);
      if (bias > cfg.bias_tolerance) continue;
    }
    survivors.emplace_back(id, rated);
  }
  if (survivors.size() < cfg.n_items_out) {
    std::ostringstream os;
    os << "only " << survivors.size() << " items survive the filters, " << cfg.n_items_out
       << " requested";
    if (cfg.mode == SelectionMode::debiased) os << "; try a larger bias_tolerance";
    throw SelectionError(os.str());
  }
  auto by_count = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::sort(survivors.begin(), survivors.end(), by_count);
  survivors.resize(cfg.n_items_out);

  std::unordered_map<std::int64_t, std::size_t> col_of;
  for (std::size_t c = 0; c < survivors.size(); ++c) col_of[survivors[c].first] = c;

  std::map<std::int64_t, std::size_t> user_counts;
  for (const auto& r : ratings)
    if (col_of.count(r.item)) ++user_counts[r.user];
  std::vector<std::pair<std::int64_t, std::size_t>> users(user_counts.begin(), user_counts.end());
  if (users.size() < cfg.n_users_out) {
    throw SelectionError("only " + std::to_string(users.size()) +
                         " users rated the selected items, " + std::to_string(cfg.n_users_out) +
                         " requested");
  }
  std::sort(users.begin(), users.end(), by_count);
  users.resize(cfg.n_users_out);
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t r = 0; r < users.size(); ++r) row_of[users[r].first] = r;

  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(cfg.n_users_out, cfg.n_items_out);
  for (const auto& r : ratings) {
    const auto row = row_of.find(r.user);
    const auto col = col_of.find(r.item);
    if (row != row_of.end() && col != col_of.end()) m.entries(row->second, col->second) = r.value;
  }
  for (const auto& u : users) m.row_ids.push_back(u.first);
  for (const auto& i : survivors) m.col_ids.push_back(i.first);
  m.stats = compute_stats(m.entries);
  return m;
}

std::string matrix_grid_text(const RatingsMatrix& m) {
  std::string out;
  out.reserve(m.n_users() * (m.n_items() * 3 + 1));
  for (std::size_t u = 0; u < m.n_users(); ++u) {
    const auto row = m.entries.row(u);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(static_cast<int>(row[i]));
    }
    out += '\n';
  }
  return out;
}

void export_matrix_image_data(const RatingsMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << matrix_grid_text(m);
  if (!out) throw IoError("write failed for " + path.string());
}

RatingsMatrix import_matrix_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::int8_t> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++rows;
    std::istringstream ls(line);
    std::size_t count = 0;
    int v;
    while (ls >> v) {
      if (v < -1 || v > 1) throw ParseError("grid token outside {-1,0,1}", rows);
      values.push_back(static_cast<std::int8_t>(v));
      ++count;
    }
    if (!ls.eof()) throw ParseError("non-integer grid token", rows);
    if (rows == 1) cols = count;
    if (count != cols || count == 0) throw ParseError("ragged grid row", rows);
  }
  if (rows == 0) throw ParseError("empty grid");
  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(rows, cols);
  std::copy(values.begin(), values.end(), m.entries.data().begin());
  for (std::size_t r = 0; r < rows; ++r) m.row_ids.push_back(static_cast<std::int64_t>(r));
  for (std::size_t c = 0; c < cols; ++c) m.col_ids.push_back(static_cast<std::int64_t>(c));
  m.stats = compute_stats(m.entries);
  return m;
}

void write_corpus(const RatingsMatrix& m, const SelectionConfig& cfg,
                  const std::filesystem::path& path) {
  export_matrix_image_data(m, path);
  auto meta_path = path;
  meta_path += ".meta";
  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw IoError("cannot write " + meta_path.string());
  meta.precision(10);
  meta << "rows = " << m.n_users() << '\n'
       << "cols = " << m.n_items() << '\n'
       << "positive_fraction = " << m.stats.positive_fraction << '\n'
       << "negative_fraction = " << m.stats.negative_fraction << '\n'
       << "mode = " << to_string(cfg.mode) << '\n'
       << "n_users_out = " << cfg.n_users_out << '\n'
       << "n_items_out = " << cfg.n_items_out << '\n'
       << "min_item_count = " << cfg.min_item_count << '\n'
       << "bias_tolerance = " << cfg.bias_tolerance << '\n'
       << "filter_order = "
       << (cfg.mode == SelectionMode::debiased ? "bias-filter-then-count-rank" : "count-rank")
       << '\n'
       << "user_rank = ratings-on-selected-items\n";
  meta << "row_ids =";
  for (auto id : m.row_ids) meta << ' ' << id;
  meta << "\ncol_ids =";
  for (auto id : m.col_ids) meta << ' ' << id;
  meta << '\n';
  if (!meta) throw IoError("write failed for " + meta_path.string());
}

RatingsMatrix load_corpus(const std::filesystem::path& path) {
  RatingsMatrix m = import_matrix_grid(path);
  auto meta_path = path;
  meta_path += ".meta";
  std::ifstream meta(meta_path);
  if (!meta) return m;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = std::string(trim(std::string_view(line).substr(0, eq)));
    if (key != "row_ids" && key != "col_ids") continue;
    std::istringstream values(line.substr(eq + 1));
    std::vector<std::int64_t> ids;
    std::int64_t id;
    while (values >> id) ids.push_back(id);
    auto& target = key == "row_ids" ? m.row_ids : m.col_ids;
    if (ids.size() == target.size()) target = std::move(ids);
  }
  return m;
}

}  // namespace occf
