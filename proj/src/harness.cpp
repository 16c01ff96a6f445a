#include "occf/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "occf/errors.hpp"

namespace occf {

long stored_reward_sum(const Environment& env, const RunTrace& trace, long t) {
  const auto& entries = env.ratings().entries;
  const auto& step = trace.steps.at(static_cast<std::size_t>(t));
  long sum = 0;
  for (std::size_t u = 0; u < step.items.size(); ++u)
    if (step.items[u] != kExhausted) sum += entries(u, static_cast<std::size_t>(step.items[u]));
  return sum;
}

double reward_at(const Environment& env, const RunTrace& trace, long t) {
  if (env.is_synthetic()) throw DispatchError("reward_at needs a replay environment; use likable_reward_at");
  return static_cast<double>(stored_reward_sum(env, trace, t)) / static_cast<double>(trace.n_users);
}

long likable_count_at(const Environment& env, const RunTrace& trace, long t) {
  const auto& prefs = env.preferences();
  const auto& step = trace.steps.at(static_cast<std::size_t>(t));
  long count = 0;
  for (std::size_t u = 0; u < step.items.size(); ++u)
    if (step.items[u] != kExhausted && prefs.likable(u, static_cast<std::size_t>(step.items[u])))
      ++count;
  return count;
}

double likable_reward_at(const Environment& env, const RunTrace& trace, long t) {
  if (!env.is_synthetic()) throw DispatchError("likable_reward_at needs a synthetic environment; use reward_at");
  return static_cast<double>(likable_count_at(env, trace, t)) / static_cast<double>(trace.n_users);
}

std::vector<double> acc_reward_curve(const Environment& env, const RunTrace& trace) {
  if (env.is_synthetic()) throw DispatchError("acc-reward is defined on replay environments");
  std::vector<double> acc(trace.steps.size() + 1, 0.0);
  long running = 0;
  const auto n = static_cast<double>(trace.n_users);
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    running += stored_reward_sum(env, trace, static_cast<long>(t));
    acc[t + 1] = static_cast<double>(running) / n;
  }
  return acc;
}

double step_reward(const Environment& env, std::span<const int> items) {
  long total = 0;
  for (std::size_t u = 0; u < items.size(); ++u) {
    if (items[u] == kExhausted) continue;
    const auto i = static_cast<std::size_t>(items[u]);
    if (env.is_synthetic())
      total += env.preferences().likable(u, i) ? 1 : 0;
    else
      total += env.ratings().entries(u, i);
  }
  return static_cast<double>(total) / static_cast<double>(items.size());
}

std::vector<std::string> CurveTable::labels() const {
  std::set<std::string> seen;
  for (const auto& r : rows) seen.insert(r.label);
  return {seen.begin(), seen.end()};
}

std::vector<CurveRow> CurveTable::curve(const std::string& label) const {
  std::vector<CurveRow> out;
  for (const auto& r : rows)
    if (r.label == label) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string curve_csv(const CurveTable& table) {
  if (table.rows.empty()) throw ParameterError("cannot write an empty curve table");
  std::vector<CurveRow> rows = table.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.label != b.label ? a.label < b.label : a.x < b.x;
  });
  std::string out = "x,mean,stderr,n,label\n";
  for (const auto& r : rows) {
    if (r.label.find_first_of(",\n\r") != std::string::npos)
      throw ParameterError("curve label may not contain commas or newlines: " + r.label);
    out += format_number(r.x) + ',' + format_number(r.mean) + ',' + format_number(r.std_error) +
           ',' + std::to_string(r.n) + ',' + r.label + '\n';
  }
  return out;
}

void write_csv(const CurveTable& table, const std::filesystem::path& path) {
  const std::string text = curve_csv(table);  // throws before touching the file
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

CurveTable parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "x,mean,stderr,n,label")
    throw ParseError("missing curve header", 1);
  CurveTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (auto& f : fields) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) throw ParseError("too few fields", line_no);
      f = line.substr(start, comma - start);
      start = comma + 1;
    }
    CurveRow r;
    try {
      r.x = std::stod(fields[0]);
      r.mean = std::stod(fields[1]);
      r.std_error = std::stod(fields[2]);
      r.n = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ParseError("bad number", line_no);
    }
    r.label = line.substr(start);
    table.rows.push_back(std::move(r));
  }
  return table;
}

CurveTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_curve_csv(buffer.str());
}

namespace {

double interpolate(const std::vector<CurveRow>& curve, double x) {
  if (x <= curve.front().x) return curve.front().mean;
  for (std::size_t j = 1; j < curve.size(); ++j) {
    if (x <= curve[j].x) {
      const double x0 = curve[j - 1].x;
      const double x1 = curve[j].x;
      if (x1 == x0) return curve[j].mean;
      const double w = (x - x0) / (x1 - x0);
      return curve[j - 1].mean + w * (curve[j].mean - curve[j - 1].mean);
    }
  }
  return curve.back().mean;
}

}  // namespace

double collapse_gap(const CurveTable& table, const std::vector<std::string>& labels) {
  std::vector<std::vector<CurveRow>> curves;
  for (const auto& label : labels) {
    auto c = table.curve(label);
    if (c.empty()) throw ParameterError("no curve labelled " + label);
    curves.push_back(std::move(c));
  }
  if (curves.size() < 2) return 0.0;

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    lo = std::max(lo, c.front().x);
    hi = std::min(hi, c.back().x);
    for (const auto& r : c) {
      y_min = std::min(y_min, r.mean);
      y_max = std::max(y_max, r.mean);
    }
  }
  if (lo > hi) throw ParameterError("curves share no common x range");

  std::set<double> grid{lo, hi};
  for (const auto& c : curves)
    for (const auto& r : c)
      if (r.x >= lo && r.x <= hi) grid.insert(r.x);

  double gap = 0.0;
  for (double x : grid) {
    double a = std::numeric_limits<double>::infinity();
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
      const double y = interpolate(c, x);
      a = std::min(a, y);
      b = std::max(b, y);
    }
    gap = std::max(gap, b - a);
  }
  const double range = y_max - y_min;
  if (range <= 0.0) return gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return gap / range;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t a = j >= half ? j - half : 0;
    const std::size_t b = std::min(n - 1, j + half);
    double sum = 0;
    for (std::size_t i = a; i <= b; ++i) sum += series[i];
    out[j] = sum / static_cast<double>(b - a + 1);
  }
  return out;
}

bool is_inverse_u(std::span<const double> series, std::size_t window) {
  if (series.size() < 3) return false;
  const auto smooth = moving_average(series, window);
  const auto peak = static_cast<std::size_t>(
      std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  if (peak == 0 || peak + 1 >= smooth.size()) return false;
  // mean derivative before the peak is (s[peak]-s[0])/peak, after it likewise
  const double rise = smooth[peak] - smooth.front();
  const double fall = smooth.back() - smooth[peak];
  return rise > 0.0 && fall < 0.0;
}

void for_each_replicate(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int r = 0; r < n; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int r = next++; r < n; r = next++) {
        try {
          fn(r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

RatingsMatrix make_clustered_signed_matrix(const PreferenceMatrix& prefs,
                                           double observed_fraction, std::uint64_t seed) {
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
    throw ParameterError("observed_fraction must lie in (0, 1]");
  Rng rng(seed);
  RatingsMatrix m;
  m.entries = Grid<std::int8_t>(prefs.n_users(), prefs.n_items());
  for (std::size_t u = 0; u < prefs.n_users(); ++u) {
    for (std::size_t i = 0; i < prefs.n_items(); ++i) {
      const bool observed = rng.bernoulli(observed_fraction);
      const bool like = rng.uniform() < prefs.probs(u, i);
      if (observed) m.entries(u, i) = like ? 1 : -1;
    }
  }
  for (std::size_t u = 0; u < prefs.n_users(); ++u) m.row_ids.push_back(static_cast<std::int64_t>(u));
  for (std::size_t i = 0; i < prefs.n_items(); ++i) m.col_ids.push_back(static_cast<std::int64_t>(i));
  m.stats = compute_stats(m.entries);
  return m;
}

void write_metadata(const ExperimentConfig& cfg, const std::filesystem::path& csv_path,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  auto meta_path = csv_path;
  meta_path += ".meta";
  std::ofstream out(meta_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + meta_path.string());
  for (const auto& [key, value] : cfg.to_pairs()) out << key << " = " << value << '\n';
  for (const auto& [key, value] : extra) out << key << " = " << value << '\n';
  if (!out) throw IoError("write failed for " + meta_path.string());
}

}  // namespace occf
