#include "occf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "occf/errors.hpp"

namespace occf {

namespace {

std::string describe(const char* name, double value) {
  std::ostringstream os;
  os << name << " = " << value;
  return os.str();
}

// Gram matrix of the preference rows, upper triangle mirrored.
Grid<double> preference_gram(const PreferenceMatrix& pm) {
  const std::size_t n = pm.n_users();
  Grid<double> gram(n, n);
  for (std::size_t u = 0; u < n; ++u) {
    const auto pu = pm.probs.row(u);
    for (std::size_t v = u; v < n; ++v) {
      const auto pv = pm.probs.row(v);
      const double dot = std::inner_product(pu.begin(), pu.end(), pv.begin(), 0.0);
      gram(u, v) = dot;
      gram(v, u) = dot;
    }
  }
  return gram;
}

void draw_model(const ModelParams& params, Rng& rng, PreferenceMatrix& pm) {
  const auto n = static_cast<std::size_t>(params.n_users);
  const auto m = static_cast<std::size_t>(params.n_items);
  const int likable = likable_count(params);
  const double hi_lo = 0.5 + params.delta;
  const double lo_hi = 0.5 - params.delta;

  std::vector<std::vector<char>> type_likes(static_cast<std::size_t>(params.n_types),
                                            std::vector<char>(m, 0));
  std::vector<int> items(m);
  for (auto& likes : type_likes) {
    std::iota(items.begin(), items.end(), 0);
    rng.shuffle(items.begin(), items.end());
    for (int j = 0; j < likable; ++j) likes[static_cast<std::size_t>(items[j])] = 1;
  }

  pm.probs = Grid<double>(n, m);
  for (std::size_t u = 0; u < n; ++u) {
    const auto& likes = type_likes[static_cast<std::size_t>(pm.type_of[u])];
    for (std::size_t i = 0; i < m; ++i)
      pm.probs(u, i) = likes[i] ? rng.uniform(hi_lo, 1.0) : rng.uniform(0.0, lo_hi);
  }
}

}  // namespace

void ModelParams::validate() const {
  if (n_users <= 0) throw ParameterError("n_users must be positive");
  if (n_items <= 0) throw ParameterError("n_items must be positive");
  if (n_types <= 0) throw ParameterError("n_types must be positive");
  if (n_types > n_users) throw ParameterError("n_types must not exceed n_users");
  if (n_types > n_items) throw ParameterError("n_types must not exceed n_items");
  if (!(delta > 0.0 && delta <= 0.5)) throw ParameterError(describe("delta outside (0, 1/2]", delta));
  if (!(nu > 0.0 && nu <= 1.0)) throw ParameterError(describe("nu outside (0, 1]", nu));
  if (!(pf > 0.0 && pf <= 1.0)) throw ParameterError(describe("pf outside (0, 1]", pf));
  if (nu * n_items < 1.0 - 1e-9) throw ParameterError("nu * n_items must be at least 1");
  if (gamma_target && !(*gamma_target >= 0.0 && *gamma_target < 1.0))
    throw ParameterError(describe("gamma_target outside [0, 1)", *gamma_target));
  if (retry_budget < 1) throw ParameterError("retry_budget must be at least 1");
}

int likable_count(const ModelParams& params) {
  // The epsilon keeps e.g. 0.3 * 600 = 180.00000000000003 at 180.
  const double raw = params.nu * params.n_items;
  return std::min(params.n_items, static_cast<int>(std::ceil(raw - 1e-9)));
}

PreferenceMatrix generate_model(const ModelParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);

  PreferenceMatrix pm;
  pm.n_types = params.n_types;
  pm.type_of.resize(static_cast<std::size_t>(params.n_users));
  for (int u = 0; u < params.n_users; ++u) pm.type_of[static_cast<std::size_t>(u)] = u % params.n_types;

  const int attempts = params.gamma_target ? params.retry_budget : 1;
  double best_gamma = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < attempts; ++attempt) {
    draw_model(params, rng, pm);
    pm.achieved_gamma = check_separation(pm);
    if (!params.gamma_target || pm.achieved_gamma <= *params.gamma_target) return pm;
    best_gamma = std::min(best_gamma, pm.achieved_gamma);
  }
  std::ostringstream os;
  os << "no model with gamma <= " << *params.gamma_target << " after " << attempts
     << " draws; best gamma " << best_gamma;
  throw GenerationError(os.str(), best_gamma);
}

double check_separation(const PreferenceMatrix& pm) {
  if (pm.n_types < 2) return 0.0;
  const Grid<double> gram = preference_gram(pm);
  const std::size_t n = pm.n_users();
  double gamma = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double within = std::numeric_limits<double>::infinity();
    double across = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (pm.type_of[v] == pm.type_of[u])
        within = std::min(within, gram(u, v));
      else
        across = std::max(across, gram(u, v));
    }
    if (within <= 0.0)
      throw DegenerateSeparationError("user " + std::to_string(u) +
                                      " has a zero inner product with a user of its own type");
    gamma = std::max(gamma, across / within);
  }
  return gamma;
}

PreferenceMatrix make_disjoint_block_model(int n_users, int n_items, int n_types) {
  if (n_users <= 0 || n_items <= 0 || n_types <= 0)
    throw ParameterError("block model dimensions must be positive");
  if (n_types > n_items) throw ParameterError("block model needs n_items >= n_types");
  if (n_types > n_users) throw ParameterError("block model needs n_users >= n_types");

  PreferenceMatrix pm;
  pm.n_types = n_types;
  pm.probs = Grid<double>(static_cast<std::size_t>(n_users), static_cast<std::size_t>(n_items));
  pm.type_of.resize(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u) {
    const int c = u % n_types;
    pm.type_of[static_cast<std::size_t>(u)] = c;
    const int begin = static_cast<int>(static_cast<long long>(c) * n_items / n_types);
    const int end = static_cast<int>(static_cast<long long>(c + 1) * n_items / n_types);
    for (int i = begin; i < end; ++i)
      pm.probs(static_cast<std::size_t>(u), static_cast<std::size_t>(i)) = 1.0;
  }
  pm.achieved_gamma = check_separation(pm);
  return pm;
}

void write_preference_matrix(const std::filesystem::path& path, const ModelParams& params,
                             const PreferenceMatrix& pm) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << pm.n_users() << ' ' << pm.n_items() << ' ' << pm.n_types << ' ' << params.delta << ' '
      << params.nu << ' ' << params.pf << '\n';
  for (std::size_t u = 0; u < pm.n_users(); ++u) {
    const auto row = pm.probs.row(u);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << '\n';
  }
  for (std::size_t u = 0; u < pm.type_of.size(); ++u) out << (u ? " " : "") << pm.type_of[u];
  out << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ModelFile read_preference_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  ModelFile file;
  auto& p = file.params;
  if (!(in >> p.n_users >> p.n_items >> p.n_types >> p.delta >> p.nu >> p.pf))
    throw ParseError("malformed preference matrix header", 1);
  if (p.n_users <= 0 || p.n_items <= 0 || p.n_types <= 0)
    throw ParseError("non-positive dimensions in header", 1);

  auto& pm = file.matrix;
  pm.n_types = p.n_types;
  pm.probs = Grid<double>(static_cast<std::size_t>(p.n_users), static_cast<std::size_t>(p.n_items));
  for (std::size_t u = 0; u < pm.probs.rows(); ++u)
    for (std::size_t i = 0; i < pm.probs.cols(); ++i)
      if (!(in >> pm.probs(u, i))) throw ParseError("truncated probability rows", u + 2);
  pm.type_of.resize(pm.probs.rows());
  for (auto& t : pm.type_of) {
    if (!(in >> t)) throw ParseError("truncated type row", pm.probs.rows() + 2);
    if (t < 0 || t >= p.n_types) throw ParseError("type index out of range", pm.probs.rows() + 2);
  }
  try {
    pm.achieved_gamma = check_separation(pm);
  } catch (const DegenerateSeparationError&) {
    pm.achieved_gamma = std::numeric_limits<double>::infinity();
  }
  return file;
}

const char* to_string(FeedbackMode mode) noexcept {
  return mode == FeedbackMode::one_class ? "one-class" : "two-class";
}

FeedbackMode parse_feedback_mode(const std::string& text) {
  if (text == "one-class") return FeedbackMode::one_class;
  if (text == "two-class") return FeedbackMode::two_class;
  throw ParameterError("unknown feedback mode '" + text + "'");
}

Environment::Environment(Source source, double pf, FeedbackMode mode, std::uint64_t seed,
                         bool fixed)
    : source_(std::move(source)), pf_(pf), mode_(mode), seed_(seed), fixed_ratings_(fixed) {
  if (!(pf >= 0.0 && pf <= 1.0)) throw ParameterError(describe("pf outside [0, 1]", pf));
}

Environment Environment::synthetic(std::shared_ptr<const PreferenceMatrix> prefs, double pf,
                                   FeedbackMode mode, std::uint64_t seed, bool fixed_ratings) {
  if (!prefs) throw ParameterError("synthetic environment needs a preference matrix");
  return Environment(std::move(prefs), pf, mode, seed, fixed_ratings);
}

Environment Environment::replay(std::shared_ptr<const RatingsMatrix> ratings, double pf,
                                FeedbackMode mode, std::uint64_t seed) {
  if (!ratings) throw ParameterError("replay environment needs a ratings matrix");
  return Environment(std::move(ratings), pf, mode, seed, false);
}

bool Environment::is_synthetic() const noexcept { return source_.index() == 0; }

const PreferenceMatrix& Environment::preferences() const {
  if (!is_synthetic()) throw DispatchError("replay environment has no preference matrix");
  return *std::get<0>(source_);
}

const RatingsMatrix& Environment::ratings() const {
  if (is_synthetic()) throw DispatchError("synthetic environment has no stored ratings");
  return *std::get<1>(source_);
}

std::size_t Environment::n_users() const noexcept {
  return is_synthetic() ? std::get<0>(source_)->n_users() : std::get<1>(source_)->n_users();
}

std::size_t Environment::n_items() const noexcept {
  return is_synthetic() ? std::get<0>(source_)->n_items() : std::get<1>(source_)->n_items();
}

Environment Environment::with(double pf, FeedbackMode mode) const {
  return Environment(source_, pf, mode, seed_, fixed_ratings_);
}

int sample_response(const Environment& env, std::size_t u, std::size_t i, Rng& rng) {
  int hidden;
  if (env.is_synthetic()) {
    const double p = env.preferences().probs(u, i);
    const double draw = env.fixed_ratings() ? hashed_uniform(env.seed(), u, i) : rng.uniform();
    hidden = draw < p ? 1 : -1;
  } else {
    hidden = env.ratings().entries(u, i);
  }
  const bool revealed = rng.bernoulli(env.pf());
  if (!revealed || hidden == 0) return 0;
  if (env.feedback_mode() == FeedbackMode::one_class) return hidden > 0 ? 1 : 0;
  return hidden;
}

}  // namespace occf
