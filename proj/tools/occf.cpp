// occf: command-line front end for the online one-class CF toolkit.
//
//   occf synth   [--config FILE] [--KEY VALUE ...]
//   occf ingest  --input ratings.dat --output corpus.txt
//   occf exp     one-vs-two|sim-scaling|pref-scaling|synthetic-theorem [--config FILE] [--KEY VALUE ...]
//   occf bounds  --n_users N --n_items M ...
//   occf export-matrix --corpus corpus.txt --output figure.txt

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "occf/bounds.hpp"
#include "occf/errors.hpp"
#include "occf/harness.hpp"
#include "occf/ingest.hpp"

using namespace occf;

namespace {

struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file")->check(CLI::ExistingFile);
  for (const auto& key : ExperimentConfig::keys()) {
    if (key == "experiment") continue;
    opts.options[key] = cmd->add_option("--" + key, opts.values[key], "config override")
                            ->group("Config overrides");
  }
}

ExperimentConfig resolve_config(const ConfigOptions& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg.apply(read_config_file(opts.config_path));
  std::map<std::string, std::string> overrides;
  for (const auto& [key, opt] : opts.options)
    if (opt->count() > 0) overrides[key] = opts.values.at(key);
  cfg.apply(overrides);
  return cfg;
}

void emit(const CurveTable& table, const ExperimentConfig& cfg,
          const std::vector<std::pair<std::string, std::string>>& extra) {
  if (cfg.output.empty()) {
    std::cout << curve_csv(table);
    return;
  }
  write_csv(table, cfg.output);
  write_metadata(cfg, cfg.output, extra);
  std::cerr << "wrote " << cfg.output << " (" << table.rows.size() << " rows) and "
            << cfg.output << ".meta\n";
}

std::vector<std::pair<std::string, std::string>> assumptions(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> a{
      {"exploitation_steps_after_staging", "1"},
      {"reward_aggregation", "mean and standard error over replicates"},
      {"hidden_ratings", cfg.fixed_ratings ? "fixed per (user, item)" : "redrawn per recommendation"},
  };
  if (cfg.experiment == "sim-scaling")
    a.emplace_back("x", "similarity steps times pf^2 (rounded step count)");
  if (cfg.experiment == "pref-scaling")
    a.emplace_back("x", "preference recommendations times pf (rounded count)");
  if (cfg.experiment == "one-vs-two") {
    a.emplace_back("x", "horizon T");
    a.emplace_back("two_class_pf", "1");
    a.emplace_back("allow_repeat", "false");
  }
  if (cfg.experiment == "synthetic-theorem") a.emplace_back("x", "horizon T");
  return a;
}

int run_synth(const ExperimentConfig& cfg, const std::string& trace_path,
              const std::string& model_path) {
  cfg.validate();
  const double pf = cfg.pf.front();
  std::shared_ptr<const PreferenceMatrix> prefs;
  if (cfg.model == "blocks")
    prefs = std::make_shared<PreferenceMatrix>(
        make_disjoint_block_model(cfg.n_users, cfg.n_items, cfg.n_types));
  else
    prefs = std::make_shared<PreferenceMatrix>(generate_model(
        model_params(cfg, pf), derive_seed(cfg.seed, {stream_id(Stream::model)})));
  if (!model_path.empty()) write_preference_matrix(model_path, model_params(cfg, pf), *prefs);

  const auto env = Environment::synthetic(prefs, pf, FeedbackMode::one_class,
                                          derive_seed(cfg.seed, {stream_id(Stream::hidden_ratings)}),
                                          cfg.fixed_ratings);
  const auto trace = run(env, algo_params(cfg, FeedbackMode::one_class), cfg.horizon, cfg.seed);
  if (!trace_path.empty()) write_trace_csv(trace, trace_path);

  CurveTable table;
  long total = 0;
  for (long t = 0; t < cfg.horizon; ++t) {
    const long c = likable_count_at(env, trace, t);
    total += c;
    const double n = static_cast<double>(cfg.n_users);
    table.rows.push_back({static_cast<double>(t + 1), c / n, 0.0, 1, "step"});
    table.rows.push_back({static_cast<double>(t + 1), total / (n * (t + 1)), 0.0, 1, "cumulative"});
  }
  std::cerr << "separation gamma = " << prefs->achieved_gamma << ", final cumulative likable fraction = "
            << total / (static_cast<double>(cfg.n_users) * cfg.horizon) << '\n';
  emit(table, cfg, {{"experiment_kind", "synth"}, {"replicates_used", "1"},
                    {"achieved_gamma", std::to_string(prefs->achieved_gamma)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online one-class collaborative filtering: simulation, corpus and bounds tools"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic model, run User-CF, report likable fractions");
  ConfigOptions synth_opts;
  add_config_options(synth, synth_opts);
  std::string trace_path, model_path;
  synth->add_option("--trace", trace_path, "write the recommendation trace CSV here");
  synth->add_option("--model-out", model_path, "write the preference matrix here");

  // exp
  auto* exp = app.add_subcommand("exp", "run one of the experiments");
  ConfigOptions exp_opts;
  std::string experiment;
  exp->add_option("experiment", experiment, "experiment id")
      ->required()
      ->check(CLI::IsMember({"one-vs-two", "sim-scaling", "pref-scaling", "synthetic-theorem"}));
  add_config_options(exp, exp_opts);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build a signed corpus matrix from a ratings file");
  std::string input, corpus_out, format = "detect", mode = "debiased", half_stars = "reject";
  SelectionConfig sel;
  ingest->add_option("--input", input, "ratings file (UserID::MovieID::Rating::Timestamp or CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--output", corpus_out, "corpus grid file")->required();
  ingest->add_option("--format", format, "double-colon | csv | detect")->capture_default_str();
  ingest->add_option("--users", sel.n_users_out, "users kept")->capture_default_str();
  ingest->add_option("--items", sel.n_items_out, "items kept")->capture_default_str();
  ingest->add_option("--min_item_count", sel.min_item_count)->capture_default_str();
  ingest->add_option("--bias_tolerance", sel.bias_tolerance, "max |pos-neg|/rated per item")
      ->capture_default_str();
  ingest->add_option("--mode", mode, "debiased | most-rated")->capture_default_str();
  ingest->add_option("--half_stars", half_stars, "reject | threshold (>= 4 is +1)")->capture_default_str();

  // bounds
  auto* bounds = app.add_subcommand("bounds", "evaluate cold-start time, reward bounds and condition flags");
  BoundsInput in;
  std::string bounds_csv;
  bounds->add_option("--n_users", in.n_users)->required();
  bounds->add_option("--n_items", in.n_items)->required();
  bounds->add_option("--n_types", in.n_types)->capture_default_str();
  bounds->add_option("--delta", in.delta_gap, "preference gap")->capture_default_str();
  bounds->add_option("--nu", in.nu)->capture_default_str();
  bounds->add_option("--pf", in.pf)->capture_default_str();
  bounds->add_option("--gamma", in.gamma)->capture_default_str();
  bounds->add_option("--alpha", in.alpha)->capture_default_str();
  bounds->add_option("--eta", in.eta)->capture_default_str();
  bounds->add_option("--batch_size", in.batch_size)->capture_default_str();
  bounds->add_option("--k_neighbors", in.k_neighbors)->capture_default_str();
  bounds->add_option("--confidence", in.confidence, "failure probability")->capture_default_str();
  bounds->add_option("--horizon", in.horizon)->capture_default_str();
  bounds->add_option("--lambda", in.lambda)->capture_default_str();
  bounds->add_option("--output", bounds_csv, "also write key,value CSV here");

  // export-matrix
  auto* export_cmd = app.add_subcommand("export-matrix", "write a corpus as a plain {-1,0,1} grid");
  std::string corpus_in, export_out;
  export_cmd->add_option("--corpus", corpus_in)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--output", export_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      auto cfg = resolve_config(synth_opts);
      return run_synth(cfg, trace_path, model_path);
    }
    if (*exp) {
      auto cfg = resolve_config(exp_opts);
      cfg.experiment = experiment;
      const auto table = run_experiment(cfg);
      emit(table, cfg, assumptions(cfg));
      return 0;
    }
    if (*ingest) {
      sel.mode = parse_selection_mode(mode);
      const auto raw = parse_ratings(input, parse_ratings_format(format));
      const auto m = select_submatrix(binarize(raw, parse_half_stars(half_stars)), sel);
      write_corpus(m, sel, corpus_out);
      std::printf("rows read %zu, duplicates resolved %zu\n", raw.rows_read, raw.duplicates_resolved);
      std::printf("corpus %zux%zu, +1 fraction %.4f, -1 fraction %.4f\n", m.n_users(), m.n_items(),
                  m.stats.positive_fraction, m.stats.negative_fraction);
      return 0;
    }
    if (*bounds) {
      const auto report = evaluate_bounds(in);
      std::cout << format_report(in, report);
      if (!bounds_csv.empty()) {
        std::ofstream out(bounds_csv);
        if (!out) throw IoError("cannot write " + bounds_csv);
        out << report_csv(in, report);
      }
      return 0;
    }
    if (*export_cmd) {
      export_matrix_image_data(load_corpus(corpus_in), export_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
