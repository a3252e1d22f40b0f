// Command-line surface for the representation-uncertainty toolkit: trains
// loss-prediction heads on cached embeddings, scores uncertainties, and runs
// the evaluation suites. Every command writes a run manifest next to its
// outputs; reruns with identical inputs produce byte-identical outputs.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ruq/evalsuite.hpp"
#include "ruq/synth.hpp"
#include "ruq/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* env = std::getenv("RUQ_LOG");
  if (env == nullptr) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

void info(const std::string& msg) {
  if (log_level() != LogLevel::quiet) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
  if (log_level() == LogLevel::debug) std::cerr << msg << '\n';
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ruq::ValidationError("cannot open file for digest: " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ruq::ValidationError("cannot write file: " + path.string());
  out << text;
}

// Run manifest: emitted alongside every output.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["inputs"] = json::object();
    for (const auto& p : inputs) j["inputs"][p.string()] = file_digest(p);
    j["outputs"] = json::array();
    for (const auto& p : outputs) j["outputs"].push_back(p.string());
    j["seed"] = seed;
    j["tool_version"] = ruq::kVersion;
    j["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_text(path, j.dump(2) + "\n");
  }
};

fs::path manifest_path_for(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

// Pulls "--config FILE" out of the raw arguments and splices the file's
// key/value pairs in as flags right after the subcommand, so that
// command-line flags (parsed later, TakeLast) win over the config file,
// which in turn wins over defaults.
std::vector<std::string> splice_config_tokens(const std::vector<std::string>& raw) {
  std::string config_path;
  std::vector<std::string> args;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config") {
      if (i + 1 >= raw.size()) throw ruq::ValidationError("--config needs a file argument");
      config_path = raw[++i];
      continue;
    }
    args.push_back(raw[i]);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw ruq::ValidationError("cannot open config file: " + config_path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ruq::ValidationError("malformed config file " + config_path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ruq::ValidationError("config file must hold a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }

  // Subcommand name is the first non-flag argument.
  std::vector<std::string> out;
  bool spliced = false;
  for (const auto& a : args) {
    out.push_back(a);
    if (!spliced && !a.empty() && a[0] != '-') {
      out.insert(out.end(), tokens.begin(), tokens.end());
      spliced = true;
    }
  }
  if (!spliced) {
    throw ruq::ValidationError("--config requires a subcommand");
  }
  return out;
}

void take_last_everywhere(CLI::App* cmd) {
  for (auto* opt : cmd->get_options()) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

// Shared head-config option block.
struct HeadConfigFlags {
  ruq::HeadConfig cfg;
  std::string objective = "ranking";

  void attach(CLI::App* cmd) {
    cmd->add_option("--width", cfg.unc_width, "Hidden width of the uncertainty head");
    cmd->add_option("--margin", cfg.margin, "Ranking margin m");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--warmup", cfg.warmup_epochs, "Constant-LR warmup epochs");
    cmd->add_option("--base-lr", cfg.base_lr, "Warmup learning rate");
    cmd->add_option("--final-lr", cfg.final_lr, "Learning rate at the last epoch");
    cmd->add_option("--weight-decay", cfg.weight_decay, "Decoupled weight decay");
    cmd->add_option("--beta1", cfg.beta1, "AdamW beta1");
    cmd->add_option("--beta2", cfg.beta2, "AdamW beta2");
    cmd->add_option("--batch", cfg.batch_size, "Batch size");
    cmd->add_option("--seed", cfg.seed, "Training seed");
    cmd->add_option("--leaky-slope", cfg.leaky_slope, "LeakyReLU negative slope");
    cmd->add_option("--objective", objective, "Training objective: ranking or l2");
    cmd->add_flag("--skip-tied-pairs", cfg.skip_tied_pairs,
                  "Drop pairs with exactly equal losses");
  }

  ruq::HeadConfig resolve() const {
    ruq::HeadConfig out = cfg;
    out.objective = ruq::objective_from_string(objective);
    return out;
  }

  json to_json(const ruq::HeadConfig& c) const {
    return json{{"width", c.unc_width},
                {"margin", c.margin},
                {"epochs", c.epochs},
                {"warmup", c.warmup_epochs},
                {"base_lr", c.base_lr},
                {"final_lr", c.final_lr},
                {"weight_decay", c.weight_decay},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"batch", c.batch_size},
                {"seed", c.seed},
                {"leaky_slope", c.leaky_slope},
                {"objective", to_string(c.objective)},
                {"skip_tied_pairs", c.skip_tied_pairs}};
  }
};

std::string training_log_csv(const ruq::TrainingLog& log) {
  std::string out = "epoch,mean_loss,lr,pair_agreement\n";
  char buf[128];
  for (std::size_t e = 0; e < log.mean_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e, log.mean_loss[e], log.lr[e],
                  log.pair_agreement[e]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand handlers

int run_train_head(const fs::path& embeddings_path, const fs::path& losses_path,
                   const fs::path& out, const fs::path& log_path, const HeadConfigFlags& flags,
                   Manifest manifest) {
  const auto embeddings = ruq::load_embeddings(embeddings_path);
  const auto losses = ruq::load_loss(losses_path);
  ruq::HeadConfig cfg = flags.resolve();
  cfg.input_dim = embeddings.dim;

  info("[train-head] n=" + std::to_string(embeddings.count) +
       " d=" + std::to_string(embeddings.dim) + " width=" + std::to_string(cfg.unc_width) +
       " epochs=" + std::to_string(cfg.epochs));
  const ruq::TrainResult result = ruq::train_head(embeddings, losses, cfg);
  debug("[train-head] final mean loss " + std::to_string(result.log.mean_loss.back()) +
        ", pair agreement " + std::to_string(result.log.pair_agreement.back()));

  ruq::save_head(result.params, cfg, out);
  const fs::path log_out = log_path.empty() ? fs::path(out.string() + ".log.csv") : log_path;
  write_text(log_out, training_log_csv(result.log));

  manifest.config = flags.to_json(cfg);
  manifest.inputs = {embeddings_path, losses_path};
  manifest.outputs = {out, log_out};
  manifest.seed = cfg.seed;
  manifest.write(manifest_path_for(out));
  info("[train-head] wrote " + out.string());
  return 0;
}

int run_score(const fs::path& head_path, const fs::path& embeddings_path, const fs::path& out,
              unsigned threads, Manifest manifest) {
  const auto head = ruq::load_head(head_path);
  const auto embeddings = ruq::load_embeddings(embeddings_path);
  auto u = ruq::score_uncertainties(head.params, embeddings, threads);
  u.source = head_path.filename().string();
  ruq::save_uncertainties(u, out);

  manifest.config = json{{"threads", threads}};
  manifest.inputs = {head_path, embeddings_path};
  manifest.outputs = {out};
  manifest.seed = head.config.seed;
  manifest.write(manifest_path_for(out));
  info("[score] wrote " + out.string() + " (" + std::to_string(u.count()) + " values)");
  return 0;
}

int run_eval(CLI::App* cmd, const fs::path& spec_path, const fs::path& out_dir,
             const std::string& metric_name, std::size_t p, std::size_t fractions,
             const std::vector<std::string>& metric_kinds, unsigned threads,
             Manifest manifest) {
  ruq::RunSpec spec = ruq::RunSpec::from_json_file(spec_path);
  if (cmd->count("--metric") > 0) spec.metric = ruq::metric_from_string(metric_name);
  if (cmd->count("--p") > 0) spec.p = p;
  if (cmd->count("--fractions") > 0) spec.fractions = fractions;
  if (cmd->count("--threads") > 0) spec.threads = threads;
  if (cmd->count("--metrics") > 0) {
    spec.metrics.clear();
    for (const auto& k : metric_kinds) spec.metrics.push_back(ruq::la_kind_from_string(k));
  }

  fs::create_directories(out_dir);
  const ruq::EvalReport report = ruq::evaluate(spec);

  const fs::path report_json = out_dir / "report.json";
  const fs::path report_csv = out_dir / "report.csv";
  write_text(report_json, report.to_json());
  write_text(report_csv, report.metrics_csv());
  manifest.outputs = {report_json, report_csv};
  if (report.discard.has_value()) {
    const fs::path curve_csv = out_dir / "discard_curve.csv";
    write_text(curve_csv, ruq::discard_curve_csv(*report.discard));
    manifest.outputs.push_back(curve_csv);
  }

  manifest.config = json{{"spec", spec_path.string()},
                         {"metric", to_string(spec.metric)},
                         {"p", spec.p},
                         {"fractions", spec.fractions},
                         {"threads", spec.threads}};
  manifest.inputs = {spec_path, spec.embeddings, spec.labels};
  if (!spec.losses.empty()) manifest.inputs.push_back(spec.losses);
  if (!spec.head.empty()) manifest.inputs.push_back(spec.head);
  if (!spec.uncertainties.empty()) manifest.inputs.push_back(spec.uncertainties);
  if (!spec.noisy_embeddings.empty()) manifest.inputs.push_back(spec.noisy_embeddings);
  manifest.seed = spec.seed;
  manifest.write(out_dir / "manifest.json");

  for (const auto& m : report.metrics) {
    std::string line = std::string("[eval] ") + to_string(m.kind) +
                       ": la_mean=" + std::to_string(m.la_mean) + " la_cpa=";
    line += m.la_cpa.has_value() ? std::to_string(*m.la_cpa) : std::string("undefined");
    if (m.excluded > 0) line += " excluded=" + std::to_string(m.excluded);
    info(line);
  }
  if (report.discard.has_value()) {
    info("[eval] discard MF = " + std::to_string(report.discard->mf));
  }
  if (report.shift.has_value()) {
    info("[eval] P(u_noisy > u_clean) = " + std::to_string(report.shift->p_noisy_greater));
  }
  info("[eval] wrote " + report_json.string());
  return 0;
}

int run_discard(const fs::path& unc_path, const fs::path& losses_path, std::size_t fractions,
                const fs::path& out, Manifest manifest) {
  const auto u = ruq::load_uncertainties(unc_path);
  const auto losses = ruq::load_loss(losses_path);
  const auto curve = ruq::discard_test(u, losses, fractions);
  write_text(out, ruq::discard_curve_csv(curve));
  const fs::path mf_path(out.string() + ".mf.json");
  write_text(mf_path,
             json{{"mf", curve.mf}, {"fractions", fractions}, {"n", u.count()}}.dump(2) + "\n");

  manifest.config = json{{"fractions", fractions}};
  manifest.inputs = {unc_path, losses_path};
  manifest.outputs = {out, mf_path};
  manifest.write(manifest_path_for(out));
  // The headline number goes to stdout so scripts can scrape it.
  std::cout << "MF = " << curve.mf << "\n";
  return 0;
}

int run_localize(const fs::path& head_path, const fs::path& tokens_path, const fs::path& out,
                 Manifest manifest) {
  const auto head = ruq::load_head(head_path);
  const auto grids = ruq::load_token_grids(tokens_path);

  std::string csv = "sample,row,col,uncertainty\n";
  char buf[128];
  for (std::size_t i = 0; i < grids.count; ++i) {
    const auto map = ruq::localized_uncertainty(head.params, grids.grid(i));
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.17g\n", i, r, c, map.at(r, c));
        csv += buf;
      }
    }
  }
  write_text(out, csv);

  manifest.config =
      json{{"patch_px", grids.patch_px}, {"rows", grids.rows}, {"cols", grids.cols}};
  manifest.inputs = {head_path, tokens_path};
  manifest.outputs = {out};
  manifest.write(manifest_path_for(out));
  info("[localize] wrote " + out.string() + " (" + std::to_string(grids.count) + " grids)");
  return 0;
}

int run_noise_shift(const fs::path& clean_path, const fs::path& noisy_path, const fs::path& out,
                    Manifest manifest) {
  const auto clean = ruq::load_uncertainties(clean_path);
  const auto noisy = ruq::load_uncertainties(noisy_path);
  const auto s = ruq::noise_shift(clean, noisy);

  const json j{{"clean_count", s.clean_count},
               {"noisy_count", s.noisy_count},
               {"clean_mean", s.clean_mean},
               {"noisy_mean", s.noisy_mean},
               {"mean_diff", s.mean_diff},
               {"clean_median", s.clean_median},
               {"noisy_median", s.noisy_median},
               {"median_diff", s.median_diff},
               {"p_noisy_greater", s.p_noisy_greater},
               {"shifted", s.shifted}};
  write_text(out, j.dump(2) + "\n");
  const fs::path hist_path(out.string() + ".hist.csv");
  write_text(hist_path, ruq::shift_histogram_csv(clean, noisy));

  manifest.inputs = {clean_path, noisy_path};
  manifest.outputs = {out, hist_path};
  manifest.write(manifest_path_for(out));
  std::cout << "P(u_noisy > u_clean) = " << s.p_noisy_greater
            << (s.shifted ? " (shifted)" : " (not shifted)") << "\n";
  return 0;
}

int run_synth(const ruq::SynthSpec& spec, const fs::path& out_dir, Manifest manifest) {
  fs::create_directories(out_dir);
  const ruq::SynthDataset data = ruq::generate(spec);

  const fs::path emb = out_dir / "embeddings.bin";
  const fs::path labels = out_dir / "labels.bin";
  const fs::path losses = out_dir / "losses.bin";
  const fs::path truth = out_dir / "groundtruth.json";
  ruq::save_embeddings(data.embeddings, emb);
  if (spec.kind == ruq::LabelKind::multilabel) {
    ruq::save_labels(data.multilabel, labels);
  } else {
    ruq::save_labels(data.segmask, labels);
  }
  ruq::save_loss(data.losses, losses);

  json truth_json;
  truth_json["noise_scale"] = data.truth.noise_scale;
  truth_json["high_noise"] = data.truth.high_noise;
  if (data.truth.analytic_la_cpa.has_value()) {
    truth_json["analytic_la_cpa"] = *data.truth.analytic_la_cpa;
  } else {
    truth_json["analytic_la_cpa"] = nullptr;
  }
  write_text(truth, truth_json.dump(2) + "\n");

  manifest.config = json{{"n", spec.n},
                         {"d", spec.d},
                         {"k", spec.num_classes},
                         {"clusters", spec.clusters},
                         {"kind", to_string(spec.kind)},
                         {"mask_h", spec.mask_height},
                         {"mask_w", spec.mask_width},
                         {"separation", spec.separation},
                         {"noise_low", spec.noise_low},
                         {"noise_high", spec.noise_high},
                         {"high_fraction", spec.high_fraction},
                         {"loss_slope", spec.loss_slope},
                         {"loss_intercept", spec.loss_intercept},
                         {"jitter", spec.jitter_amplitude},
                         {"seed", spec.seed}};
  manifest.outputs = {emb, labels, losses, truth};
  manifest.seed = spec.seed;
  manifest.write(out_dir / "manifest.json");
  info("[synth] wrote " + out_dir.string() + " (n=" + std::to_string(spec.n) +
       ", kind=" + to_string(spec.kind) + ")");
  return 0;
}

int run_selftest(std::uint64_t seed) {
  const auto results = ruq::run_selftests(seed);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  std::cout << (all ? "selftest: all suites passed\n" : "selftest: FAILURES\n");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representation uncertainty toolkit"};
  app.set_version_flag("--version", ruq::kVersion);
  app.require_subcommand(1);

  std::vector<std::string> raw_args(argv + 1, argv + argc);

  // train-head
  auto* train = app.add_subcommand("train-head", "Train an uncertainty head on embeddings");
  fs::path train_emb, train_loss, train_out, train_log;
  HeadConfigFlags train_flags;
  train->add_option("--embeddings", train_emb, "Embedding container")->required();
  train->add_option("--losses", train_loss, "Per-sample loss container")->required();
  train->add_option("-o,--out", train_out, "Output head file")->required();
  train->add_option("--log", train_log, "Training log CSV (default: <out>.log.csv)");
  train_flags.attach(train);

  // score
  auto* score = app.add_subcommand("score", "Score embeddings with a trained head");
  fs::path score_head, score_emb, score_out;
  unsigned score_threads = 1;
  score->add_option("--head", score_head, "Head file")->required();
  score->add_option("--embeddings", score_emb, "Embedding container")->required();
  score->add_option("-o,--out", score_out, "Output uncertainty file")->required();
  score->add_option("--threads", score_threads, "Worker threads (speed only)");

  // eval
  auto* eval = app.add_subcommand("eval", "Run a full evaluation from a run spec");
  fs::path eval_spec, eval_out = ".";
  std::string eval_metric = "cosine";
  std::size_t eval_p = 3, eval_fractions = 200;
  std::vector<std::string> eval_metrics;
  unsigned eval_threads = 1;
  eval->add_option("--spec", eval_spec, "Run spec JSON")->required();
  eval->add_option("-o,--out", eval_out, "Output directory");
  eval->add_option("--metric", eval_metric, "cosine or euclidean (overrides the spec)");
  eval->add_option("--p", eval_p, "Patch grid size (overrides the spec)");
  eval->add_option("--fractions", eval_fractions, "Discard fractions (overrides the spec)");
  eval->add_option("--metrics", eval_metrics, "LA kinds to compute (overrides the spec)")
      ->delimiter(',');
  eval->add_option("--threads", eval_threads, "Worker threads (speed only)");

  // discard
  auto* discard = app.add_subcommand("discard", "Discard test from cached uncertainties");
  fs::path discard_unc, discard_loss, discard_out;
  std::size_t discard_fractions = 200;
  discard->add_option("--uncertainties", discard_unc, "Uncertainty container")->required();
  discard->add_option("--losses", discard_loss, "Per-sample loss container")->required();
  discard->add_option("--fractions", discard_fractions, "Number of discard fractions");
  discard->add_option("-o,--out", discard_out, "Output curve CSV")->required();

  // localize
  auto* localize = app.add_subcommand("localize", "Per-token uncertainty maps");
  fs::path localize_head, localize_tokens, localize_out;
  localize->add_option("--head", localize_head, "Head file")->required();
  localize->add_option("--tokens", localize_tokens, "Token grid container")->required();
  localize->add_option("-o,--out", localize_out, "Output map CSV")->required();

  // noise-shift
  auto* shift = app.add_subcommand("noise-shift", "Compare clean vs noisy uncertainties");
  fs::path shift_clean, shift_noisy, shift_out;
  shift->add_option("--clean", shift_clean, "Clean uncertainty container")->required();
  shift->add_option("--noisy", shift_noisy, "Noisy uncertainty container")->required();
  shift->add_option("-o,--out", shift_out, "Output summary JSON")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted-signal dataset");
  ruq::SynthSpec synth_spec;
  std::string synth_preset = "planted";
  std::string synth_kind = "multilabel";
  fs::path synth_out;
  synth->add_option("--preset", synth_preset, "Preset name (planted)");
  synth->add_option("--n", synth_spec.n, "Sample count");
  synth->add_option("--d", synth_spec.d, "Embedding dimension");
  synth->add_option("--k", synth_spec.num_classes, "Number of classes");
  synth->add_option("--clusters", synth_spec.clusters, "Cluster count");
  synth->add_option("--kind", synth_kind, "multilabel or segmask");
  synth->add_option("--mask-h", synth_spec.mask_height, "Mask height (segmask)");
  synth->add_option("--mask-w", synth_spec.mask_width, "Mask width (segmask)");
  synth->add_option("--separation", synth_spec.separation, "Cluster center norm");
  synth->add_option("--noise-low", synth_spec.noise_low, "Low noise scale");
  synth->add_option("--noise-high", synth_spec.noise_high, "High noise scale");
  synth->add_option("--high-fraction", synth_spec.high_fraction,
                    "Probability of the high noise scale");
  synth->add_option("--loss-slope", synth_spec.loss_slope, "Loss slope over noise scale");
  synth->add_option("--loss-intercept", synth_spec.loss_intercept, "Loss intercept");
  synth->add_option("--jitter", synth_spec.jitter_amplitude,
                    "Tie-break jitter (fraction of loss range)");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("-o,--out", synth_out, "Output directory")->required();

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the oracle-equivalence suites");
  std::uint64_t selftest_seed = 1234;
  selftest->add_option("--seed", selftest_seed, "Suite seed");

  for (auto* cmd : app.get_subcommands({})) take_last_everywhere(cmd);

  Manifest manifest;
  manifest.argv.assign(argv, argv + argc);

  try {
    const auto spliced = splice_config_tokens(raw_args);
    std::vector<std::string> final_args;
    final_args.push_back(argv[0]);
    final_args.insert(final_args.end(), spliced.begin(), spliced.end());
    std::vector<char*> cargv;
    cargv.reserve(final_args.size());
    for (auto& s : final_args) cargv.push_back(s.data());

    try {
      app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 1;
    }

    if (train->parsed()) {
      manifest.command = "train-head";
      return run_train_head(train_emb, train_loss, train_out, train_log, train_flags,
                            std::move(manifest));
    }
    if (score->parsed()) {
      manifest.command = "score";
      return run_score(score_head, score_emb, score_out, score_threads, std::move(manifest));
    }
    if (eval->parsed()) {
      manifest.command = "eval";
      return run_eval(eval, eval_spec, eval_out, eval_metric, eval_p, eval_fractions,
                      eval_metrics, eval_threads, std::move(manifest));
    }
    if (discard->parsed()) {
      manifest.command = "discard";
      return run_discard(discard_unc, discard_loss, discard_fractions, discard_out,
                         std::move(manifest));
    }
    if (localize->parsed()) {
      manifest.command = "localize";
      return run_localize(localize_head, localize_tokens, localize_out, std::move(manifest));
    }
    if (shift->parsed()) {
      manifest.command = "noise-shift";
      return run_noise_shift(shift_clean, shift_noisy, shift_out, std::move(manifest));
    }
    if (synth->parsed()) {
      manifest.command = "synth";
      if (synth_preset != "planted") {
        throw ruq::ValidationError("unknown preset \"" + synth_preset + "\"");
      }
      synth_spec.kind = ruq::label_kind_from_string(synth_kind);
      return run_synth(synth_spec, synth_out, std::move(manifest));
    }
    if (selftest->parsed()) {
      return run_selftest(selftest_seed);
    }
    return 1;
  } catch (const ruq::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
