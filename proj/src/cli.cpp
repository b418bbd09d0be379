// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixlaw/dlc.hpp"
#include "mixlaw/errors.hpp"
#include "mixlaw/fitter.hpp"
#include "mixlaw/ingest.hpp"
#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"
#include "mixlaw/solvers.hpp"
#include "mixlaw/validation.hpp"

namespace mixlaw::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buf.str();
}

void atomic_write(const std::string& path, const std::string& content,
                  std::vector<std::string>& artifacts) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename to " + path + " failed: " + ec.message());
  artifacts.push_back(path);
}

RunLogFormat format_for(const std::string& path, const std::string& flag) {
  if (flag == "jsonl") return RunLogFormat::JsonLines;
  if (flag == "csv") return RunLogFormat::Csv;
  if (!flag.empty()) throw std::invalid_argument("unknown run-log format: " + flag);
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? RunLogFormat::Csv
                                                                    : RunLogFormat::JsonLines;
}

std::vector<LossCurve> load_curves(const std::string& path, const std::string& format_flag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_run_log(in, format_for(path, format_flag));
}

LawArtifact load_artifact(const std::string& path) { return artifact_from_json(read_file(path)); }

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("bad value in ") + what + ": " + item);
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + " must be non-empty");
  return out;
}

std::vector<std::int64_t> parse_steps(const std::string& text) {
  std::vector<std::int64_t> out;
  if (text.find(':') != std::string::npos) {
    std::int64_t start = 0, end = 0, stride = 0;
    if (std::sscanf(text.c_str(), "%" SCNd64 ":%" SCNd64 ":%" SCNd64, &start, &end, &stride) != 3 ||
        stride <= 0 || end < start)
      throw std::invalid_argument("steps must be start:end:stride or a comma list");
    for (std::int64_t s = start; s <= end; s += stride) out.push_back(s);
    return out;
  }
  for (double v : parse_list(text, "steps")) {
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument("steps must be integers >= 0");
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

CorpusSide side_from(const std::string& name) {
  if (name == "domain") return CorpusSide::Domain;
  if (name == "general") return CorpusSide::General;
  throw std::invalid_argument("side must be 'domain' or 'general'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Options shared by every fitting subcommand, resolved flag > config > default.
struct FitFlags {
  std::optional<double> delta, gradient_tolerance, r_floor, tokens_per_step;
  std::optional<int> max_iterations, jobs;
  std::optional<long> max_starts;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--delta", delta, "Huber transition width");
    cmd->add_option("--gtol", gradient_tolerance, "L-BFGS gradient tolerance");
    cmd->add_option("--r-floor", r_floor, "minimum ratio admitted into fitting");
    cmd->add_option("--max-iterations", max_iterations, "L-BFGS iteration cap per start");
    cmd->add_option("--max-starts", max_starts, "init-grid subsample cap (-1 = full grid)");
    cmd->add_option("--tokens-per-step", tokens_per_step, "B-tokens per training step");
  }

  FitConfig resolve(const json& config, int jobs_flag) const {
    FitConfig cfg;
    auto pick_d = [&](const std::optional<double>& flag, const char* key, double fallback) {
      if (flag) return *flag;
      if (config.contains(key)) return config[key].get<double>();
      return fallback;
    };
    cfg.delta = pick_d(delta, "delta", cfg.delta);
    cfg.gradient_tolerance = pick_d(gradient_tolerance, "gradient_tolerance",
                                    cfg.gradient_tolerance);
    cfg.r_floor = pick_d(r_floor, "r_floor", cfg.r_floor);
    cfg.max_iterations = max_iterations ? *max_iterations
                         : config.contains("max_iterations")
                             ? config["max_iterations"].get<int>()
                             : cfg.max_iterations;
    long cap = max_starts ? *max_starts
               : config.contains("max_grid_candidates")
                   ? config["max_grid_candidates"].get<long>()
                   : cfg.max_grid_candidates.value();
    cfg.max_grid_candidates = cap < 0 ? std::nullopt : std::optional<long>(cap);
    cfg.jobs = jobs_flag > 0 ? jobs_flag
               : config.contains("jobs") ? config["jobs"].get<int>() : 0;
    return cfg;
  }

  TrainConfig resolve_train(const json& config) const {
    TrainConfig cfg;
    if (tokens_per_step) cfg.tokens_per_step = *tokens_per_step;
    else if (config.contains("tokens_per_step"))
      cfg.tokens_per_step = config["tokens_per_step"].get<double>();
    return cfg;
  }
};

std::vector<LossCurve> filter_domain(std::vector<LossCurve> curves, const std::string& domain,
                                     const char* who) {
  if (!domain.empty()) {
    std::erase_if(curves, [&](const LossCurve& c) { return c.domain_name != domain; });
    if (curves.empty())
      throw std::invalid_argument(std::string(who) + ": no curves for domain '" + domain + "'");
    return curves;
  }
  std::set<std::string> names;
  for (const LossCurve& c : curves) names.insert(c.domain_name);
  if (names.size() > 1)
    throw std::invalid_argument(std::string(who) +
                                ": input has multiple domains; select one with --domain");
  return curves;
}

// Builds the per-domain (points, features) table for crossfit and the domain
// CV protocol. The probe curve for features is the run whose side ratio
// equals ref_ratio (default: the pure-corpus run, side ratio 1).
std::map<std::string, DomainData> build_domain_table(const std::vector<LossCurve>& curves,
                                                     CorpusSide side, double ref_ratio,
                                                     const TrainConfig& train_cfg,
                                                     json* provenance) {
  std::map<std::string, DomainData> table;
  std::map<std::string, const LossCurve*> probes;
  const double probe_r_domain = side == CorpusSide::Domain ? ref_ratio : 1.0 - ref_ratio;
  for (const LossCurve& curve : curves) {
    auto points = curve_to_points(curve, side, train_cfg);
    auto& slot = table[curve.domain_name];
    slot.points.insert(slot.points.end(), points.begin(), points.end());
    if (curve.r_domain == probe_r_domain) {
      auto [it, inserted] = probes.emplace(curve.domain_name, &curve);
      // Several sizes may carry probe runs; the smallest model is the probe.
      if (!inserted && curve.n < it->second->n) it->second = &curve;
    }
  }
  for (auto& [name, data] : table) {
    auto it = probes.find(name);
    if (it == probes.end())
      throw InsufficientDataError("domain '" + name + "' has no probe run at " +
                                  std::string(to_string(side)) + " ratio " + fmt(ref_ratio) +
                                  " for feature extraction");
    data.features = extract_features(*it->second, side);
    if (provenance) {
      json entry;
      entry["domain"] = name;
      entry["side"] = to_string(side);
      entry["ref_ratio"] = ref_ratio;
      entry["probe_model_size_b"] = it->second->n;
      entry["k1"] = data.features.k1;
      entry["k2"] = data.features.k2;
      entry["k3"] = data.features.k3;
      provenance->push_back(entry);
    }
  }
  return table;
}

json fit_metadata(const FitResult& result, const FitConfig& cfg) {
  json meta;
  meta["objective"] = result.objective;
  meta["init_index"] = result.init_index;
  meta["grid_index"] = result.grid_index;
  meta["grid_total"] = result.grid_total;
  meta["iterations"] = result.iterations;
  meta["converged"] = result.converged;
  meta["points_used"] = result.points_used;
  meta["delta"] = cfg.delta;
  meta["r_floor"] = cfg.r_floor;
  if (result.constraints) {
    json c;
    c["eta_ok"] = result.constraints->eta_ok;
    c["c_ok"] = result.constraints->c_ok;
    c["positivity_ok"] = result.constraints->positivity_ok;
    c["c0"] = result.constraints->c0;
    meta["constraints"] = c;
  }
  return meta;
}

std::string artifact_for(const FitResult& result, const FitConfig& cfg, json extra_metadata) {
  LawArtifact artifact;
  artifact.params = result.params;
  artifact.d_min = result.d_min;
  artifact.metric_huber = result.metrics.huber;
  artifact.metric_r2 = result.metrics.r2;
  json meta = fit_metadata(result, cfg);
  for (auto& [key, value] : extra_metadata.items()) meta[key] = value;
  artifact.fit_metadata_json = meta.dump();
  return to_artifact_json(artifact);
}

}  // namespace

CommandOutcome run(const std::vector<std::string>& args,
                   const std::map<std::string, std::string>& env) {
  CommandOutcome outcome;
  CLI::App app{"mixture-ratio scaling-law toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs_flag = 0;
  app.add_option("--config", config_path, "JSON file presetting fit options");
  app.add_option("--seed", seed, "seed for synthetic noise (default 0)");
  app.add_option("--jobs", jobs_flag, "parallel fit starts (default: hardware)");

  // ingest
  auto* c_ingest = app.add_subcommand("ingest", "normalize a run log");
  std::string in_path, out_path, in_format, out_format;
  c_ingest->add_option("--in", in_path, "input run log")->required();
  c_ingest->add_option("--out", out_path, "normalized output")->required();
  c_ingest->add_option("--format", in_format, "jsonl|csv (default: by extension)");
  c_ingest->add_option("--out-format", out_format, "jsonl|csv (default: by extension)");

  // synth
  auto* c_synth = app.add_subcommand("synth", "generate synthetic curves from generator laws");
  std::string gen_general_path, gen_domain_path, sizes_text, ratios_text, steps_text;
  std::string synth_domain = "synthetic", synth_out;
  double noise = 0.0;
  FitFlags synth_flags;
  c_synth->add_option("--gen-general", gen_general_path, "general-side generator artifact")
      ->required();
  c_synth->add_option("--gen-domain", gen_domain_path, "domain-side generator artifact")
      ->required();
  c_synth->add_option("--sizes", sizes_text, "model sizes, B-params (comma list)")->required();
  c_synth->add_option("--ratios", ratios_text, "domain ratios (comma list)")->required();
  c_synth->add_option("--steps", steps_text, "eval steps (comma list or start:end:stride)")
      ->required();
  c_synth->add_option("--noise", noise, "relative noise std (default 0)");
  c_synth->add_option("--domain", synth_domain, "domain name for the curves");
  c_synth->add_option("--out", synth_out, "output run log")->required();
  c_synth->add_option("--tokens-per-step", synth_flags.tokens_per_step,
                      "B-tokens per training step");

  // fit
  auto* c_fit = app.add_subcommand("fit", "fit a law to run-log observations");
  std::string fit_law = "L3", fit_side = "domain", fit_in, fit_out, fit_domain, fit_report_path;
  FitFlags fit_flags;
  c_fit->add_option("--law", fit_law, "L3 or chinchilla");
  c_fit->add_option("--side", fit_side, "domain|general");
  c_fit->add_option("--in", fit_in, "run log")->required();
  c_fit->add_option("--out", fit_out, "fitted-law artifact")->required();
  c_fit->add_option("--domain", fit_domain, "domain to fit when the log has several");
  c_fit->add_option("--report", fit_report_path, "write per-start objectives JSON");
  fit_flags.add_to(c_fit);

  // eval
  auto* c_eval = app.add_subcommand("eval", "score a saved law on new points");
  std::string eval_law_path, eval_in, eval_side = "domain", eval_domain, eval_out;
  FitFlags eval_flags;
  c_eval->add_option("--law", eval_law_path, "fitted-law artifact")->required();
  c_eval->add_option("--in", eval_in, "run log")->required();
  c_eval->add_option("--side", eval_side, "domain|general");
  c_eval->add_option("--domain", eval_domain, "domain filter");
  c_eval->add_option("--out", eval_out, "write metrics JSON");
  eval_flags.add_to(c_eval);

  // cv
  auto* c_cv = app.add_subcommand("cv", "cross-validation protocols");
  std::string cv_protocol, cv_in, cv_side = "domain", cv_law = "L3", cv_domain, cv_out, cv_csv;
  std::string cv_krepr = "K3";
  double cv_ref_ratio = 1.0;
  FitFlags cv_flags;
  c_cv->add_option("--protocol", cv_protocol, "model-size|dataset-size|mixture|domain")
      ->required();
  c_cv->add_option("--in", cv_in, "run log")->required();
  c_cv->add_option("--side", cv_side, "domain|general");
  c_cv->add_option("--law", cv_law, "law id for the per-split fits");
  c_cv->add_option("--domain", cv_domain, "domain filter (single-domain protocols)");
  c_cv->add_option("--k-repr", cv_krepr, "K1..K4 (domain protocol)");
  c_cv->add_option("--ref-ratio", cv_ref_ratio, "side ratio of the feature probe run");
  c_cv->add_option("--out", cv_out, "report JSON");
  c_cv->add_option("--csv", cv_csv, "report CSV (one row per split)");
  cv_flags.add_to(c_cv);

  // dlc
  auto* c_dlc = app.add_subcommand("dlc", "extract learnability features");
  std::string dlc_in, dlc_side = "domain", dlc_domain, dlc_out;
  double dlc_ref_ratio = 1.0;
  c_dlc->add_option("--in", dlc_in, "run log")->required();
  c_dlc->add_option("--side", dlc_side, "domain|general");
  c_dlc->add_option("--domain", dlc_domain, "domain to extract");
  c_dlc->add_option("--ref-ratio", dlc_ref_ratio, "side ratio of the probe run");
  c_dlc->add_option("--out", dlc_out, "write features JSON");

  // crossfit
  auto* c_cross = app.add_subcommand("crossfit", "fit the cross-domain law over several domains");
  std::string cross_in, cross_side = "domain", cross_krepr = "K3", cross_out;
  double cross_ref_ratio = 1.0;
  FitFlags cross_flags;
  c_cross->add_option("--in", cross_in, "run log")->required();
  c_cross->add_option("--side", cross_side, "domain|general");
  c_cross->add_option("--k-repr", cross_krepr, "K1..K4");
  c_cross->add_option("--ref-ratio", cross_ref_ratio, "side ratio of the feature probe runs");
  c_cross->add_option("--out", cross_out, "fitted-law artifact")->required();
  cross_flags.add_to(c_cross);

  // solve
  auto* c_solve = app.add_subcommand("solve", "decision procedures on fitted laws");
  c_solve->require_subcommand(1);
  auto* c_u1 = c_solve->add_subcommand("usage1", "trade-off-constrained optimal ratio");
  std::string u1_general, u1_domain, u1_out;
  double u1_n0 = 0, u1_d0 = 0, u1_lg0 = 0, u1_t = 0;
  c_u1->add_option("--general-law", u1_general, "general-side L3 artifact")->required();
  c_u1->add_option("--domain-law", u1_domain, "domain-side L3 artifact")->required();
  c_u1->add_option("--n0", u1_n0, "model size, B-params")->required();
  c_u1->add_option("--d0", u1_d0, "training tokens, B-tokens")->required();
  c_u1->add_option("--lg0", u1_lg0, "general loss before continual training")->required();
  c_u1->add_option("--t", u1_t, "relative degradation threshold")->required();
  c_u1->add_option("--out", u1_out, "write result JSON");

  auto* c_u2 = c_solve->add_subcommand("usage2", "limited-domain-data optimal ratio");
  std::string u2_domain, u2_out;
  double u2_n0 = 0, u2_dd0 = 0;
  c_u2->add_option("--domain-law", u2_domain, "domain-side L3 artifact")->required();
  c_u2->add_option("--n0", u2_n0, "model size, B-params")->required();
  c_u2->add_option("--dd0", u2_dd0, "domain-corpus tokens, B-tokens")->required();
  c_u2->add_option("--out", u2_out, "write result JSON");

  auto* c_u3 = c_solve->add_subcommand("usage3", "compute-optimal allocation");
  std::string u3_law, u3_out;
  double u3_budget = 0;
  std::optional<double> u3_r0;
  c_u3->add_option("--law", u3_law, "chinchilla artifact, or L3 with --r0")->required();
  c_u3->add_option("--budget", u3_budget, "compute budget, FLOPs")->required();
  c_u3->add_option("--r0", u3_r0, "fixed ratio for reducing an L3 artifact");
  c_u3->add_option("--out", u3_out, "write result JSON");

  // sample
  auto* c_sample = app.add_subcommand("sample", "thin curves with a sampling schedule");
  std::string sample_in, sample_out, sample_schedule = "M1";
  double sample_lambda = 0.02;
  int sample_count = 45;
  c_sample->add_option("--in", sample_in, "run log")->required();
  c_sample->add_option("--out", sample_out, "thinned run log")->required();
  c_sample->add_option("--schedule", sample_schedule, "M1|M2|M3|M4");
  c_sample->add_option("--lambda", sample_lambda, "M4 decay rate");
  c_sample->add_option("--count", sample_count, "M4 sample count");

  // plot
  auto* c_plot = app.add_subcommand("plot", "emit observed-vs-predicted CSV");
  std::string plot_law, plot_in, plot_side = "domain", plot_domain, plot_x = "d", plot_out;
  FitFlags plot_flags;
  c_plot->add_option("--law", plot_law, "fitted-law artifact")->required();
  c_plot->add_option("--in", plot_in, "run log")->required();
  c_plot->add_option("--side", plot_side, "domain|general");
  c_plot->add_option("--domain", plot_domain, "domain filter");
  c_plot->add_option("--x", plot_x, "x column: d|n|r");
  c_plot->add_option("--out", plot_out, "output CSV")->required();

  std::vector<std::string> argv_copy(args.rbegin(), args.rend());
  try {
    app.parse(argv_copy);
  } catch (const CLI::CallForHelp& e) {
    outcome.summary = app.help();
    outcome.exit_code = 0;
    return outcome;
  } catch (const CLI::ParseError& e) {
    outcome.summary = std::string(e.what()) + "\n\n" + app.help();
    outcome.exit_code = 2;
    return outcome;
  }

  try {
    json config = json::object();
    std::string resolved_config = config_path;
    if (resolved_config.empty()) {
      auto it = env.find("MIXLAW_CONFIG");
      if (it != env.end()) resolved_config = it->second;
    }
    if (!resolved_config.empty()) config = json::parse(read_file(resolved_config));

    if (app.got_subcommand(c_ingest)) {
      auto curves = load_curves(in_path, in_format);
      std::ostringstream buf;
      serialize_run_log(buf, curves, format_for(out_path, out_format));
      atomic_write(out_path, buf.str(), outcome.artifacts_written);
      std::size_t samples = 0;
      for (const auto& c : curves) samples += c.samples.size();
      outcome.summary = "ingest: " + std::to_string(curves.size()) + " curves, " +
                        std::to_string(samples) + " samples -> " + out_path;
    } else if (app.got_subcommand(c_synth)) {
      SynthDesign design;
      design.model_sizes = parse_list(sizes_text, "--sizes");
      design.domain_ratios = parse_list(ratios_text, "--ratios");
      design.eval_steps = parse_steps(steps_text);
      design.noise_rel_std = noise;
      design.seed = seed;
      const TrainConfig train_cfg = synth_flags.resolve_train(config);
      auto curves = synthesize_curves(load_artifact(gen_general_path).params,
                                      load_artifact(gen_domain_path).params, design, train_cfg,
                                      synth_domain);
      std::ostringstream buf;
      serialize_run_log(buf, curves, format_for(synth_out, ""));
      atomic_write(synth_out, buf.str(), outcome.artifacts_written);
      outcome.summary = "synth: " + std::to_string(curves.size()) + " curves x " +
                        std::to_string(design.eval_steps.size()) + " steps -> " + synth_out;
    } else if (app.got_subcommand(c_fit)) {
      const FitConfig cfg = fit_flags.resolve(config, jobs_flag);
      const TrainConfig train_cfg = fit_flags.resolve_train(config);
      auto curves = filter_domain(load_curves(fit_in, ""), fit_domain, "fit");
      const CorpusSide side = side_from(fit_side);
      auto points = curves_to_points(curves, side, train_cfg);
      FitReport report;
      FitResult result =
          fit(law_id_from_string(fit_law), points, cfg, fit_report_path.empty() ? nullptr : &report);
      json extra;
      extra["side"] = to_string(side);
      if (!fit_domain.empty()) extra["domain"] = fit_domain;
      atomic_write(fit_out, artifact_for(result, cfg, extra), outcome.artifacts_written);
      if (!fit_report_path.empty()) {
        json rep;
        rep["grid_indices"] = report.grid_indices;
        rep["objectives"] = report.objectives;
        rep["admissible"] = report.admissible;
        atomic_write(fit_report_path, rep.dump(2) + "\n", outcome.artifacts_written);
      }
      outcome.summary = "fit law=" + fit_law + " side=" + fit_side +
                        " points=" + std::to_string(result.points_used) +
                        " huber=" + fmt(result.metrics.huber) + " r2=" + fmt(result.metrics.r2) +
                        " objective=" + fmt(result.objective) +
                        (result.converged ? " converged" : " not-converged") + " -> " + fit_out;
    } else if (app.got_subcommand(c_eval)) {
      const FitConfig cfg = eval_flags.resolve(config, jobs_flag);
      const TrainConfig train_cfg = eval_flags.resolve_train(config);
      auto curves = filter_domain(load_curves(eval_in, ""), eval_domain, "eval");
      auto points = curves_to_points(curves, side_from(eval_side), train_cfg);
      const FitMetrics m = metrics(load_artifact(eval_law_path).params, points, cfg.delta);
      json doc;
      doc["huber"] = m.huber;
      doc["r2"] = m.r2;
      doc["points"] = points.size();
      if (!eval_out.empty()) atomic_write(eval_out, doc.dump(2) + "\n", outcome.artifacts_written);
      outcome.summary = doc.dump();
    } else if (app.got_subcommand(c_cv)) {
      const FitConfig cfg = cv_flags.resolve(config, jobs_flag);
      const TrainConfig train_cfg = cv_flags.resolve_train(config);
      auto curves = load_curves(cv_in, "");
      CvReport report;
      if (cv_protocol == "domain") {
        auto table = build_domain_table(curves, side_from(cv_side), cv_ref_ratio, train_cfg,
                                        nullptr);
        report = domain_holdout(table, k_repr_from_string(cv_krepr), cfg);
      } else {
        auto filtered = filter_domain(std::move(curves), cv_domain, "cv");
        auto points = curves_to_points(filtered, side_from(cv_side), train_cfg);
        const LawId law = law_id_from_string(cv_law);
        if (cv_protocol == "model-size") report = kfold_model_size(points, law, cfg);
        else if (cv_protocol == "dataset-size") report = kfold_dataset_size(points, law, cfg);
        else if (cv_protocol == "mixture") report = kfold_mixture_ratio(points, law, cfg);
        else throw std::invalid_argument("unknown CV protocol: " + cv_protocol);
      }
      if (!cv_out.empty())
        atomic_write(cv_out, to_json(report, cv_protocol), outcome.artifacts_written);
      if (!cv_csv.empty()) atomic_write(cv_csv, to_csv(report), outcome.artifacts_written);
      outcome.summary = "cv protocol=" + cv_protocol +
                        " splits=" + std::to_string(report.splits.size()) +
                        " mean_huber=" + fmt(report.mean_huber) +
                        " mean_r2=" + fmt(report.mean_r2);
    } else if (app.got_subcommand(c_dlc)) {
      auto curves = filter_domain(load_curves(dlc_in, ""), dlc_domain, "dlc");
      const CorpusSide side = side_from(dlc_side);
      const double probe_r_domain =
          side == CorpusSide::Domain ? dlc_ref_ratio : 1.0 - dlc_ref_ratio;
      const LossCurve* probe = nullptr;
      for (const LossCurve& c : curves)
        if (c.r_domain == probe_r_domain && (!probe || c.n < probe->n)) probe = &c;
      if (!probe)
        throw InsufficientDataError("dlc: no probe run at " + dlc_side + " ratio " +
                                    fmt(dlc_ref_ratio));
      const DlcFeatures f = extract_features(*probe, side);
      json doc;
      doc["domain"] = probe->domain_name;
      doc["side"] = dlc_side;
      doc["ref_ratio"] = dlc_ref_ratio;
      doc["k1"] = f.k1;
      doc["k2"] = f.k2;
      doc["k3"] = f.k3;
      if (!dlc_out.empty()) atomic_write(dlc_out, doc.dump(2) + "\n", outcome.artifacts_written);
      outcome.summary = doc.dump();
    } else if (app.got_subcommand(c_cross)) {
      const FitConfig cfg = cross_flags.resolve(config, jobs_flag);
      const TrainConfig train_cfg = cross_flags.resolve_train(config);
      auto curves = load_curves(cross_in, "");
      json provenance = json::array();
      auto table = build_domain_table(curves, side_from(cross_side), cross_ref_ratio, train_cfg,
                                      &provenance);
      auto [cross, result] = fit_cross_domain(table, k_repr_from_string(cross_krepr), cfg);
      json extra;
      extra["side"] = cross_side;
      extra["features_provenance"] = provenance;
      atomic_write(cross_out, artifact_for(result, cfg, extra), outcome.artifacts_written);
      outcome.summary = "crossfit domains=" + std::to_string(table.size()) + " k_repr=" +
                        cross_krepr + " huber=" + fmt(result.metrics.huber) +
                        " r2=" + fmt(result.metrics.r2) + " -> " + cross_out;
    } else if (app.got_subcommand(c_solve)) {
      if (c_solve->got_subcommand(c_u1)) {
        TradeoffRequest req;
        req.general_law = std::get<DcptParams>(load_artifact(u1_general).params);
        req.domain_law = std::get<DcptParams>(load_artifact(u1_domain).params);
        req.n0 = u1_n0;
        req.d0 = u1_d0;
        req.lg0 = u1_lg0;
        req.t = u1_t;
        const TradeoffResult result = tradeoff_optimal_ratio(req);
        if (!u1_out.empty()) atomic_write(u1_out, to_json(result), outcome.artifacts_written);
        outcome.summary = "usage1 r_d_star=" + fmt(result.r_d_star) +
                          " predicted_lg=" + fmt(result.predicted_lg) +
                          " predicted_ld=" + fmt(result.predicted_ld);
      } else if (c_solve->got_subcommand(c_u2)) {
        LimitedDataRequest req;
        req.domain_law = std::get<DcptParams>(load_artifact(u2_domain).params);
        req.n0 = u2_n0;
        req.dd0 = u2_dd0;
        const LimitedDataResult result = limited_data_optimal_ratio(req);
        if (!u2_out.empty()) atomic_write(u2_out, to_json(result), outcome.artifacts_written);
        outcome.summary = "usage2 r_d_star=" + fmt(result.r_d_star) +
                          " predicted_ld=" + fmt(result.predicted_ld) +
                          (result.boundary ? " (boundary)" : "");
      } else {
        const LawArtifact artifact = load_artifact(u3_law);
        ChinchillaParams params;
        if (const auto* ch = std::get_if<ChinchillaParams>(&artifact.params)) {
          params = *ch;
        } else if (const auto* l3 = std::get_if<DcptParams>(&artifact.params)) {
          if (!u3_r0)
            throw std::invalid_argument("solve usage3: an L3 artifact needs --r0 to reduce");
          params = reduce_to_chinchilla(*l3, *u3_r0);
        } else {
          throw std::invalid_argument("solve usage3: artifact must be chinchilla or L3");
        }
        const AllocationResult result = allocate(params, u3_budget);
        if (!u3_out.empty()) atomic_write(u3_out, to_json(result), outcome.artifacts_written);
        outcome.summary = "usage3 n_opt=" + fmt(result.n_opt) + " d_opt=" + fmt(result.d_opt) +
                          " G=" + fmt(result.g_const) + " a=" + fmt(result.a_exp) +
                          " b=" + fmt(result.b_exp);
      }
    } else if (app.got_subcommand(c_sample)) {
      SamplingSchedule schedule;
      schedule.tag = schedule_from_string(sample_schedule);
      schedule.lambda = sample_lambda;
      schedule.target_count = sample_count;
      auto curves = load_curves(sample_in, "");
      std::size_t kept = 0;
      std::vector<LossCurve> thinned;
      thinned.reserve(curves.size());
      for (const LossCurve& c : curves) {
        thinned.push_back(apply_schedule(c, schedule));
        kept += thinned.back().samples.size();
      }
      std::ostringstream buf;
      serialize_run_log(buf, thinned, format_for(sample_out, ""));
      atomic_write(sample_out, buf.str(), outcome.artifacts_written);
      outcome.summary = "sample schedule=" + sample_schedule + " curves=" +
                        std::to_string(thinned.size()) + " kept=" + std::to_string(kept) + " -> " +
                        sample_out;
    } else if (app.got_subcommand(c_plot)) {
      const TrainConfig train_cfg = plot_flags.resolve_train(config);
      auto curves = filter_domain(load_curves(plot_in, ""), plot_domain, "plot");
      auto points = curves_to_points(curves, side_from(plot_side), train_cfg);
      const LawArtifact artifact = load_artifact(plot_law);
      std::ostringstream buf;
      buf << "x,y_observed,y_predicted\n";
      char row[140];
      for (const DataPoint& p : points) {
        const double x = plot_x == "n" ? p.n : plot_x == "r" ? p.r : p.d;
        const double pred = evaluate(artifact.params, p.n, p.d, p.r);
        std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g\n", x, p.loss, pred);
        buf << row;
      }
      atomic_write(plot_out, buf.str(), outcome.artifacts_written);
      outcome.summary = "plot rows=" + std::to_string(points.size()) + " -> " + plot_out;
    }
    return outcome;
  } catch (const InfeasibleError& e) {
    outcome.exit_code = 3;
    outcome.summary = e.what();
  } catch (const FitError& e) {
    outcome.exit_code = 4;
    outcome.summary = e.what();
  } catch (const RunLogError& e) {
    outcome.exit_code = 5;
    outcome.summary = e.what();
  } catch (const InsufficientDataError& e) {
    outcome.exit_code = 5;
    outcome.summary = e.what();
  } catch (const IoError& e) {
    outcome.exit_code = 5;
    outcome.summary = e.what();
  } catch (const nlohmann::json::exception& e) {
    outcome.exit_code = 5;
    outcome.summary = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = 1;
    outcome.summary = e.what();
  }
  return outcome;
}

}  // namespace mixlaw::cli
