#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>

#include "pairview/data.hpp"
#include "pairview/errors.hpp"
#include "pairview/eval.hpp"
#include "pairview/rng.hpp"
#include "pairview/sbnn.hpp"
#include "pairview/schedule.hpp"
#include "pairview/srrr.hpp"
#include "pairview/types.hpp"
#include "pairview/viz.hpp"

namespace fs = std::filesystem;
using namespace pairview;

namespace {

constexpr const char* kVersion = "0.1.0";

// FNV-1a, 64-bit, hex-encoded. Used for the manifest's config hash and input
// file digests.
std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunConfig {
  std::string x_csv, y_csv, meta_csv;
  data::PreprocessOptions preprocess;
  std::string variant = "sbnn-2";
  std::string gene_subset;
  std::uint64_t seed = 0;
  std::string out = "out";
  int folds = 10;
  int runs = 10;
  bool paper_compat = true;
  bool parallel = false;
  int target_genes = 25;
  json schedule_overrides = json::object();
  json sbnn_overrides = json::object();
  json raw = json::object();
};

RunConfig load_config(const std::string& config_path) {
  RunConfig c;
  if (!config_path.empty()) {
    json j;
    try {
      j = json::parse(slurp(config_path));
    } catch (const json::exception& e) {
      throw ArgumentError("config parse error: " + std::string(e.what()));
    } catch (const DataError& e) {
      throw ArgumentError(e.what());
    }
    c.raw = j;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("x_csv", c.x_csv);
    get("y_csv", c.y_csv);
    get("meta_csv", c.meta_csv);
    get("variant", c.variant);
    get("gene_subset", c.gene_subset);
    get("seed", c.seed);
    get("out", c.out);
    get("folds", c.folds);
    get("runs", c.runs);
    get("paper_compat", c.paper_compat);
    get("parallel", c.parallel);
    get("target_genes", c.target_genes);
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      if (p.contains("depth_normalize")) c.preprocess.depth_normalize = p.at("depth_normalize").get<bool>();
      if (p.contains("log")) c.preprocess.log = p.at("log").get<bool>();
      if (p.contains("hvg")) c.preprocess.hvg = p.at("hvg").get<int>();
      if (p.contains("zscore")) c.preprocess.zscore = p.at("zscore").get<bool>();
    }
    if (j.contains("schedule")) c.schedule_overrides = j.at("schedule");
    if (j.contains("sbnn")) c.sbnn_overrides = j.at("sbnn");
  }
  return c;
}

void write_manifest(const RunConfig& c, const std::string& command) {
  json effective = c.raw;
  effective["variant"] = c.variant;
  effective["seed"] = c.seed;
  effective["out"] = c.out;
  effective["folds"] = c.folds;
  effective["runs"] = c.runs;
  effective["paper_compat"] = c.paper_compat;

  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = c.seed;
  manifest["config"] = effective;
  manifest["config_hash"] = fnv1a_hex(effective.dump());
  json inputs = json::object();
  for (const std::string& path : {c.x_csv, c.y_csv, c.meta_csv, c.gene_subset}) {
    if (!path.empty() && fs::exists(path)) inputs[path] = fnv1a_hex(slurp(path));
  }
  manifest["inputs"] = inputs;

  fs::create_directories(c.out);
  std::ofstream out(c.out + "/manifest.json");
  out << manifest.dump(2) << '\n';
}

data::PairedDataset load_dataset(const RunConfig& c) {
  if (c.x_csv.empty() || c.y_csv.empty())
    throw ArgumentError("x_csv and y_csv are required");
  std::optional<std::string> meta;
  if (!c.meta_csv.empty()) meta = c.meta_csv;
  data::PairedDataset ds = data::load_paired_csv(c.x_csv, c.y_csv, meta);

  if (!c.gene_subset.empty()) {
    std::unordered_set<std::string> keep;
    std::istringstream in(slurp(c.gene_subset));
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (!line.empty()) keep.insert(line);
    }
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < ds.p(); ++j)
      if (keep.count(ds.x_names[static_cast<std::size_t>(j)])) cols.push_back(j);
    if (cols.empty()) throw DataError("gene subset matches no predictor columns");
    data::PairedDataset sub = ds;
    sub.x.resize(ds.n(), static_cast<Eigen::Index>(cols.size()));
    sub.x_names.clear();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      sub.x.col(static_cast<Eigen::Index>(j)) = ds.x.col(cols[j]);
      sub.x_names.push_back(ds.x_names[static_cast<std::size_t>(cols[j])]);
    }
    ds = std::move(sub);
  }
  return ds;
}

schedule::TrainSchedule effective_schedule(const RunConfig& c) {
  return schedule::schedule_from_json(c.schedule_overrides);
}

sbnn::SbnnConfig effective_sbnn_config(const RunConfig& c, int bottleneck) {
  sbnn::SbnnConfig cfg = sbnn::config_from_json(c.sbnn_overrides);
  if (!c.sbnn_overrides.contains("bottleneck")) cfg.bottleneck = bottleneck;
  return cfg;
}

eval::VariantSpec build_variant(const RunConfig& c, const std::string& name) {
  eval::VariantSpec v = eval::make_variant(name);
  v.target_genes = c.target_genes;
  v.sched = effective_schedule(c);
  if (v.kind == eval::VariantKind::Sbnn) v.config = effective_sbnn_config(c, v.config.bottleneck);
  v.sched.prune_to = std::min(v.sched.prune_to, c.target_genes > 0 ? c.target_genes : v.sched.prune_to);
  return v;
}

int cmd_preprocess(const RunConfig& c) {
  data::PairedDataset raw = load_dataset(c);
  data::PairedDataset ds = data::preprocess(raw, c.preprocess);
  fs::create_directories(c.out);
  data::save_paired_csv(ds, c.out + "/x_processed.csv", c.out + "/y_processed.csv",
                        ds.sample_labels.empty() ? std::nullopt
                                                 : std::optional<std::string>(c.out + "/meta.csv"));
  json summary;
  summary["n"] = ds.n();
  summary["p"] = ds.p();
  summary["q"] = ds.q();
  summary["dropped_samples"] = json::array();
  json dropped = json::array();
  if (ds.p() < raw.p()) {
    std::unordered_set<std::string> kept(ds.x_names.begin(), ds.x_names.end());
    for (const auto& name : raw.x_names)
      if (!kept.count(name)) dropped.push_back({{"feature", name}, {"reason", "below HVG cutoff"}});
  }
  summary["dropped_features"] = dropped;
  std::ofstream out(c.out + "/summary.json");
  out << summary.dump(2) << '\n';
  write_manifest(c, "preprocess");
  std::cout << "preprocess: n=" << ds.n() << " p=" << ds.p() << " q=" << ds.q() << '\n';
  return 0;
}

int cmd_fit(const RunConfig& c) {
  data::PairedDataset ds = load_dataset(c);
  fs::create_directories(c.out);
  const std::string tag = "_seed" + std::to_string(c.seed);
  const eval::VariantSpec v = build_variant(c, c.variant);

  json model_json;
  std::vector<std::string> selected;
  schedule::TrainHistory history;

  if (v.kind == eval::VariantKind::Srrr) {
    Matrix xc = ds.x, yc = ds.y;
    xc.rowwise() -= ds.x.colwise().mean();
    yc.rowwise() -= ds.y.colwise().mean();
    const int rank = v.rank > 0 ? v.rank : static_cast<int>(ds.q());
    auto [lambda, model] = srrr::regularization_path(xc, yc, rank, c.target_genes);
    srrr::RrrModel relaxed = srrr::relaxed_refit(xc, yc, model);
    relaxed.inexact_target = model.inexact_target;
    model_json = srrr::model_to_json(relaxed);
    model_json["lambda_path"] = lambda;
    for (int idx : relaxed.selected) selected.push_back(ds.x_names[static_cast<std::size_t>(idx)]);
  } else if (v.kind == eval::VariantKind::Sbnn) {
    auto res = schedule::full_pipeline(ds, v.config, v.sched, c.seed);
    model_json = sbnn::model_to_json(res.model);
    selected = res.selected_features;
    history = std::move(res.history);
  } else {
    throw ArgumentError("cmd_fit: unsupported variant " + c.variant);
  }

  {
    std::ofstream out(c.out + "/model" + tag + ".json");
    out << model_json.dump() << '\n';
  }
  history.to_csv(c.out + "/history" + tag + ".csv");
  {
    std::ofstream out(c.out + "/selected_features" + tag + ".txt");
    for (const auto& name : selected) out << name << '\n';
  }
  write_manifest(c, "fit");
  std::cout << "fit: " << c.variant << " selected " << selected.size() << " features\n";
  return 0;
}

int cmd_crossval(const RunConfig& c) {
  data::PairedDataset ds = load_dataset(c);
  std::vector<eval::VariantSpec> variants;
  std::stringstream ss(c.variant);
  std::string name;
  while (std::getline(ss, name, ',')) variants.push_back(build_variant(c, name));

  eval::CvReport rep = eval::cross_validate(ds, variants, c.folds, c.seed, c.paper_compat,
                                            c.parallel);
  fs::create_directories(c.out);
  {
    std::ofstream out(c.out + "/cv_report.json");
    out << rep.to_json().dump(2) << '\n';
  }
  {
    std::ofstream out(c.out + "/cv_report.csv");
    out << rep.to_csv_string();
  }
  {
    std::ofstream out(c.out + "/cv_per_feature.csv");
    out << rep.per_feature_csv_string();
  }
  {
    std::ofstream out(c.out + "/cv_curves.csv");
    out << rep.curves_csv_string();
  }
  write_manifest(c, "crossval");
  for (std::size_t vi = 0; vi < rep.variant_names.size(); ++vi)
    std::cout << rep.variant_names[vi] << ": R2 = " << rep.mean_r2(static_cast<Eigen::Index>(vi))
              << " +- " << rep.sd_r2(static_cast<Eigen::Index>(vi)) << '\n';
  return 0;
}

int cmd_stability(const RunConfig& c) {
  data::PairedDataset ds = load_dataset(c);
  const eval::VariantSpec v = build_variant(c, c.variant);
  if (v.kind != eval::VariantKind::Sbnn)
    throw ArgumentError("cmd_stability: stability analysis runs sBNN variants");
  eval::StabilityReport rep = eval::stability_analysis(ds, v.config, v.sched, c.runs, c.seed);
  fs::create_directories(c.out);
  {
    std::ofstream out(c.out + "/stability.json");
    out << rep.to_json().dump(2) << '\n';
  }
  {
    std::ofstream out(c.out + "/stability_histogram.csv");
    out << rep.to_csv_string();
  }
  write_manifest(c, "stability");
  std::cout << "stability: mean pairwise overlap " << rep.pairwise_mean_overlap << '\n';
  return 0;
}

int cmd_visualize(const RunConfig& c, const std::string& model_path) {
  data::PairedDataset ds = load_dataset(c);
  json mj;
  try {
    mj = json::parse(slurp(model_path));
  } catch (const json::exception& e) {
    throw DataError("model parse error: " + std::string(e.what()));
  }

  viz::LatentEmbedding emb;
  emb.colors = ds.sample_colors;
  emb.labels = ds.sample_labels;
  std::vector<std::pair<std::string, Vector>> overlays;

  if (mj.at("kind") == "sbnn") {
    sbnn::SbnnModel model = sbnn::model_from_json(mj);
    Matrix xs(ds.n(), model.input_dim);
    for (int j = 0; j < model.input_dim; ++j) {
      const int orig = model.surviving_inputs[static_cast<std::size_t>(j)];
      if (orig >= ds.p())
        throw DataError("model expects predictor column " + std::to_string(orig) +
                        " which the dataset lacks; expected genes: n/a");
      xs.col(j) = ds.x.col(orig);
    }
    const auto fr = sbnn::forward(model, xs);
    Matrix latent = fr.latent;
    if (latent.cols() > 2) {
      emb.coords = viz::tsne_exact(latent, 30.0, 750, c.seed);
      emb.source = "tsne_of_bottleneck";
    } else {
      emb.coords = latent;
      emb.source = "direct_bottleneck";
    }
    for (Eigen::Index j = 0; j < ds.q(); ++j)
      overlays.emplace_back(ds.y_names[static_cast<std::size_t>(j)], fr.y_pred.col(j));
    for (int j = 0; j < model.input_dim; ++j) {
      const int orig = model.surviving_inputs[static_cast<std::size_t>(j)];
      overlays.emplace_back(ds.x_names[static_cast<std::size_t>(orig)], fr.x_recon.col(j));
    }
  } else {
    srrr::RrrModel model = srrr::model_from_json(mj);
    if (ds.p() != model.w.rows())
      throw DataError("model expects " + std::to_string(model.w.rows()) +
                      " predictor columns, dataset has " + std::to_string(ds.p()));
    Matrix latent = viz::extract_latent(model, ds.x);
    if (latent.cols() > 2) {
      emb.coords = viz::tsne_exact(latent, 30.0, 750, c.seed);
      emb.source = "tsne_of_bottleneck";
    } else {
      emb.coords = latent;
      emb.source = "srrr_components";
    }
    const Matrix y_pred = model.predict(ds.x);
    for (Eigen::Index j = 0; j < ds.q(); ++j)
      overlays.emplace_back(ds.y_names[static_cast<std::size_t>(j)], y_pred.col(j));
    // Gene panels: linear prediction of each selected gene from the latent
    // coordinates (intercept + least squares).
    Matrix design(ds.n(), emb.coords.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(emb.coords.cols()) = emb.coords;
    for (int idx : model.selected) {
      const Vector coef = design.colPivHouseholderQr().solve(ds.x.col(idx));
      overlays.emplace_back(ds.x_names[static_cast<std::size_t>(idx)], design * coef);
    }
  }

  const auto files = viz::render_latent_svg(emb, overlays, c.out);
  write_manifest(c, "visualize");
  std::cout << "visualize: wrote " << files.size() << " files to " << c.out << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c, int n, int p, int q, int support, int latent, double noise,
              const std::string& link) {
  data::SynthGroundTruth truth;
  for (int i = 0; i < support; ++i) truth.support.push_back(i);
  truth.latent_dim = latent;
  truth.noise_sd = noise;
  if (link == "linear")
    truth.link = data::Link::Linear;
  else if (link == "nonlinear")
    truth.link = data::Link::Nonlinear;
  else
    throw ArgumentError("synth: link must be linear or nonlinear");

  auto [ds, t] = data::synth_generate(n, p, q, truth, c.seed);
  fs::create_directories(c.out);
  data::save_paired_csv(ds, c.out + "/x.csv", c.out + "/y.csv");
  json tj;
  tj["support"] = t.support;
  tj["latent_dim"] = t.latent_dim;
  tj["link"] = link;
  tj["noise_sd"] = t.noise_sd;
  std::ofstream out(c.out + "/truth.json");
  out << tj.dump(2) << '\n';
  write_manifest(c, "synth");
  std::cout << "synth: wrote " << n << "x" << p << " / " << n << "x" << q << " to " << c.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairview: sparse shared representations of paired datasets"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string config_path, variant_flag, out_flag, gene_subset_flag, model_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> folds_flag, runs_flag;
  std::optional<bool> paper_compat_flag;
  bool parallel_flag = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "random seed (overrides config)");
  app.add_option("--variant", variant_flag, "model variant (overrides config)");
  app.add_option("--out", out_flag, "output directory (overrides config)");
  app.add_option("--gene-subset", gene_subset_flag, "file listing predictor names to keep");
  app.add_option("--folds", folds_flag, "cross-validation folds");
  app.add_option("--runs", runs_flag, "stability repeats");
  app.add_flag("--paper-compat,!--no-paper-compat", paper_compat_flag,
               "global standardization mode");
  app.add_flag("--parallel", parallel_flag, "parallelize CV folds");

  auto* preprocess = app.add_subcommand("preprocess", "run the preprocessing chain");
  auto* fit = app.add_subcommand("fit", "fit a variant on the whole dataset");
  auto* crossval = app.add_subcommand("crossval", "cross-validate variants");
  auto* stability = app.add_subcommand("stability", "gene-selection stability repeats");
  auto* visualize = app.add_subcommand("visualize", "render latent-space SVG panels");
  visualize->add_option("--model", model_path, "model JSON path")->required();
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  int synth_n = 500, synth_p = 50, synth_q = 8, synth_support = 10, synth_latent = 2;
  double synth_noise = 0.3;
  std::string synth_link = "linear";
  synth->add_option("--n", synth_n);
  synth->add_option("--p", synth_p);
  synth->add_option("--q", synth_q);
  synth->add_option("--support", synth_support);
  synth->add_option("--latent", synth_latent);
  synth->add_option("--noise", synth_noise);
  synth->add_option("--link", synth_link);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (!variant_flag.empty()) cfg.variant = variant_flag;
    if (!out_flag.empty()) cfg.out = out_flag;
    if (!gene_subset_flag.empty()) cfg.gene_subset = gene_subset_flag;
    if (folds_flag) cfg.folds = *folds_flag;
    if (runs_flag) cfg.runs = *runs_flag;
    if (paper_compat_flag) cfg.paper_compat = *paper_compat_flag;
    if (parallel_flag) cfg.parallel = true;

    if (preprocess->parsed()) return cmd_preprocess(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (crossval->parsed()) return cmd_crossval(cfg);
    if (stability->parsed()) return cmd_stability(cfg);
    if (visualize->parsed()) return cmd_visualize(cfg, model_path);
    if (synth->parsed())
      return cmd_synth(cfg, synth_n, synth_p, synth_q, synth_support, synth_latent, synth_noise,
                       synth_link);
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return 4;
  }
}
