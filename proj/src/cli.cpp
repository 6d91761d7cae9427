#include "cfgroup/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgroup/baselines.hpp"
#include "cfgroup/classifier.hpp"
#include "cfgroup/compatibility.hpp"
#include "cfgroup/data_io.hpp"
#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"
#include "cfgroup/geometry.hpp"
#include "cfgroup/synth.hpp"

#ifndef CFGROUP_VERSION
#define CFGROUP_VERSION "0.0.0"
#endif

namespace cfgroup {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kEnvPrefix = "CFGROUP_";

std::string version_string() {
  return std::string("cfgroup ") + CFGROUP_VERSION + " (model format " +
         std::to_string(kModelFormatVersion) + ")";
}

/// Every long option of `app` also reads CFGROUP_<NAME> from the environment.
void add_env_overrides(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "version") continue;
    std::string env = kEnvPrefix;
    for (char c : names.front()) env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    opt->envname(env);
  }
}

class Manifest {
 public:
  explicit Manifest(std::string subcommand) : start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "cfgroup";
    doc_["version"] = CFGROUP_VERSION;
    doc_["model_format_version"] = kModelFormatVersion;
    doc_["subcommand"] = std::move(subcommand);
  }

  json& params() { return doc_["params"]; }
  json& results() { return doc_["results"]; }
  void input(const std::string& key, const fs::path& p) { doc_["inputs"][key] = p.string(); }
  void output(const std::string& key, const fs::path& p) { doc_["outputs"][key] = p.string(); }

  void write(const fs::path& path) {
    doc_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write manifest '" + path.string() + "'");
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path_for(const fs::path& primary) {
  return fs::path(primary.string() + ".manifest.json");
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---------------------------------------------------------------------------
// Shared feature-extraction options

struct FeatureOptions {
  std::optional<double> alpha_dist;
  std::optional<double> alpha_ang;
  std::size_t n_dim = kDefaultCfDim;
  std::string constraints = "both";
  std::size_t estimate_normals_k = 0;
  unsigned threads = 1;

  void add_to(CLI::App& app) {
    app.add_option("--alpha-dist", alpha_dist,
                   "Distance bandwidth in world units (default: 10 x source resolution)")
        ->check(CLI::PositiveNumber);
    app.add_option("--alpha-ang", alpha_ang, "Angle bandwidth in radians (default: 15 degrees)")
        ->check(CLI::PositiveNumber);
    app.add_option("--n-dim", n_dim, "CF dimensionality N")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    app.add_option("--constraints", constraints, "Compatibility constraints")
        ->capture_default_str()
        ->check(CLI::IsMember({"both", "distance", "angle"}));
    app.add_option("--estimate-normals", estimate_normals_k,
                   "Estimate normals with this many neighbours when a cloud lacks them (0: off)")
        ->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
  }

  CompatParams params_for(const PointCloud& src) const {
    CompatParams p = CompatParams::defaults_for(cloud_resolution(src, threads));
    if (alpha_dist) p.alpha_dist = *alpha_dist;
    if (alpha_ang) p.alpha_ang = *alpha_ang;
    p.mode = parse_constraint_mode(constraints);
    return p;
  }

  void prepare_normals(PointCloud& cloud, const char* which) const {
    if (cloud.has_normals() || parse_constraint_mode(constraints) == ConstraintMode::kDistance) {
      return;
    }
    if (estimate_normals_k == 0) {
      throw Error(ErrorCode::kMissingNormals,
                  std::string(which) +
                      " cloud has no normals but the angle constraint is enabled; rerun with "
                      "--estimate-normals K (estimate_normals) or use --constraints distance");
    }
    cloud = estimate_normals(cloud, estimate_normals_k, threads);
  }

  FeatureMatrix extract(PointCloud src, PointCloud tgt, const CorrespondenceSet& corrs,
                        CompatParams* used = nullptr) const {
    prepare_normals(src, "source");
    prepare_normals(tgt, "target");
    const CompatParams params = params_for(src);
    if (used) *used = params;
    return extract_cf(corrs, src, tgt, params, n_dim, threads);
  }

  void record(json& j, const CompatParams& p) const {
    j["alpha_dist"] = p.alpha_dist;
    j["alpha_ang"] = p.alpha_ang;
    j["constraints"] = constraints;
    j["n_dim"] = n_dim;
    j["estimate_normals"] = estimate_normals_k;
    j["threads"] = threads;
  }
};

struct Scene {
  PointCloud src;
  PointCloud tgt;
  CorrespondenceSet corrs;
};

Scene load_scene_inputs(const fs::path& src, const fs::path& tgt, const fs::path& corrs) {
  Scene s;
  s.src = read_ply(src);
  s.tgt = read_ply(tgt);
  s.corrs = read_corrs(corrs, s.src.size(), s.tgt.size());
  return s;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  fs::path out;
  SynthConfig config;
  std::string shape = "random_blob";
  std::string noise_units = "world";
  std::vector<double> euler;
  std::string ply_format = "ascii";
};

void add_synth(CLI::App& app, SynthOptions& o) {
  app.add_option("--out", o.out, "Output directory")->required();
  app.add_option("--n-points", o.config.n_points, "Source cloud size")->capture_default_str();
  app.add_option("--shape", o.shape, "Source shape")
      ->capture_default_str()
      ->check(CLI::IsMember({"sphere", "plane_union", "random_blob", "grid"}));
  app.add_option("--n-corrs", o.config.n_corrs, "Number of correspondences")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
  app.add_option("--inlier-ratio", o.config.inlier_ratio, "Inlier fraction in (0, 1]")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](const std::string& s) -> std::string {
            double v = 0.0;
            try {
              v = std::stod(s);
            } catch (...) {
              return "not a number";
            }
            return (v > 0.0 && v <= 1.0) ? "" : "inlier ratio must be in (0, 1]";
          },
          "(0,1]"));
  app.add_option("--noise", o.config.noise_sigma, "Target noise standard deviation")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--noise-units", o.noise_units, "Units of --noise")
      ->capture_default_str()
      ->check(CLI::IsMember({"world", "pr"}));
  app.add_option("--euler", o.euler, "Fixed rotation as X Y Z Euler angles in radians")
      ->expected(3);
  app.add_option("--translation-range", o.config.translation_range,
                 "Ground-truth translation drawn from [-r, r]^3")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--normal-k", o.config.normal_k, "Neighbours for normal estimation")
      ->capture_default_str();
  app.add_option("--seed", o.config.seed, "Random seed")->capture_default_str();
  app.add_option("--ply-format", o.ply_format, "PLY encoding")
      ->capture_default_str()
      ->check(CLI::IsMember({"ascii", "binary"}));
}

int run_synth(SynthOptions& o) {
  o.config.shape = parse_synth_shape(o.shape);
  o.config.noise_in_pr = o.noise_units == "pr";
  if (!o.euler.empty()) o.config.rotation_euler = Eigen::Vector3d(o.euler[0], o.euler[1], o.euler[2]);

  Manifest manifest("synth");
  const ScenePair scene = synthesize(o.config);
  fs::create_directories(o.out);
  const auto fmt = o.ply_format == "binary" ? PlyFormat::kBinaryLittleEndian : PlyFormat::kAscii;
  write_ply(scene.src, o.out / "src.ply", fmt);
  write_ply(scene.tgt, o.out / "tgt.ply", fmt);
  write_corrs(scene.corrs, o.out / "corrs.txt");
  write_transform(scene.gt, o.out / "gt.txt");

  std::size_t inliers = 0;
  for (const auto& c : scene.corrs) inliers += c.gt_label.value_or(false) ? 1 : 0;

  auto& p = manifest.params();
  p["n_points"] = o.config.n_points;
  p["shape"] = o.shape;
  p["n_corrs"] = o.config.n_corrs;
  p["inlier_ratio"] = o.config.inlier_ratio;
  p["noise"] = o.config.noise_sigma;
  p["noise_units"] = o.noise_units;
  p["euler"] = o.euler;
  p["translation_range"] = o.config.translation_range;
  p["normal_k"] = o.config.normal_k;
  p["seed"] = o.config.seed;
  p["ply_format"] = o.ply_format;
  manifest.results()["pr"] = scene.pr.pr;
  manifest.results()["n_gt_inliers"] = inliers;
  for (const char* name : {"src.ply", "tgt.ply", "corrs.txt", "gt.txt"}) {
    manifest.output(name, o.out / name);
  }
  manifest.write(o.out / "manifest.json");
  std::cout << "wrote scene to " << o.out.string() << " (pr=" << scene.pr.pr
            << ", inliers=" << inliers << "/" << scene.corrs.size() << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOptions {
  fs::path src, tgt, corrs, out;
  FeatureOptions features;
};

void add_extract(CLI::App& app, ExtractOptions& o) {
  app.add_option("--src", o.src, "Source PLY")->required();
  app.add_option("--tgt", o.tgt, "Target PLY")->required();
  app.add_option("--corrs", o.corrs, "Correspondence file")->required();
  app.add_option("--out", o.out, "Feature CSV to write")->required();
  o.features.add_to(app);
}

int run_extract(const ExtractOptions& o) {
  Manifest manifest("extract");
  const Scene s = load_scene_inputs(o.src, o.tgt, o.corrs);
  CompatParams used;
  const FeatureMatrix f = o.features.extract(s.src, s.tgt, s.corrs, &used);
  ensure_parent(o.out);
  write_features_csv(f, o.out);
  o.features.record(manifest.params(), used);
  manifest.input("src", o.src);
  manifest.input("tgt", o.tgt);
  manifest.input("corrs", o.corrs);
  manifest.output("features", o.out);
  manifest.write(manifest_path_for(o.out));
  std::cout << "wrote " << f.rows() << " x " << f.cols() << " features to " << o.out.string()
            << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::vector<fs::path> features, labels, label_corrs, scenes;
  fs::path out;
  std::optional<fs::path> history;
  FeatureOptions scene_features;
  TrainConfig config;
  std::string loss = "focal";
  std::string neg_pos_ratio = "raw";
};

void add_train(CLI::App& app, TrainOptions& o) {
  app.add_option("--features", o.features, "Feature CSV (repeatable)");
  app.add_option("--labels", o.labels, "0/1 label file matching each --features file");
  app.add_option("--label-corrs", o.label_corrs,
                 "Correspondence file whose gt_label column labels each --features file");
  app.add_option("--scene", o.scenes,
                 "Scene directory with src.ply, tgt.ply, corrs.txt, gt.txt (repeatable)");
  app.add_option("--out", o.out, "Model file to write")->required();
  app.add_option("--history", o.history, "Loss-history CSV (default: <out>.loss.csv)");
  app.add_option("--loss", o.loss, "Loss function")
      ->capture_default_str()
      ->check(CLI::IsMember({"focal", "ce"}));
  app.add_option("--gamma", o.config.loss.focal_gamma, "Focal loss gamma")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--focal-alpha", o.config.loss.focal_alpha, "Focal loss positive-class weight")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--lr", o.config.learning_rate, "SGD learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--momentum", o.config.momentum, "SGD momentum")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.999));
  app.add_option("--epochs", o.config.epochs, "Training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--batch", o.config.batch_size, "Minibatch size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--neg-pos-ratio", o.neg_pos_ratio,
                 "Negatives per positive sampled each epoch, or 'raw' for all data")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](const std::string& s) -> std::string {
            if (s == "raw") return "";
            try {
              return std::stod(s) > 0.0 ? "" : "ratio must be > 0";
            } catch (...) {
              return "expected 'raw' or a positive number";
            }
          },
          "raw|RATIO"));
  app.add_option("--seed", o.config.seed, "Seed for initialization and shuffling")
      ->capture_default_str();
  o.scene_features.add_to(app);
}

Mask labels_from_corrs(const CorrespondenceSet& corrs, const fs::path& where) {
  Mask labels;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!corrs[i].gt_label) {
      throw Error(ErrorCode::kParse, "correspondence " + std::to_string(i) + " in '" +
                                         where.string() + "' has no gt_label column");
    }
    labels.push_back(*corrs[i].gt_label);
  }
  return labels;
}

int run_train(TrainOptions& o) {
  o.config.loss.kind = parse_loss_kind(o.loss);
  if (o.neg_pos_ratio != "raw") o.config.neg_pos_ratio = std::stod(o.neg_pos_ratio);
  if (o.features.empty() && o.scenes.empty()) {
    throw CLI::ValidationError("train", "give --features files or --scene directories");
  }
  if (!o.features.empty() && o.labels.size() + o.label_corrs.size() != o.features.size()) {
    throw CLI::ValidationError("train",
                               "each --features file needs one --labels or --label-corrs file");
  }
  if (!o.labels.empty() && !o.label_corrs.empty()) {
    throw CLI::ValidationError("train", "use either --labels or --label-corrs, not both");
  }

  Manifest manifest("train");
  std::vector<FeatureMatrix> blocks;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < o.features.size(); ++i) {
    blocks.push_back(read_features_csv(o.features[i]));
    const Mask l = o.labels.empty() ? labels_from_corrs(read_corrs(o.label_corrs[i]), o.label_corrs[i])
                                    : read_mask(o.labels[i]);
    if (l.size() != static_cast<std::size_t>(blocks.back().rows())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "'" + o.features[i].string() + "' has " + std::to_string(blocks.back().rows()) +
                      " rows but its labels have " + std::to_string(l.size()) + " entries");
    }
    labels.insert(labels.end(), l.begin(), l.end());
    manifest.input("features_" + std::to_string(i), o.features[i]);
  }
  for (std::size_t i = 0; i < o.scenes.size(); ++i) {
    const fs::path& dir = o.scenes[i];
    const Scene s = load_scene_inputs(dir / "src.ply", dir / "tgt.ply", dir / "corrs.txt");
    const RigidTransform gt = read_transform(dir / "gt.txt");
    blocks.push_back(o.scene_features.extract(s.src, s.tgt, s.corrs));
    const Mask l = label_inliers(s.corrs, s.src, s.tgt, gt, cloud_resolution(s.src));
    labels.insert(labels.end(), l.begin(), l.end());
    manifest.input("scene_" + std::to_string(i), dir);
  }

  const auto width = blocks.front().cols();
  Eigen::Index rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != width) {
      throw Error(ErrorCode::kDimensionMismatch, "feature files disagree on the CF dimensionality");
    }
    rows += b.rows();
  }
  FeatureMatrix all(rows, width);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    all.middleRows(at, b.rows()) = b;
    at += b.rows();
  }

  const TrainResult result =
      train(init_model(static_cast<std::size_t>(width), o.config.seed), all, labels, o.config);
  ensure_parent(o.out);
  save_model(result.model, o.out);
  const fs::path history = o.history.value_or(fs::path(o.out.string() + ".loss.csv"));
  {
    std::ofstream h(history, std::ios::trunc);
    if (!h) throw Error(ErrorCode::kIo, "cannot write '" + history.string() + "'");
    h << "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, result.loss_history[e]);
      h << buf;
    }
  }

  auto& p = manifest.params();
  p["loss"] = o.loss;
  p["gamma"] = o.config.loss.focal_gamma;
  p["focal_alpha"] = o.config.loss.focal_alpha;
  p["lr"] = o.config.learning_rate;
  p["momentum"] = o.config.momentum;
  p["epochs"] = o.config.epochs;
  p["batch"] = o.config.batch_size;
  p["neg_pos_ratio"] = o.neg_pos_ratio;
  p["seed"] = o.config.seed;
  if (!o.scenes.empty()) {
    p["scene_features"]["n_dim"] = o.scene_features.n_dim;
    p["scene_features"]["constraints"] = o.scene_features.constraints;
    if (o.scene_features.alpha_dist) p["scene_features"]["alpha_dist"] = *o.scene_features.alpha_dist;
    if (o.scene_features.alpha_ang) p["scene_features"]["alpha_ang"] = *o.scene_features.alpha_ang;
  }
  std::size_t positives = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  manifest.results()["samples"] = labels.size();
  manifest.results()["positives"] = positives;
  manifest.results()["initial_loss"] = result.loss_history.front();
  manifest.results()["final_loss"] = result.loss_history.back();
  manifest.results()["converged_epoch"] =
      result.converged_epoch ? json(*result.converged_epoch) : json(nullptr);
  manifest.output("model", o.out);
  manifest.output("history", history);
  manifest.write(manifest_path_for(o.out));
  std::cout << "trained on " << labels.size() << " samples (" << positives
            << " inliers); loss " << result.loss_history.front() << " -> "
            << result.loss_history.back() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOptions {
  fs::path model, features, out_mask;
  std::optional<fs::path> out_probs;
  double threshold = kDefaultThreshold;
  unsigned threads = 1;
};

void add_classify(CLI::App& app, ClassifyOptions& o) {
  app.add_option("--model", o.model, "Model file")->required();
  app.add_option("--features", o.features, "Feature CSV")->required();
  app.add_option("--threshold", o.threshold, "Inlier probability threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--out-mask", o.out_mask, "Mask file to write")->required();
  app.add_option("--out-probs", o.out_probs, "Probability CSV (default: <mask>.probs.csv)");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
}

int run_classify(const ClassifyOptions& o) {
  Manifest manifest("classify");
  const MlpModel model = load_model(o.model);
  const FeatureMatrix features = read_features_csv(o.features);
  const std::vector<double> probs = predict_proba(model, features, o.threads);
  Mask mask(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) mask[i] = probs[i] >= o.threshold;

  ensure_parent(o.out_mask);
  write_mask(mask, o.out_mask);
  const fs::path probs_path = o.out_probs.value_or(fs::path(o.out_mask.string() + ".probs.csv"));
  {
    std::ofstream out(probs_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + probs_path.string() + "'");
    out << "index,prob_inlier,label\n";
    char buf[64];
    for (std::size_t i = 0; i < probs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d\n", i, probs[i], mask[i] ? 1 : 0);
      out << buf;
    }
  }
  const std::size_t kept = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  manifest.params()["threshold"] = o.threshold;
  manifest.params()["threads"] = o.threads;
  manifest.input("model", o.model);
  manifest.input("features", o.features);
  manifest.output("mask", o.out_mask);
  manifest.output("probs", probs_path);
  manifest.results()["kept"] = kept;
  manifest.write(manifest_path_for(o.out_mask));
  std::cout << "kept " << kept << " of " << mask.size() << " correspondences\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineOptions {
  std::string method;
  std::optional<fs::path> src, tgt;
  fs::path corrs, out_mask;
  std::optional<fs::path> out_transform;
  std::optional<double> threshold;
  double score_threshold = kDefaultGcThreshold;
  std::optional<double> alpha_dist, alpha_ang;
  std::string constraints = "both";
  std::size_t iterations = 1000;
  std::optional<double> inlier_dist;
  double inlier_mult = kDefaultInlierMultiplier;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void add_baseline(CLI::App& app, BaselineOptions& o) {
  app.add_option("--method", o.method, "Grouping method")
      ->required()
      ->check(CLI::IsMember({"ss", "nnsr", "gc", "ransac"}));
  app.add_option("--src", o.src, "Source PLY (gc, ransac)");
  app.add_option("--tgt", o.tgt, "Target PLY (gc, ransac)");
  app.add_option("--corrs", o.corrs, "Correspondence file")->required();
  app.add_option("--out-mask", o.out_mask, "Mask file to write")->required();
  app.add_option("--out-transform", o.out_transform, "Transform file (ransac)");
  app.add_option("--threshold", o.threshold,
                 "SS: keep similarity >= t (default 0.5); NNSR: keep ratio < t (default 0.8)");
  app.add_option("--score-threshold", o.score_threshold, "GC compatibility threshold")
      ->capture_default_str();
  app.add_option("--alpha-dist", o.alpha_dist, "GC distance bandwidth (default 10 pr)")
      ->check(CLI::PositiveNumber);
  app.add_option("--alpha-ang", o.alpha_ang, "GC angle bandwidth in radians")
      ->check(CLI::PositiveNumber);
  app.add_option("--constraints", o.constraints, "GC compatibility constraints")
      ->capture_default_str()
      ->check(CLI::IsMember({"both", "distance", "angle"}));
  app.add_option("--iterations", o.iterations, "RANSAC iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--inlier-dist", o.inlier_dist, "RANSAC inlier distance in world units")
      ->check(CLI::PositiveNumber);
  app.add_option("--inlier-mult", o.inlier_mult,
                 "RANSAC inlier distance as a multiple of source resolution")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "RANSAC seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
}

int run_baseline(const BaselineOptions& o) {
  Manifest manifest("baseline");
  auto& p = manifest.params();
  p["method"] = o.method;
  const bool geometric = o.method == "gc" || o.method == "ransac";
  if (geometric && (!o.src || !o.tgt)) {
    throw CLI::ValidationError("baseline", o.method + " needs --src and --tgt");
  }

  GroupingResult result;
  std::optional<RigidTransform> transform;
  if (!geometric) {
    const CorrespondenceSet corrs = read_corrs(o.corrs);
    const double t = o.threshold.value_or(o.method == "ss" ? 0.5 : 0.8);
    p["threshold"] = t;
    result = o.method == "ss" ? group_ss(corrs, t) : group_nnsr(corrs, t);
  } else {
    const Scene s = load_scene_inputs(*o.src, *o.tgt, o.corrs);
    const Resolution pr = cloud_resolution(s.src, o.threads);
    if (o.method == "gc") {
      CompatParams params = CompatParams::defaults_for(pr);
      if (o.alpha_dist) params.alpha_dist = *o.alpha_dist;
      if (o.alpha_ang) params.alpha_ang = *o.alpha_ang;
      params.mode = parse_constraint_mode(o.constraints);
      if (params.uses_angle() && (!s.src.has_normals() || !s.tgt.has_normals())) {
        throw Error(ErrorCode::kMissingNormals,
                    "GC with the angle constraint needs normals in both PLY files");
      }
      result = group_gc(s.corrs, s.src, s.tgt, params, o.score_threshold, o.threads);
      p["score_threshold"] = o.score_threshold;
      p["alpha_dist"] = params.alpha_dist;
      p["alpha_ang"] = params.alpha_ang;
      p["constraints"] = o.constraints;
    } else {
      RansacParams rp;
      rp.iterations = o.iterations;
      rp.inlier_dist = o.inlier_dist.value_or(o.inlier_mult * pr.pr);
      rp.seed = o.seed;
      rp.threads = o.threads;
      const RansacResult r = group_ransac(s.corrs, s.src, s.tgt, rp);
      result = r.grouping;
      transform = r.transform;
      p["iterations"] = o.iterations;
      p["inlier_dist"] = rp.inlier_dist;
      p["seed"] = o.seed;
      manifest.results()["best_count"] = r.best_count;
      manifest.results()["best_iteration"] = r.best_iteration;
      manifest.results()["degenerate_iterations"] = r.degenerate_iterations;
    }
    manifest.input("src", *o.src);
    manifest.input("tgt", *o.tgt);
  }
  p["threads"] = o.threads;

  ensure_parent(o.out_mask);
  write_mask(result.kept, o.out_mask);
  manifest.input("corrs", o.corrs);
  manifest.output("mask", o.out_mask);
  if (transform) {
    const fs::path tpath = o.out_transform.value_or(fs::path(o.out_mask.string() + ".transform.txt"));
    write_transform(*transform, tpath);
    manifest.output("transform", tpath);
  }
  manifest.results()["kept"] = result.kept_count();
  manifest.write(manifest_path_for(o.out_mask));
  std::cout << o.method << " kept " << result.kept_count() << " of " << result.kept.size()
            << " correspondences\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  fs::path mask, corrs, src, tgt, gt;
  double multiplier = kDefaultInlierMultiplier;
  std::string method = "grouping";
  std::optional<fs::path> out_report, out_csv;
};

void add_evaluate(CLI::App& app, EvaluateOptions& o) {
  app.add_option("--mask", o.mask, "Mask file")->required();
  app.add_option("--corrs", o.corrs, "Correspondence file")->required();
  app.add_option("--src", o.src, "Source PLY")->required();
  app.add_option("--tgt", o.tgt, "Target PLY")->required();
  app.add_option("--gt", o.gt, "Ground-truth transform file")->required();
  app.add_option("--multiplier", o.multiplier, "Inlier threshold in units of pr")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--method", o.method, "Method name recorded in the report")->capture_default_str();
  app.add_option("--out-report", o.out_report, "Text report to write");
  app.add_option("--out-csv", o.out_csv, "CSV report to write");
}

int run_evaluate(const EvaluateOptions& o) {
  Manifest manifest("evaluate");
  const Scene s = load_scene_inputs(o.src, o.tgt, o.corrs);
  const RigidTransform gt = read_transform(o.gt);
  const Mask mask = read_mask(o.mask);
  const Resolution pr = cloud_resolution(s.src);
  const Mask labels = label_inliers(s.corrs, s.src, s.tgt, gt, pr, o.multiplier);
  const EvalReport report = score(mask, labels, o.method);

  const std::string text = to_text(report);
  std::cout << text;
  if (o.out_report) {
    ensure_parent(*o.out_report);
    std::ofstream out(*o.out_report, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + o.out_report->string() + "'");
    out << text;
    manifest.output("report", *o.out_report);
  }
  if (o.out_csv) {
    ensure_parent(*o.out_csv);
    write_report_csv(*o.out_csv, std::span<const EvalReport>(&report, 1));
    manifest.output("csv", *o.out_csv);
  }
  manifest.params()["multiplier"] = o.multiplier;
  manifest.params()["method"] = o.method;
  manifest.results()["pr"] = pr.pr;
  manifest.input("mask", o.mask);
  manifest.input("corrs", o.corrs);
  manifest.input("src", o.src);
  manifest.input("tgt", o.tgt);
  manifest.input("gt", o.gt);
  const fs::path primary = o.out_report ? *o.out_report : o.out_csv ? *o.out_csv : o.mask;
  manifest.write(o.out_report || o.out_csv ? manifest_path_for(primary)
                                           : fs::path(o.mask.string() + ".evaluate.manifest.json"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// register

struct RegisterOptions {
  fs::path src, tgt, corrs, mask, out;
};

void add_register(CLI::App& app, RegisterOptions& o) {
  app.add_option("--src", o.src, "Source PLY")->required();
  app.add_option("--tgt", o.tgt, "Target PLY")->required();
  app.add_option("--corrs", o.corrs, "Correspondence file")->required();
  app.add_option("--mask", o.mask, "Mask of correspondences to use")->required();
  app.add_option("--out", o.out, "Transform file to write")->required();
}

int run_register(const RegisterOptions& o) {
  Manifest manifest("register");
  const Scene s = load_scene_inputs(o.src, o.tgt, o.corrs);
  const Mask mask = read_mask(o.mask);
  if (mask.size() != s.corrs.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask has " + std::to_string(mask.size()) + " entries for " +
                    std::to_string(s.corrs.size()) + " correspondences");
  }
  std::vector<Eigen::Vector3d> a, b;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    a.push_back(s.src.points[s.corrs[i].src_index]);
    b.push_back(s.tgt.points[s.corrs[i].tgt_index]);
  }
  const RigidTransform t = estimate_rigid_transform(a, b);
  const double rms = rms_residual(a, b, t);
  ensure_parent(o.out);
  write_transform(t, o.out);

  manifest.input("src", o.src);
  manifest.input("tgt", o.tgt);
  manifest.input("corrs", o.corrs);
  manifest.input("mask", o.mask);
  manifest.output("transform", o.out);
  manifest.results()["n_used"] = a.size();
  manifest.results()["rms_residual"] = rms;
  manifest.write(manifest_path_for(o.out));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", rms);
  std::cout << "n_used=" << a.size() << "\nrms_residual=" << buf << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Correspondence grouping with compatibility features", "cfgroup"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  SynthOptions synth;
  ExtractOptions extract;
  TrainOptions train_opts;
  ClassifyOptions classify;
  BaselineOptions baseline;
  EvaluateOptions evaluate;
  RegisterOptions reg;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  add_synth(*synth_cmd, synth);
  auto* extract_cmd = app.add_subcommand("extract", "Compute compatibility features");
  add_extract(*extract_cmd, extract);
  auto* train_cmd = app.add_subcommand("train", "Train the MLP classifier");
  add_train(*train_cmd, train_opts);
  auto* classify_cmd = app.add_subcommand("classify", "Classify features with a trained model");
  add_classify(*classify_cmd, classify);
  auto* baseline_cmd = app.add_subcommand("baseline", "Run a classical grouping method");
  add_baseline(*baseline_cmd, baseline);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a mask against ground truth");
  add_evaluate(*evaluate_cmd, evaluate);
  auto* register_cmd = app.add_subcommand("register", "Fit a rigid transform to kept correspondences");
  add_register(*register_cmd, reg);
  for (auto* sub : app.get_subcommands({})) add_env_overrides(*sub);

  try {
    app.parse(argc, argv);
    if (*synth_cmd) return run_synth(synth);
    if (*extract_cmd) return run_extract(extract);
    if (*train_cmd) return run_train(train_opts);
    if (*classify_cmd) return run_classify(classify);
    if (*baseline_cmd) return run_baseline(baseline);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*register_cmd) return run_register(reg);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(args.size()), argv.data());
}

}  // namespace cfgroup
