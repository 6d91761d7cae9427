// Acceptance checks 1-9. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cfgroup/baselines.hpp"
#include "cfgroup/classifier.hpp"
#include "cfgroup/cli.hpp"
#include "cfgroup/compatibility.hpp"
#include "cfgroup/data_io.hpp"
#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"
#include "cfgroup/geometry.hpp"
#include "cfgroup/synth.hpp"
#include "fixture_corpus.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace cfgroup;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

/// Synthetic pair with its CF features (at the widest N used) and labels.
struct SceneData {
  ScenePair scene;
  FeatureMatrix features;
  Mask labels;
};

constexpr std::size_t kWidestN = 100;

SceneData make_scene(std::uint64_t seed, double inlier_ratio) {
  SynthConfig cfg;
  cfg.n_corrs = 500;
  cfg.inlier_ratio = inlier_ratio;
  cfg.noise_sigma = 0.3;
  cfg.noise_in_pr = true;
  cfg.seed = seed;
  SceneData d;
  d.scene = synthesize(cfg);
  d.features = extract_cf(d.scene.corrs, d.scene.src, d.scene.tgt,
                          CompatParams::defaults_for(d.scene.pr), kWidestN);
  d.labels = label_inliers(d.scene.corrs, d.scene.src, d.scene.tgt, d.scene.gt, d.scene.pr);
  return d;
}

std::vector<SceneData> make_scenes(std::uint64_t first_seed, std::size_t count, double ratio) {
  std::vector<SceneData> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_scene(first_seed + i, ratio));
  return out;
}

void stack(const std::vector<SceneData>& scenes, std::size_t n, FeatureMatrix& f,
           std::vector<std::uint8_t>& labels) {
  Eigen::Index rows = 0;
  for (const auto& s : scenes) rows += s.features.rows();
  f.resize(rows, static_cast<Eigen::Index>(n));
  labels.clear();
  Eigen::Index at = 0;
  for (const auto& s : scenes) {
    f.middleRows(at, s.features.rows()) = s.features.leftCols(static_cast<Eigen::Index>(n));
    at += s.features.rows();
    labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  }
}

TrainResult train_on(const std::vector<SceneData>& scenes, std::size_t n, TrainConfig cfg) {
  FeatureMatrix f;
  std::vector<std::uint8_t> labels;
  stack(scenes, n, f, labels);
  return train(init_model(n, cfg.seed), f, labels, cfg);
}

Mask classify(const MlpModel& model, const FeatureMatrix& features) {
  const auto probs = predict_proba(model, features);
  Mask m(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) m[i] = probs[i] >= kDefaultThreshold;
  return m;
}

AggregateReport evaluate_cf(const MlpModel& model, const std::vector<SceneData>& scenes, std::size_t n,
                            const std::string& name) {
  std::vector<EvalReport> reps;
  for (const auto& s : scenes) {
    reps.push_back(score(classify(model, s.features.leftCols(static_cast<Eigen::Index>(n))), s.labels, name));
  }
  return aggregate(reps, name);
}

std::string summary(const AggregateReport& a) {
  return a.method + " P=" + fmt("%.4f", a.mean_precision) + " R=" + fmt("%.4f", a.mean_recall) +
         " F=" + fmt("%.4f", a.mean_f_paper);
}

bool loss_decreased(const TrainResult& r) {
  for (double l : r.loss_history) {
    if (!std::isfinite(l)) return false;
  }
  return r.loss_history.back() < r.loss_history.front();
}

std::string epochs_text(const TrainResult& r) {
  return r.converged_epoch ? std::to_string(*r.converged_epoch) : std::string("none");
}

// --- 1 ----------------------------------------------------------------------

Outcome rotation_invariance() {
  const auto train_scenes = make_scenes(500, 5, 0.1);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 1;
  const TrainResult model = train_on(train_scenes, kDefaultCfDim, cfg);

  double worst = 0.0;
  bool identical = true;
  std::mt19937_64 rng(99);
  for (std::uint64_t k = 0; k < 20; ++k) {
    SynthConfig sc;
    sc.n_corrs = 500;
    sc.noise_sigma = 0.3;
    sc.noise_in_pr = true;
    sc.seed = 600 + k;
    const ScenePair s = synthesize(sc);
    const RigidTransform motion = random_rigid_transform(rng, 10.0);
    const PointCloud moved = apply_transform(s.src, motion);

    const FeatureMatrix a = extract_cf(s.corrs, s.src, s.tgt, CompatParams::defaults_for(cloud_resolution(s.src)));
    const FeatureMatrix b = extract_cf(s.corrs, moved, s.tgt, CompatParams::defaults_for(cloud_resolution(moved)));
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());

    // Labels follow the moved frame: gt composed with the inverse motion.
    const Mask la = label_inliers(s.corrs, s.src, s.tgt, s.gt, cloud_resolution(s.src));
    const Mask lb = label_inliers(s.corrs, moved, s.tgt, s.gt * motion.inverse(), cloud_resolution(moved));
    const EvalReport ra = score(classify(model.model, a), la);
    const EvalReport rb = score(classify(model.model, b), lb);
    for (auto [x, y] : {std::pair{ra.precision, rb.precision}, {ra.recall, rb.recall}, {ra.f_paper, rb.f_paper}}) {
      if (fmt("%.4f", x) != fmt("%.4f", y)) identical = false;
    }
  }
  return {worst <= 1e-6 && identical,
          "max |dCF|=" + fmt("%.3g", worst) + ", P/R/F identical to 4dp: " + (identical ? "yes" : "no")};
}

// --- 2 ----------------------------------------------------------------------

Outcome gradient_correctness() {
  std::mt19937_64 rng(7);
  double worst_fl = 0.0, worst_ce = 0.0;
  const int draws = 100;
  for (int i = 0; i < draws; ++i) {
    worst_fl = std::max(worst_fl, testing::gradient_check(rng, LossConfig{LossKind::kFocal}).relative_error);
    worst_ce = std::max(worst_ce, testing::gradient_check(rng, LossConfig{LossKind::kCrossEntropy}).relative_error);
  }
  return {worst_fl <= 1e-4 && worst_ce <= 1e-4,
          std::to_string(draws) + " draws per loss, max rel err focal=" + fmt("%.2e", worst_fl) +
              " ce=" + fmt("%.2e", worst_ce)};
}

// --- 3 and 5 share the ratio-0.1 scenes --------------------------------------

struct QualityData {
  std::vector<SceneData> train;
  std::vector<SceneData> test;
};

Outcome grouping_quality(const QualityData& data) {
  TrainConfig cfg;
  cfg.seed = 11;
  const TrainResult r = train_on(data.train, kDefaultCfDim, cfg);
  const AggregateReport cf = evaluate_cf(r.model, data.test, kDefaultCfDim, "cf");

  std::vector<EvalReport> gc, ss, nnsr, ransac;
  for (const auto& s : data.test) {
    const auto& sc = s.scene;
    gc.push_back(score(group_gc(sc.corrs, sc.src, sc.tgt, CompatParams::defaults_for(sc.pr)), s.labels));
    ss.push_back(score(group_ss(sc.corrs, 0.7), s.labels));
    nnsr.push_back(score(group_nnsr(sc.corrs, 0.7), s.labels));
    RansacParams rp;
    rp.inlier_dist = kDefaultInlierMultiplier * sc.pr.pr;
    rp.seed = 3;
    ransac.push_back(score(group_ransac(sc.corrs, sc.src, sc.tgt, rp).grouping, s.labels));
  }
  const AggregateReport agc = aggregate(gc, "gc");
  const AggregateReport ass = aggregate(ss, "ss");
  const AggregateReport annsr = aggregate(nnsr, "nnsr");
  const AggregateReport aransac = aggregate(ransac, "ransac");
  std::cout << "  [3] " << summary(cf) << " | " << summary(agc) << " | " << summary(ass) << " | "
            << summary(annsr) << " | " << summary(aransac) << '\n';
  const bool pass = cf.mean_precision >= 0.80 && cf.mean_recall >= 0.40 &&
                    cf.mean_precision > agc.mean_precision && cf.mean_precision > ass.mean_precision;
  return {pass, "CF P=" + fmt("%.4f", cf.mean_precision) + " R=" + fmt("%.4f", cf.mean_recall) +
                    ", GC P=" + fmt("%.4f", agc.mean_precision) + ", SS P=" + fmt("%.4f", ass.mean_precision)};
}

Outcome n_ablation(const QualityData& data, const fs::path& csv) {
  std::vector<EvalReport> rows;
  bool ok = true;
  std::string detail;
  for (std::size_t n : {10u, 20u, 50u, 100u}) {
    TrainConfig cfg;
    cfg.seed = 11;
    TrainResult r;
    try {
      r = train_on(data.train, n, cfg);
    } catch (const Error& e) {
      ok = false;
      detail += " N=" + std::to_string(n) + " failed(" + e.what() + ")";
      continue;
    }
    const AggregateReport a = evaluate_cf(r.model, data.test, n, "cf_N" + std::to_string(n));
    EvalReport row = a.pooled;
    row.method = a.method;
    row.precision = a.mean_precision;
    row.recall = a.mean_recall;
    row.f_paper = a.mean_f_paper;
    row.f1 = a.mean_f1;
    rows.push_back(row);
    const bool finite = std::isfinite(row.precision) && std::isfinite(row.recall) && std::isfinite(row.f_paper);
    const bool in_range = row.f_paper > 0.0 && row.f_paper <= 0.5;
    ok = ok && finite && in_range && loss_decreased(r);
    detail += " N=" + std::to_string(n) + ":F=" + fmt("%.4f", row.f_paper) + ",plateau@" + epochs_text(r);
  }
  write_report_csv(csv, rows);
  return {ok, "csv=" + csv.string() + ";" + detail};
}

// --- 4 ----------------------------------------------------------------------

Outcome loss_regimes() {
  const double ratio = 1.0 / 26.0;  // about 1 inlier per 25 outliers
  const auto train_scenes = make_scenes(3000, 30, ratio);
  const auto test_scenes = make_scenes(4000, 10, ratio);

  TrainConfig fl_raw;
  fl_raw.seed = 21;
  TrainConfig fl_bal = fl_raw;
  fl_bal.neg_pos_ratio = 1.0;
  TrainConfig ce_bal = fl_bal;
  ce_bal.loss.kind = LossKind::kCrossEntropy;

  const TrainResult r_raw = train_on(train_scenes, kDefaultCfDim, fl_raw);
  const TrainResult r_bal = train_on(train_scenes, kDefaultCfDim, fl_bal);
  const TrainResult r_ce = train_on(train_scenes, kDefaultCfDim, ce_bal);
  const AggregateReport a_raw = evaluate_cf(r_raw.model, test_scenes, kDefaultCfDim, "FL(raw)");
  const AggregateReport a_bal = evaluate_cf(r_bal.model, test_scenes, kDefaultCfDim, "FL(1:1)");
  const AggregateReport a_ce = evaluate_cf(r_ce.model, test_scenes, kDefaultCfDim, "CE(1:1)");
  std::cout << "  [4] " << summary(a_raw) << " | " << summary(a_bal) << " | " << summary(a_ce) << '\n';
  std::cout << "  [4] loss FL(raw) " << r_raw.loss_history.front() << " -> " << r_raw.loss_history.back()
            << ", CE(1:1) " << r_ce.loss_history.front() << " -> " << r_ce.loss_history.back()
            << ", plateau epochs raw/bal/ce " << epochs_text(r_raw) << "/" << epochs_text(r_bal) << "/"
            << epochs_text(r_ce) << '\n';

  const bool raw_decreased = loss_decreased(r_raw);
  const bool ce_converged = loss_decreased(r_ce);
  const double gap = a_raw.mean_precision - a_bal.mean_precision;
  const bool precision_ok = gap >= -0.05;
  return {raw_decreased && ce_converged && precision_ok,
          "FL(raw) loss decreased=" + std::string(raw_decreased ? "yes" : "no") + ", P_raw=" +
              fmt("%.4f", a_raw.mean_precision) + " P_1:1=" + fmt("%.4f", a_bal.mean_precision) +
              " (P_raw - P_1:1 = " + fmt("%+.4f", gap) + ", need >= -0.05; |gap| <= 0.05: " +
              (std::abs(gap) <= 0.05 ? "yes" : "no") + "), CE(1:1) converged=" +
              (ce_converged ? "yes" : "no")};
}

// --- 6 ----------------------------------------------------------------------

Outcome oracle_equivalences() {
  std::mt19937_64 rng(6);
  int cf_bad = 0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 2 + rng() % 199;
    const std::size_t inl = rng() % (d + 1);
    auto s = testing::exact_scene(rng, 400, inl, d - inl);
    CompatParams p = CompatParams::defaults_for(cloud_resolution(s.src));
    p.mode = static_cast<ConstraintMode>(k % 3);
    const std::size_t n = 1 + rng() % 120;
    const FeatureMatrix ref = testing::brute_cf(s.corrs, s.src, s.tgt, p, n);
    const FeatureMatrix got = extract_cf(s.corrs, s.src, s.tgt, p, n, 1 + k % 4);
    if (!(got.array() == ref.array()).all()) ++cf_bad;
  }
  double pr_worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + rng() % 1999;
    const PointCloud c = testing::random_cloud(rng, n, 1.0 + k, false);
    pr_worst = std::max(pr_worst, std::abs(cloud_resolution(c).pr - testing::brute_resolution(c)));
  }
  double kabsch_worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PointCloud c = testing::random_cloud(rng, 3 + rng() % 100, 1.0, false);
    const RigidTransform gt = random_rigid_transform(rng, 5.0);
    const RigidTransform est = estimate_rigid_transform(c.points, apply_transform(c, gt).points);
    kabsch_worst = std::max({kabsch_worst, (est.rotation - gt.rotation).cwiseAbs().maxCoeff(),
                             (est.translation - gt.translation).cwiseAbs().maxCoeff()});
  }
  return {cf_bad == 0 && pr_worst <= 1e-12 && kabsch_worst <= 1e-9,
          "CF mismatches " + std::to_string(cf_bad) + "/50, resolution max err " + fmt("%.2e", pr_worst) +
              ", rigid fit max err " + fmt("%.2e", kabsch_worst)};
}

// --- 7 ----------------------------------------------------------------------

Outcome evaluation_arithmetic() {
  Mask kept(30, false), labels(30, false);
  for (int i = 0; i < 10; ++i) kept[static_cast<std::size_t>(i)] = true;
  for (int i = 3; i < 17; ++i) labels[static_cast<std::size_t>(i)] = true;
  const EvalReport r = score(kept, labels);
  const bool pass = std::abs(r.precision - 0.7) <= 1e-6 && std::abs(r.recall - 0.5) <= 1e-6 &&
                    std::abs(r.f_paper - 0.291667) <= 1e-6 && std::abs(r.f1 - 0.583333) <= 1e-6;
  return {pass, "P=" + fmt("%.6f", r.precision) + " R=" + fmt("%.6f", r.recall) + " f_paper=" +
                    fmt("%.6f", r.f_paper) + " f1=" + fmt("%.6f", r.f1)};
}

// --- 8 ----------------------------------------------------------------------

int quiet_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cfgroup");
  std::ostringstream sink;
  auto* old_out = std::cout.rdbuf(sink.rdbuf());
  auto* old_err = std::cerr.rdbuf(sink.rdbuf());
  const int rc = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return rc;
}

Outcome cli_determinism(const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const auto p = [&](const std::string& name) { return (work / name).string(); };
  std::vector<std::string> failures;
  int checked = 0;

  // Each entry: a command template with {T} for the thread count, {R} for the
  // run tag, and the primary outputs to compare.
  struct Step {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> outputs;
    bool threaded;
  };
  const std::vector<Step> steps{
      {"synth", {"synth", "--out", p("scene{R}"), "--n-corrs", "500", "--inlier-ratio", "0.1", "--seed", "7",
                 "--noise", "0.3", "--noise-units", "pr"},
       {"scene{R}/src.ply", "scene{R}/tgt.ply", "scene{R}/corrs.txt", "scene{R}/gt.txt"}, false},
      {"extract", {"extract", "--src", p("scene1/src.ply"), "--tgt", p("scene1/tgt.ply"), "--corrs",
                   p("scene1/corrs.txt"), "--out", p("f{R}.csv"), "--threads", "{T}"},
       {"f{R}.csv"}, true},
      {"train", {"train", "--features", p("f1.csv"), "--label-corrs", p("scene1/corrs.txt"), "--epochs", "10",
                 "--batch", "64", "--neg-pos-ratio", "3", "--seed", "5", "--out", p("m{R}.cfmlp")},
       {"m{R}.cfmlp", "m{R}.cfmlp.loss.csv"}, false},
      {"classify", {"classify", "--model", p("m1.cfmlp"), "--features", p("f1.csv"), "--out-mask",
                    p("cls{R}.txt"), "--threads", "{T}"},
       {"cls{R}.txt", "cls{R}.txt.probs.csv"}, true},
      {"baseline-ss", {"baseline", "--method", "ss", "--corrs", p("scene1/corrs.txt"), "--out-mask", p("ss{R}.txt"),
                       "--threshold", "0.6", "--threads", "{T}"},
       {"ss{R}.txt"}, true},
      {"baseline-nnsr", {"baseline", "--method", "nnsr", "--corrs", p("scene1/corrs.txt"), "--out-mask",
                         p("nnsr{R}.txt"), "--threads", "{T}"},
       {"nnsr{R}.txt"}, true},
      {"baseline-gc", {"baseline", "--method", "gc", "--src", p("scene1/src.ply"), "--tgt", p("scene1/tgt.ply"),
                       "--corrs", p("scene1/corrs.txt"), "--out-mask", p("gc{R}.txt"), "--threads", "{T}"},
       {"gc{R}.txt"}, true},
      {"baseline-ransac", {"baseline", "--method", "ransac", "--src", p("scene1/src.ply"), "--tgt",
                           p("scene1/tgt.ply"), "--corrs", p("scene1/corrs.txt"), "--out-mask", p("rs{R}.txt"),
                           "--out-transform", p("rs{R}.T.txt"), "--seed", "9", "--threads", "{T}"},
       {"rs{R}.txt", "rs{R}.T.txt"}, true},
      {"evaluate", {"evaluate", "--mask", p("cls1.txt"), "--corrs", p("scene1/corrs.txt"), "--src",
                    p("scene1/src.ply"), "--tgt", p("scene1/tgt.ply"), "--gt", p("scene1/gt.txt"), "--out-report",
                    p("ev{R}.txt"), "--out-csv", p("ev{R}.csv")},
       {"ev{R}.txt", "ev{R}.csv"}, false},
      {"register", {"register", "--src", p("scene1/src.ply"), "--tgt", p("scene1/tgt.ply"), "--corrs",
                    p("scene1/corrs.txt"), "--mask", p("rs1.txt"), "--out", p("reg{R}.txt")},
       {"reg{R}.txt"}, false},
  };
  auto subst = [](std::string s, int run, unsigned threads) {
    for (auto [key, val] : {std::pair<std::string, std::string>{"{R}", std::to_string(run)},
                            {"{T}", std::to_string(threads)}}) {
      for (std::size_t at; (at = s.find(key)) != std::string::npos;) s.replace(at, key.size(), val);
    }
    return s;
  };
  for (const auto& step : steps) {
    for (int run = 1; run <= 2; ++run) {
      const unsigned threads = step.threaded ? (run == 1 ? 1u : 4u) : 1u;
      std::vector<std::string> args;
      for (const auto& a : step.args) args.push_back(subst(a, run, threads));
      if (const int rc = quiet_cli(args); rc != kExitOk) {
        failures.push_back(step.name + " exit " + std::to_string(rc));
      }
    }
    for (const auto& o : step.outputs) {
      ++checked;
      const auto a = testing::read_bytes(work / subst(o, 1, 1));
      const auto b = testing::read_bytes(work / subst(o, 2, 4));
      if (a.empty() || a != b) failures.push_back(step.name + ":" + subst(o, 1, 1));
    }
  }
  std::string detail = std::to_string(steps.size()) + " subcommand runs, " + std::to_string(checked) +
                       " primary outputs compared (threads 1 vs 4 where applicable)";
  for (const auto& f : failures) detail += "; differs/failed: " + f;
  return {failures.empty(), detail};
}

// --- 9 ----------------------------------------------------------------------

Outcome format_robustness(const fs::path& work) {
  const fs::path fixtures = fs::path(CFGROUP_FIXTURE_DIR);
  const auto corpus = testing::load_malformed_fixtures(fixtures / "malformed");
  std::vector<std::string> bad;
  for (const auto& f : corpus) {
    const std::string got = testing::parse_outcome(fixtures / "malformed", f);
    if (got != f.expected_code) bad.push_back(f.file + " gave " + got);
  }

  // Prefix and byte-flip mutations of the valid samples must fail cleanly.
  std::mt19937_64 rng(9);
  std::size_t mutants = 0;
  fs::create_directories(work);
  const std::vector<std::pair<std::string, std::string>> seeds{{"min_ascii.ply", "ply"},
                                                               {"normals_binary.ply", "ply"},
                                                               {"face_first.ply", "ply"},
                                                               {"corrs.txt", "corrs"},
                                                               {"identity.txt", "transform"}};
  for (const auto& [file, kind] : seeds) {
    const std::string bytes = testing::read_bytes(fixtures / "valid" / file);
    for (int m = 0; m < 200; ++m) {
      std::string mutated = bytes;
      if (m % 2 == 0) {
        mutated.resize(rng() % (bytes.size() + 1));
      } else {
        for (int flips = 0; flips < 3; ++flips) mutated[rng() % mutated.size()] = static_cast<char>(rng() & 0xff);
      }
      testing::write_text(work / "mutant", mutated);
      const std::string got = testing::parse_outcome(work, {"mutant", kind, ""});
      if (got.rfind("crash:", 0) == 0) bad.push_back(file + " mutant " + std::to_string(m) + " " + got);
      ++mutants;
    }
  }
  std::string detail = std::to_string(corpus.size()) + " malformed fixtures, " + std::to_string(mutants) +
                       " mutants";
  for (const auto& b : bad) detail += "; " + b;
  return {bad.empty() && corpus.size() >= 20, detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "cfgroup_acceptance";
  fs::path csv;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--work-dir") {
      work = argv[i + 1];
    } else if (flag == "--csv") {
      csv = argv[i + 1];
    } else {
      std::cerr << "usage: cfgroup_acceptance [--work-dir DIR] [--csv FILE]\n";
      return 2;
    }
  }
  fs::create_directories(work);
  if (csv.empty()) csv = work / "n_ablation.csv";

  int failed = 0;
  auto report = [&](int id, const char* title, double limit_s, auto&& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double took = seconds_since(t0);
    const bool pass = o.pass && took <= limit_s;
    if (!pass) ++failed;
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << title << "  ["
              << o.detail << "; " << fmt("%.1f", took) << "s of " << fmt("%.0f", limit_s) << "s]"
              << std::endl;
  };

  const auto t0 = Clock::now();
  QualityData quality;
  quality.train = make_scenes(1000, 30, 0.1);
  quality.test = make_scenes(2000, 10, 0.1);
  const double scene_time = seconds_since(t0);
  std::cout << "  generated 40 scenes at inlier ratio 0.1 in " << fmt("%.1f", scene_time) << "s" << std::endl;

  report(1, "rotation invariance", 60, rotation_invariance);
  report(2, "gradient correctness", 30, gradient_correctness);
  report(3, "desk-scale grouping quality", 600 - scene_time, [&] { return grouping_quality(quality); });
  report(4, "loss-regime ordering at ~1:25", 600, loss_regimes);
  report(5, "N ablation", 900 - scene_time, [&] { return n_ablation(quality, csv); });
  report(6, "oracle equivalences", 300, oracle_equivalences);
  report(7, "evaluation arithmetic", 10, evaluation_arithmetic);
  report(8, "CLI determinism", 300, [&] { return cli_determinism(work / "cli"); });
  report(9, "format robustness", 60, [&] { return format_robustness(work / "fuzz"); });

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
