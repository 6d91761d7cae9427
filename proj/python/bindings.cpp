#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "cfgroup/baselines.hpp"
#include "cfgroup/classifier.hpp"
#include "cfgroup/compatibility.hpp"
#include "cfgroup/data_io.hpp"
#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"
#include "cfgroup/geometry.hpp"
#include "cfgroup/synth.hpp"

namespace py = pybind11;
using namespace cfgroup;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using IndexPairs = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Matrix4 = Eigen::Matrix4d;

PointCloud to_cloud(const Points& points, const std::optional<Points>& normals) {
  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) c.points.emplace_back(points.row(i).transpose());
  if (normals) {
    if (normals->rows() != points.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "normals and points differ in length");
    }
    for (Eigen::Index i = 0; i < normals->rows(); ++i) c.normals.emplace_back(normals->row(i).transpose());
  }
  return c;
}

Points to_array(const std::vector<Eigen::Vector3d>& v) {
  Points out(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  return out;
}

py::object normals_or_none(const PointCloud& c) {
  return c.has_normals() ? py::cast(to_array(c.normals)) : py::none();
}

CorrespondenceSet to_corrs(const IndexPairs& pairs, const std::optional<std::vector<double>>& similarity,
                           const std::optional<std::vector<double>>& ratio) {
  CorrespondenceSet out;
  for (Eigen::Index i = 0; i < pairs.rows(); ++i) {
    if (pairs(i, 0) < 0 || pairs(i, 1) < 0) {
      throw Error(ErrorCode::kIndexOutOfRange, "negative correspondence index in row " + std::to_string(i));
    }
    Correspondence c{static_cast<std::size_t>(pairs(i, 0)), static_cast<std::size_t>(pairs(i, 1))};
    const auto k = static_cast<std::size_t>(i);
    if (similarity) c.similarity = similarity->at(k);
    if (ratio) c.ratio = ratio->at(k);
    out.push_back(c);
  }
  return out;
}

IndexPairs pairs_of(const CorrespondenceSet& corrs) {
  IndexPairs out(static_cast<Eigen::Index>(corrs.size()), 2);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = static_cast<std::int64_t>(corrs[i].src_index);
    out(static_cast<Eigen::Index>(i), 1) = static_cast<std::int64_t>(corrs[i].tgt_index);
  }
  return out;
}

RigidTransform to_transform(const Matrix4& m) { return RigidTransform::from_matrix(m, kTransformFileTolerance); }

std::vector<bool> to_mask(const std::vector<bool>& v) { return v; }

std::vector<std::uint8_t> to_labels(const std::vector<bool>& v) { return {v.begin(), v.end()}; }

CompatParams make_params(const PointCloud& src, std::optional<double> alpha_dist, std::optional<double> alpha_ang,
                         const std::string& constraints) {
  CompatParams p = CompatParams::defaults_for(cloud_resolution(src));
  if (alpha_dist) p.alpha_dist = *alpha_dist;
  if (alpha_ang) p.alpha_ang = *alpha_ang;
  p.mode = parse_constraint_mode(constraints);
  return p;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["n_group"] = r.n_group;
  d["n_inlier_in_group"] = r.n_inlier_in_group;
  d["n_gt_inlier"] = r.n_gt_inlier;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f_paper"] = r.f_paper;
  d["f1"] = r.f1;
  d["empty_group"] = r.empty_group;
  d["no_gt_inliers"] = r.no_gt_inliers;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Correspondence grouping with compatibility features";
  m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;

  static py::exception<Error> error_type(m, "CfgroupError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "read_ply",
      [](const std::filesystem::path& path) {
        const PointCloud c = read_ply(path);
        return py::make_tuple(to_array(c.points), normals_or_none(c));
      },
      py::arg("path"), "Returns (points, normals or None).");
  m.def(
      "write_ply",
      [](const std::filesystem::path& path, const Points& points, const std::optional<Points>& normals,
         bool binary) {
        write_ply(to_cloud(points, normals), path, binary ? PlyFormat::kBinaryLittleEndian : PlyFormat::kAscii);
      },
      py::arg("path"), py::arg("points"), py::arg("normals") = py::none(), py::arg("binary") = false);

  m.def(
      "cloud_resolution", [](const Points& points) { return cloud_resolution(to_cloud(points, std::nullopt)).pr; },
      py::arg("points"));
  m.def(
      "estimate_normals",
      [](const Points& points, std::size_t k, unsigned threads) {
        return to_array(estimate_normals(to_cloud(points, std::nullopt), k, threads).normals);
      },
      py::arg("points"), py::arg("k") = kDefaultNormalNeighbors, py::arg("threads") = 1);
  m.def(
      "estimate_rigid_transform",
      [](const Points& src, const Points& tgt) {
        const PointCloud a = to_cloud(src, std::nullopt);
        const PointCloud b = to_cloud(tgt, std::nullopt);
        return estimate_rigid_transform(a.points, b.points).matrix();
      },
      py::arg("src"), py::arg("tgt"), "Least-squares rigid fit; returns a 4x4 matrix mapping src onto tgt.");

  m.def(
      "extract_cf",
      [](const Points& src, const std::optional<Points>& src_normals, const Points& tgt,
         const std::optional<Points>& tgt_normals, const IndexPairs& corrs, std::optional<double> alpha_dist,
         std::optional<double> alpha_ang, std::size_t n_dim, const std::string& constraints, unsigned threads) {
        const PointCloud s = to_cloud(src, src_normals);
        const PointCloud t = to_cloud(tgt, tgt_normals);
        py::gil_scoped_release release;
        return extract_cf(to_corrs(corrs, std::nullopt, std::nullopt), s, t,
                          make_params(s, alpha_dist, alpha_ang, constraints), n_dim, threads);
      },
      py::arg("src"), py::arg("src_normals"), py::arg("tgt"), py::arg("tgt_normals"), py::arg("corrs"),
      py::arg("alpha_dist") = py::none(), py::arg("alpha_ang") = py::none(), py::arg("n_dim") = kDefaultCfDim,
      py::arg("constraints") = "both", py::arg("threads") = 1);

  m.def(
      "synthesize",
      [](std::size_t n_points, const std::string& shape, std::size_t n_corrs, double inlier_ratio, double noise,
         bool noise_in_pr, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.n_points = n_points;
        cfg.shape = parse_synth_shape(shape);
        cfg.n_corrs = n_corrs;
        cfg.inlier_ratio = inlier_ratio;
        cfg.noise_sigma = noise;
        cfg.noise_in_pr = noise_in_pr;
        cfg.seed = seed;
        const ScenePair s = synthesize(cfg);
        std::vector<double> sim, ratio;
        std::vector<bool> labels;
        for (const auto& c : s.corrs) {
          sim.push_back(c.similarity.value_or(0.0));
          ratio.push_back(c.ratio.value_or(1.0));
          labels.push_back(c.gt_label.value_or(false));
        }
        py::dict d;
        d["src_points"] = to_array(s.src.points);
        d["src_normals"] = to_array(s.src.normals);
        d["tgt_points"] = to_array(s.tgt.points);
        d["tgt_normals"] = to_array(s.tgt.normals);
        d["corrs"] = pairs_of(s.corrs);
        d["similarity"] = sim;
        d["ratio"] = ratio;
        d["labels"] = labels;
        d["gt"] = s.gt.matrix();
        d["pr"] = s.pr.pr;
        return d;
      },
      py::arg("n_points") = 10000, py::arg("shape") = "random_blob", py::arg("n_corrs") = 500,
      py::arg("inlier_ratio") = 0.1, py::arg("noise") = 0.0, py::arg("noise_in_pr") = false, py::arg("seed") = 0);

  m.def(
      "label_inliers",
      [](const Points& src, const Points& tgt, const IndexPairs& corrs, const Matrix4& gt, double pr,
         double multiplier) {
        return label_inliers(to_corrs(corrs, std::nullopt, std::nullopt), to_cloud(src, std::nullopt),
                             to_cloud(tgt, std::nullopt), to_transform(gt), Resolution{pr}, multiplier);
      },
      py::arg("src"), py::arg("tgt"), py::arg("corrs"), py::arg("gt"), py::arg("pr"),
      py::arg("multiplier") = kDefaultInlierMultiplier);

  m.def(
      "score",
      [](const std::vector<bool>& kept, const std::vector<bool>& labels, const std::string& method) {
        return report_dict(score(to_mask(kept), to_mask(labels), method));
      },
      py::arg("kept"), py::arg("labels"), py::arg("method") = "");

  m.def(
      "group_ss", [](const std::vector<double>& sim, double threshold) {
        const IndexPairs none = IndexPairs::Zero(static_cast<Eigen::Index>(sim.size()), 2);
        return group_ss(to_corrs(none, sim, std::nullopt), threshold).kept;
      },
      py::arg("similarity"), py::arg("threshold"));
  m.def(
      "group_nnsr", [](const std::vector<double>& ratio, double threshold) {
        const IndexPairs none = IndexPairs::Zero(static_cast<Eigen::Index>(ratio.size()), 2);
        return group_nnsr(to_corrs(none, std::nullopt, ratio), threshold).kept;
      },
      py::arg("ratio"), py::arg("threshold"));
  m.def(
      "group_gc",
      [](const Points& src, const std::optional<Points>& src_normals, const Points& tgt,
         const std::optional<Points>& tgt_normals, const IndexPairs& corrs, double score_threshold,
         std::optional<double> alpha_dist, std::optional<double> alpha_ang, const std::string& constraints,
         unsigned threads) {
        const PointCloud s = to_cloud(src, src_normals);
        const PointCloud t = to_cloud(tgt, tgt_normals);
        return group_gc(to_corrs(corrs, std::nullopt, std::nullopt), s, t,
                        make_params(s, alpha_dist, alpha_ang, constraints), score_threshold, threads)
            .kept;
      },
      py::arg("src"), py::arg("src_normals"), py::arg("tgt"), py::arg("tgt_normals"), py::arg("corrs"),
      py::arg("score_threshold") = kDefaultGcThreshold, py::arg("alpha_dist") = py::none(),
      py::arg("alpha_ang") = py::none(), py::arg("constraints") = "both", py::arg("threads") = 1);
  m.def(
      "group_ransac",
      [](const Points& src, const Points& tgt, const IndexPairs& corrs, double inlier_dist, std::size_t iterations,
         std::uint64_t seed, unsigned threads) {
        RansacParams rp;
        rp.inlier_dist = inlier_dist;
        rp.iterations = iterations;
        rp.seed = seed;
        rp.threads = threads;
        const RansacResult r = group_ransac(to_corrs(corrs, std::nullopt, std::nullopt),
                                            to_cloud(src, std::nullopt), to_cloud(tgt, std::nullopt), rp);
        return py::make_tuple(r.grouping.kept, r.transform.matrix());
      },
      py::arg("src"), py::arg("tgt"), py::arg("corrs"), py::arg("inlier_dist"), py::arg("iterations") = 1000,
      py::arg("seed") = 0, py::arg("threads") = 1, "Returns (mask, 4x4 transform).");

  py::class_<MlpModel>(m, "Model")
      .def(py::init([](std::size_t n_input, std::uint64_t seed) { return init_model(n_input, seed); }),
           py::arg("n_input") = kDefaultCfDim, py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"))
      .def("save", [](const MlpModel& self, const std::filesystem::path& p) { save_model(self, p); }, py::arg("path"))
      .def_property_readonly("widths", &MlpModel::widths)
      .def_property_readonly("parameter_count", &MlpModel::parameter_count)
      .def_readonly("seed", &MlpModel::seed)
      .def(
          "predict_proba",
          [](const MlpModel& self, const FeatureMatrix& features, unsigned threads) {
            return predict_proba(self, features, threads);
          },
          py::arg("features"), py::arg("threads") = 1)
      .def(
          "train",
          [](MlpModel& self, const FeatureMatrix& features, const std::vector<bool>& labels, const std::string& loss,
             double lr, std::size_t epochs, std::size_t batch, std::optional<double> neg_pos_ratio, double gamma,
             double focal_alpha, double momentum, std::uint64_t seed) {
            TrainConfig cfg;
            cfg.loss.kind = parse_loss_kind(loss);
            cfg.learning_rate = lr;
            cfg.epochs = epochs;
            cfg.batch_size = batch;
            cfg.neg_pos_ratio = neg_pos_ratio;
            cfg.loss.focal_gamma = gamma;
            cfg.loss.focal_alpha = focal_alpha;
            cfg.momentum = momentum;
            cfg.seed = seed;
            const auto lab = to_labels(labels);
            TrainResult r;
            {
              py::gil_scoped_release release;
              r = train(self, features, lab, cfg);
            }
            self = std::move(r.model);
            return r.loss_history;
          },
          py::arg("features"), py::arg("labels"), py::arg("loss") = "focal", py::arg("lr") = 0.02,
          py::arg("epochs") = 100, py::arg("batch") = 256, py::arg("neg_pos_ratio") = py::none(),
          py::arg("gamma") = 2.0, py::arg("focal_alpha") = 0.25, py::arg("momentum") = 0.0, py::arg("seed") = 0,
          "Trains in place and returns the loss history.")
      .def("__eq__", [](const MlpModel& a, const MlpModel& b) { return a == b; });
}
