#include "cfgroup/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "cfgroup/error.hpp"
#include "cfgroup/parallel.hpp"

namespace cfgroup {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

std::size_t MlpModel::input_width() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> w;
  if (layers.empty()) return w;
  w.push_back(input_width());
  for (const auto& l : layers) w.push_back(static_cast<std::size_t>(l.weights.rows()));
  return w;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void MlpModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::kCorruption, "model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weights.rows() == 0 || l.weights.cols() == 0 || l.bias.size() != l.weights.rows()) {
      throw Error(ErrorCode::kCorruption, "layer " + std::to_string(i) + " has invalid shape");
    }
    if (i > 0 && l.weights.cols() != layers[i - 1].weights.rows()) {
      throw Error(ErrorCode::kCorruption,
                  "layer " + std::to_string(i) + " input width does not match previous output");
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw Error(ErrorCode::kCorruption, "layer " + std::to_string(i) + " has non-finite values");
    }
  }
  if (layers.back().weights.rows() != 2) {
    throw Error(ErrorCode::kCorruption, "output layer must have 2 neurons");
  }
}

bool MlpModel::operator==(const MlpModel& other) const {
  if (layers.size() != other.layers.size() || hidden_activation != other.hidden_activation ||
      seed != other.seed) {
    return false;
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
        a.bias.size() != b.bias.size() || a.weights != b.weights || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

MlpModel init_model(std::size_t n_input, std::uint64_t seed) {
  if (n_input < 1) throw Error(ErrorCode::kInvalidArgument, "model input width must be >= 1");
  std::vector<std::size_t> widths{n_input};
  widths.insert(widths.end(), kDefaultHiddenWidths.begin(), kDefaultHiddenWidths.end());
  widths.push_back(2);
  return init_model(widths, seed);
}

MlpModel init_model(std::span<const std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2 || widths.back() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "model widths must have >= 2 entries ending in 2");
  }
  if (std::find(widths.begin(), widths.end(), std::size_t{0}) != widths.end()) {
    throw Error(ErrorCode::kInvalidArgument, "model widths must all be >= 1");
  }
  MlpModel model;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(widths[i]);
    const auto out = static_cast<Eigen::Index>(widths[i + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

void softmax_rows(const Eigen::MatrixXd& logits, ProbMatrix& probs) {
  probs.resize(logits.rows(), 2);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = std::max(logits(r, 0), logits(r, 1));
    const double e0 = std::exp(logits(r, 0) - m);
    const double e1 = std::exp(logits(r, 1) - m);
    const double s = e0 + e1;
    probs(r, 0) = e0 / s;
    probs(r, 1) = e1 / s;
  }
}

// Activations of every layer (post-ReLU for hidden layers, raw logits last).
std::vector<Eigen::MatrixXd> run_layers(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != model.input_width()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature width " + std::to_string(inputs.cols()) +
                    " does not match model input width " + std::to_string(model.input_width()));
  }
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.layers.size());
  const Eigen::MatrixXd* prev = &inputs;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    Eigen::MatrixXd z = (*prev) * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    if (i + 1 < model.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
    prev = &acts.back();
  }
  return acts;
}

double alpha_weight(const LossConfig& config, bool gt_label) {
  if (config.kind == LossKind::kCrossEntropy) return 1.0;
  return gt_label ? config.focal_alpha : 1.0 - config.focal_alpha;
}

double loss_from_true_prob(const LossConfig& config, double prob_true, bool gt_label) {
  const double p = std::clamp(prob_true, kProbEpsilon, 1.0 - kProbEpsilon);
  if (config.kind == LossKind::kCrossEntropy) return -std::log(p);
  return -alpha_weight(config, gt_label) * std::pow(1.0 - p, config.focal_gamma) * std::log(p);
}

}  // namespace

ProbMatrix forward_probabilities(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  const auto acts = run_layers(model, inputs);
  ProbMatrix probs;
  softmax_rows(acts.back(), probs);
  return probs;
}

Prediction forward(const MlpModel& model, std::span<const double> feature, double threshold) {
  const Eigen::MatrixXd input =
      Eigen::Map<const Eigen::RowVectorXd>(feature.data(), static_cast<Eigen::Index>(feature.size()));
  const auto probs = forward_probabilities(model, input);
  Prediction p;
  p.prob_inlier = probs(0, 1);
  p.label = p.prob_inlier >= threshold;
  return p;
}

std::vector<double> predict_proba(const MlpModel& model, const FeatureMatrix& features,
                                  unsigned threads) {
  if (static_cast<std::size_t>(features.cols()) != model.input_width()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature width " + std::to_string(features.cols()) +
                    " does not match model input width " + std::to_string(model.input_width()));
  }
  // Fixed chunk boundaries keep results independent of the thread count.
  constexpr Eigen::Index kChunk = 256;
  const Eigen::Index rows = features.rows();
  const auto chunks = static_cast<std::size_t>((rows + kChunk - 1) / kChunk);
  std::vector<double> out(static_cast<std::size_t>(rows));
  parallel_for(chunks, threads, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
    const Eigen::Index n = std::min(kChunk, rows - begin);
    const Eigen::MatrixXd block = features.middleRows(begin, n);
    const auto probs = forward_probabilities(model, block);
    for (Eigen::Index r = 0; r < n; ++r) out[static_cast<std::size_t>(begin + r)] = probs(r, 1);
  });
  return out;
}

const char* to_string(LossKind kind) noexcept {
  return kind == LossKind::kFocal ? "focal" : "ce";
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "focal" || text == "fl") return LossKind::kFocal;
  if (text == "ce" || text == "cross_entropy" || text == "cross-entropy") {
    return LossKind::kCrossEntropy;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown loss '" + text + "' (expected focal or ce)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "momentum must be in [0, 1)");
  }
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (loss.kind == LossKind::kFocal &&
      (!(loss.focal_alpha > 0.0 && loss.focal_alpha < 1.0) || !(loss.focal_gamma >= 0.0))) {
    throw Error(ErrorCode::kInvalidArgument, "focal loss needs alpha in (0,1) and gamma >= 0");
  }
  if (neg_pos_ratio && !(*neg_pos_ratio > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "negative:positive ratio must be > 0");
  }
}

double loss(const LossConfig& config, double prob_inlier, bool gt_label) {
  return loss_from_true_prob(config, gt_label ? prob_inlier : 1.0 - prob_inlier, gt_label);
}

double loss_derivative_true_class(const LossConfig& config, double prob_true, bool gt_label) {
  if (prob_true < kProbEpsilon || prob_true > 1.0 - kProbEpsilon) return 0.0;
  const double p = prob_true;
  if (config.kind == LossKind::kCrossEntropy) return -1.0 / p;
  const double g = config.focal_gamma;
  const double q = 1.0 - p;
  const double modulating = std::pow(q, g);
  const double dmod = g == 0.0 ? 0.0 : -g * std::pow(q, g - 1.0);
  return -alpha_weight(config, gt_label) * (dmod * std::log(p) + modulating / p);
}

double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          std::span<const std::uint8_t> labels, const LossConfig& config,
                          Gradients& grads) {
  const Eigen::Index batch = inputs.rows();
  if (static_cast<std::size_t>(batch) != labels.size() || batch == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "inputs and labels differ in length");
  }
  const auto acts = run_layers(model, inputs);
  ProbMatrix probs;
  softmax_rows(acts.back(), probs);

  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  Eigen::MatrixXd delta(batch, 2);
  for (Eigen::Index r = 0; r < batch; ++r) {
    const bool positive = labels[static_cast<std::size_t>(r)] != 0;
    const Eigen::Index t = positive ? 1 : 0;
    const double pt = probs(r, t);
    total += loss_from_true_prob(config, pt, positive);
    // d p_t / d z_t = p_t (1 - p_t), d p_t / d z_other = -p_t (1 - p_t).
    const double g = loss_derivative_true_class(config, pt, positive) * pt * (1.0 - pt) * inv_batch;
    delta(r, t) = g;
    delta(r, 1 - t) = -g;
  }

  grads.layers.resize(model.layers.size());
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const Eigen::MatrixXd& prev = li == 0 ? inputs : acts[li - 1];
    grads.layers[li].weights = delta.transpose() * prev;
    grads.layers[li].bias = delta.colwise().sum().transpose();
    if (li > 0) {
      Eigen::MatrixXd back = delta * model.layers[li].weights;
      delta = back.cwiseProduct((acts[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return total * inv_batch;
}

double mean_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                 std::span<const std::uint8_t> labels, const LossConfig& config) {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "inputs and labels differ in length");
  }
  const auto probs = forward_probabilities(model, inputs);
  double total = 0.0;
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    total += loss(config, probs(r, 1), labels[static_cast<std::size_t>(r)] != 0);
  }
  return inputs.rows() == 0 ? 0.0 : total / static_cast<double>(inputs.rows());
}

TrainResult train(MlpModel model, const FeatureMatrix& features,
                  std::span<const std::uint8_t> labels, const TrainConfig& config) {
  config.validate();
  model.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature rows (" + std::to_string(n) +
                                                   ") and labels (" +
                                                   std::to_string(labels.size()) + ") differ");
  }
  if (static_cast<std::size_t>(features.cols()) != model.input_width()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature width does not match model input width");
  }
  if (n < config.batch_size) {
    throw Error(ErrorCode::kInvalidArgument, "fewer samples than the batch size");
  }
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < n; ++i) (labels[i] ? positives : negatives).push_back(i);
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorCode::kSingleClass, "training data must contain both inliers and outliers");
  }

  std::size_t negatives_per_epoch = negatives.size();
  if (config.neg_pos_ratio) {
    const double wanted = std::round(*config.neg_pos_ratio * static_cast<double>(positives.size()));
    negatives_per_epoch = std::clamp<std::size_t>(static_cast<std::size_t>(wanted), 1,
                                                  negatives.size());
  }

  TrainResult result;
  const Eigen::MatrixXd all = features;
  result.loss_history.push_back(mean_loss(model, all, labels, config.loss));

  std::vector<DenseLayer> velocity;
  for (const auto& l : model.layers) {
    velocity.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }

  std::mt19937_64 rng(config.seed);
  Gradients grads;
  std::vector<std::size_t> order;
  std::vector<std::uint8_t> batch_labels;
  Eigen::MatrixXd batch_inputs;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order = positives;
    if (negatives_per_epoch < negatives.size()) {
      std::vector<std::size_t> pool = negatives;
      std::shuffle(pool.begin(), pool.end(), rng);
      order.insert(order.end(), pool.begin(),
                   pool.begin() + static_cast<std::ptrdiff_t>(negatives_per_epoch));
    } else {
      order.insert(order.end(), negatives.begin(), negatives.end());
    }
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - begin);
      batch_inputs.resize(static_cast<Eigen::Index>(count), features.cols());
      batch_labels.resize(count);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t idx = order[begin + r];
        batch_inputs.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(idx));
        batch_labels[r] = labels[idx];
      }
      const double batch_loss =
          loss_and_gradients(model, batch_inputs, batch_labels, config.loss, grads);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kDivergence,
                    "loss became non-finite in epoch " + std::to_string(epoch));
      }
      epoch_total += batch_loss * static_cast<double>(count);
      for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto& v = velocity[li];
        v.weights = config.momentum * v.weights - config.learning_rate * grads.layers[li].weights;
        v.bias = config.momentum * v.bias - config.learning_rate * grads.layers[li].bias;
        model.layers[li].weights += v.weights;
        model.layers[li].bias += v.bias;
      }
    }
    const double epoch_loss = epoch_total / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !model.layers.back().weights.allFinite()) {
      throw Error(ErrorCode::kDivergence, "training diverged in epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);

    constexpr std::size_t kPlateauWindow = 5;
    constexpr double kPlateauTol = 1e-4;
    if (!result.converged_epoch && epoch >= kPlateauWindow) {
      const double before = result.loss_history[epoch - kPlateauWindow];
      const double gain = before == 0.0 ? 0.0 : (before - epoch_loss) / std::abs(before);
      if (gain < kPlateauTol) result.converged_epoch = epoch;
    }
  }
  result.model = std::move(model);
  return result;
}

namespace {

constexpr char kMagic[5] = {'C', 'F', 'M', 'L', 'P'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw Error(ErrorCode::kCorruption, std::string("model file truncated while reading ") +
                                              what + " at byte " + std::to_string(pos_));
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const MlpModel& model) {
  model.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.hidden_activation));
  put<std::uint64_t>(out, model.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.cols()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put<double>(out, l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put<double>(out, l.bias(r));
  }
  return out;
}

MlpModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kCorruption, "missing CFMLP magic");
  }
  Reader in(bytes.subspan(sizeof(kMagic)));
  const auto version = in.get<std::uint32_t>("format version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "model format version " + std::to_string(version) +
                                                 ", this build reads version " +
                                                 std::to_string(kModelFormatVersion));
  }
  MlpModel model;
  const auto activation = in.get<std::uint32_t>("activation");
  if (activation != static_cast<std::uint32_t>(Activation::kRelu)) {
    throw Error(ErrorCode::kCorruption, "unknown activation code " + std::to_string(activation));
  }
  model.hidden_activation = static_cast<Activation>(activation);
  model.seed = in.get<std::uint64_t>("seed");
  const auto layer_count = in.get<std::uint32_t>("layer count");
  if (layer_count == 0 || layer_count > 1024) {
    throw Error(ErrorCode::kCorruption, "implausible layer count " + std::to_string(layer_count));
  }
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    const auto rows = in.get<std::uint32_t>("layer rows");
    const auto cols = in.get<std::uint32_t>("layer cols");
    const std::uint64_t values = (static_cast<std::uint64_t>(rows) * cols + rows);
    if (rows == 0 || cols == 0 || values * sizeof(double) > in.remaining()) {
      throw Error(ErrorCode::kCorruption, "layer " + std::to_string(li) + " shape " +
                                              std::to_string(rows) + "x" + std::to_string(cols) +
                                              " inconsistent with file size");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = in.get<double>("weights");
    }
    for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = in.get<double>("bias");
    model.layers.push_back(std::move(layer));
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::kCorruption,
                std::to_string(in.remaining()) + " trailing bytes after the last layer");
  }
  model.validate();
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model file '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cfgroup
