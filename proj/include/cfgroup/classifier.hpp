#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfgroup/compatibility.hpp"

namespace cfgroup {

enum class Activation : std::uint32_t { kRelu = 0 };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Fully connected classifier. Hidden layers apply affine + ReLU; the last
/// layer produces two logits (index 0 = outlier, 1 = inlier) fed to softmax.
struct MlpModel {
  std::vector<DenseLayer> layers;
  Activation hidden_activation = Activation::kRelu;
  std::uint64_t seed = 0;

  std::size_t input_width() const;
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;
  /// Throws kCorruption when shapes do not chain or parameters are not finite.
  void validate() const;

  bool operator==(const MlpModel& other) const;
};

/// Hidden widths following the input layer.
inline const std::vector<std::size_t> kDefaultHiddenWidths{128, 128, 64, 32};

/// Widths [n_input, 128, 128, 64, 32, 2], He-uniform weights, zero biases.
MlpModel init_model(std::size_t n_input, std::uint64_t seed);
/// Arbitrary widths; the last width must be 2.
MlpModel init_model(std::span<const std::size_t> widths, std::uint64_t seed);

struct Prediction {
  double prob_inlier = 0.5;
  bool label = true;
};

inline constexpr double kDefaultThreshold = 0.5;

Prediction forward(const MlpModel& model, std::span<const double> feature,
                   double threshold = kDefaultThreshold);

/// Inlier probabilities for every row of `features`.
std::vector<double> predict_proba(const MlpModel& model, const FeatureMatrix& features,
                                  unsigned threads = 1);

/// Two-class softmax of the output logits: (prob_outlier, prob_inlier).
Eigen::Matrix<double, Eigen::Dynamic, 2> forward_probabilities(const MlpModel& model,
                                                                const Eigen::MatrixXd& inputs);

enum class LossKind { kFocal, kCrossEntropy };

const char* to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(const std::string& text);

inline constexpr double kProbEpsilon = 1e-7;

struct LossConfig {
  LossKind kind = LossKind::kFocal;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;  // weight of positives; negatives get 1 - alpha
};

struct TrainConfig {
  double learning_rate = 0.02;
  double momentum = 0.0;
  LossConfig loss;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  /// Negatives kept per positive each epoch; empty trains on the raw imbalance.
  std::optional<double> neg_pos_ratio;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-sample loss; probabilities are clamped to [1e-7, 1 - 1e-7].
double loss(const LossConfig& config, double prob_inlier, bool gt_label);

/// dLoss/d(prob of the true class), consistent with the clamping in loss().
double loss_derivative_true_class(const LossConfig& config, double prob_true, bool gt_label);

/// Gradients laid out like the model's layers.
struct Gradients {
  std::vector<DenseLayer> layers;
};

/// Mean loss over the rows of `inputs` (rows = samples) and its gradient.
double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          std::span<const std::uint8_t> labels, const LossConfig& config,
                          Gradients& grads);

double mean_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                 std::span<const std::uint8_t> labels, const LossConfig& config);

struct TrainResult {
  MlpModel model;
  /// Entry 0 is the loss of the initial model over the full training set;
  /// entry e >= 1 is the mean minibatch loss of epoch e.
  std::vector<double> loss_history;
  /// First epoch at which the relative improvement over the previous 5
  /// epochs fell below 1e-4.
  std::optional<std::size_t> converged_epoch;
};

/// Minibatch SGD. Deterministic for a fixed seed.
TrainResult train(MlpModel model, const FeatureMatrix& features,
                  std::span<const std::uint8_t> labels, const TrainConfig& config);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace cfgroup
