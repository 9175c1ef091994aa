#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <memory>
#include <string>
#include <vector>

#include "dockpilot/camera.hpp"
#include "dockpilot/data.hpp"
#include "dockpilot/geometry.hpp"

namespace dockpilot {

/// VGG-style stack: [conv3x3 -> ReLU -> maxpool2] per entry of conv_filters,
/// then ReLU+dropout fully connected layers of fc_hidden widths and a linear
/// output layer of output_dim units.
struct NetworkConfig {
  int input_side = 64;
  std::vector<int> conv_filters{8, 16, 32, 64};
  std::vector<int> fc_hidden{256, 64};
  double dropout_rate = 0.5;
  int output_dim = 4;

  void validate() const;
  int final_side() const;
  int flat_features() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Per-channel affine label scaling, fitted on the training split.
struct LabelNormalizer {
  std::array<double, 4> offset{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> scale{1.0, 1.0, 1.0, 1.0};

  /// x and y standardized; the sin/cos channels are left as-is.
  static LabelNormalizer fit(const std::vector<RelativePose>& labels);
  std::array<double, 4> normalize(const std::array<double, 4>& raw) const;
  std::array<double, 4> denormalize(const std::array<double, 4>& normalized) const;
};

/// (x, y, sin theta, cos theta) with x and y normalized.
std::array<double, 4> encode_label(const RelativePose& delta, const LabelNormalizer& norm);
RelativePose decode_label(const std::array<double, 4>& encoded, const LabelNormalizer& norm);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 5;
  double train_fraction = 0.8;

  void validate() const;
};

enum class Exec { parallel, serial_reference };

struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::vector<int> shape;
  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

template <typename T>
class BatchWorkspace;

/// Parameters live in one flat vector; ParamTensor views describe the layout.
template <typename T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }
  const ParamTensor& tensor(const std::string& name) const;
  std::span<T> view(const std::string& name);

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  template <typename U>
  Network<U> cast() const;

  /// images: batch x side x side in [0,1]; out: batch x output_dim.
  void forward(std::span<const T> images, std::size_t batch, bool training, std::uint64_t dropout_seed,
               std::span<T> out, Exec exec = Exec::parallel) const;

  /// Mean-squared error over batch and channels, and its exact gradient.
  double loss_and_gradient(std::span<const T> images, std::span<const T> targets, std::size_t batch, bool training,
                           std::uint64_t dropout_seed, std::span<T> grad, BatchWorkspace<T>& ws,
                           Exec exec = Exec::parallel) const;
  double loss_and_gradient(std::span<const T> images, std::span<const T> targets, std::size_t batch, bool training,
                           std::uint64_t dropout_seed, std::span<T> grad, Exec exec = Exec::parallel) const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  template <typename U>
  friend class Network;
  friend class BatchWorkspace<T>;

  NetworkConfig cfg_;
  std::vector<T> params_;
  std::vector<ParamTensor> tensors_;
  std::vector<std::size_t> conv_w_, conv_b_, fc_w_, fc_b_;  // offsets
};

template <typename T>
struct SampleScratch;  // activations of one sample

/// Gradient slots and activation buffers reused across batches. The slot
/// count is fixed, so a batch splits into the same contiguous sample runs
/// (summed in the same order) whatever the thread count.
template <typename T>
class BatchWorkspace {
 public:
  static constexpr std::size_t kSlots = 8;

  BatchWorkspace();
  ~BatchWorkspace();
  BatchWorkspace(BatchWorkspace&&) noexcept;
  BatchWorkspace& operator=(BatchWorkspace&&) noexcept;

  void prepare(const Network<T>& net, std::size_t batch);

 private:
  friend class Network<T>;
  std::vector<T> slots_;
  std::vector<double> sample_loss_;
  std::vector<std::unique_ptr<SampleScratch<T>>> scratch_;
  std::size_t batch_ = 0, params_ = 0, slot_count_ = 0;
};

template <typename T>
double mse_loss(std::span<const T> pred, std::span<const T> targets);

/// buffer = momentum * buffer + grad; param -= lr * buffer.
template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grad, std::span<T> momentum_buffer, const TrainConfig& cfg);

/// Bernoulli keep-mask scaled by 1/(1-rate), seeded per sample.
std::vector<float> dropout_mask(std::size_t n, double rate, std::uint64_t seed);

/// Images resized to the network side and encoded targets, in manifest order.
struct TensorSet {
  int side = 0;
  std::size_t count = 0;
  std::vector<float> images;
  std::vector<float> targets;  // count x 4
  std::vector<RelativePose> labels;

  std::span<const float> image(std::size_t i) const;
};

TensorSet load_tensors(const DatasetManifest& manifest, int side, const LabelNormalizer& norm);
std::vector<float> image_to_input(const GrayImage& img, int side);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  Network<float> best;
  Network<float> last;
  std::vector<float> momentum;
  LabelNormalizer normalizer;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const TensorSet& train_set, const TensorSet& val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& cfg, const LabelNormalizer& norm, const EpochCallback& on_epoch = {});
TrainResult train(const DatasetManifest& train_manifest, const DatasetManifest& val_manifest,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Inference-mode MSE over a whole tensor set.
double evaluate_loss(const Network<float>& net, const TensorSet& set, std::size_t batch = 64);
/// Raw network outputs, count x 4.
std::vector<float> predict_batch(const Network<float>& net, const TensorSet& set, std::size_t batch = 64);

std::string history_csv(const std::vector<EpochRecord>& history);

/// Trained estimator: image in, relative dock pose out.
class DockPoseEstimator {
 public:
  DockPoseEstimator(Network<float> net, LabelNormalizer norm);
  RelativePose predict(const GrayImage& img) const;
  RelativePose predict_input(std::span<const float> input) const;
  const Network<float>& network() const { return net_; }
  const LabelNormalizer& normalizer() const { return norm_; }

 private:
  Network<float> net_;
  LabelNormalizer norm_;
};

struct WeightFile {
  Network<float> net;
  LabelNormalizer normalizer;
  std::string config_hash;
};

/// "NDPEWGT1" magic, u64 LE header length, JSON header, then LE float32 params.
void save_weights(const std::filesystem::path& path, const Network<float>& net, const LabelNormalizer& norm,
                  const std::string& config_hash);
WeightFile load_weights(const std::filesystem::path& path);

}  // namespace dockpilot
