#include "dockpilot/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dockpilot/kernels.hpp"
#include "dockpilot/util.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dockpilot {

namespace {

int thread_index() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

// -- configuration -----------------------------------------------------------

void NetworkConfig::validate() const {
  if (input_side < 2 || input_side > 256) throw std::invalid_argument("network: input_side must be in [2, 256]");
  if (output_dim != 4) throw std::invalid_argument("network: output_dim is fixed at 4");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("network: dropout_rate must be in [0, 1)");
  for (int f : conv_filters)
    if (f < 1) throw std::invalid_argument("network: conv filter counts must be positive");
  for (int h : fc_hidden)
    if (h < 1) throw std::invalid_argument("network: fc widths must be positive");
  int side = input_side;
  for (std::size_t i = 0; i < conv_filters.size(); ++i) {
    if (side % 2 != 0) throw std::invalid_argument("network: input_side must stay even through every pool");
    side /= 2;
  }
  if (side < 1) throw std::invalid_argument("network: spatial size after pooling must be >= 1");
}

int NetworkConfig::final_side() const { return input_side >> conv_filters.size(); }

int NetworkConfig::flat_features() const {
  const int channels = conv_filters.empty() ? 1 : conv_filters.back();
  return channels * final_side() * final_side();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("training: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("training: momentum must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("training: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("training: epochs must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("training: train_fraction in (0,1)");
}

// -- labels ------------------------------------------------------------------

LabelNormalizer LabelNormalizer::fit(const std::vector<RelativePose>& labels) {
  LabelNormalizer n;
  if (labels.empty()) return n;
  const double count = static_cast<double>(labels.size());
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (const auto& l : labels) mean += c == 0 ? l.x() : l.y();
    mean /= count;
    double var = 0.0;
    for (const auto& l : labels) {
      const double d = (c == 0 ? l.x() : l.y()) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / count);
    n.offset[c] = mean;
    n.scale[c] = sd > 1e-9 ? sd : 1.0;
  }
  return n;
}

std::array<double, 4> LabelNormalizer::normalize(const std::array<double, 4>& raw) const {
  std::array<double, 4> out{};
  for (int c = 0; c < 4; ++c) out[c] = (raw[c] - offset[c]) / scale[c];
  return out;
}

std::array<double, 4> LabelNormalizer::denormalize(const std::array<double, 4>& normalized) const {
  std::array<double, 4> out{};
  for (int c = 0; c < 4; ++c) out[c] = normalized[c] * scale[c] + offset[c];
  return out;
}

std::array<double, 4> encode_label(const RelativePose& delta, const LabelNormalizer& norm) {
  return norm.normalize({delta.x(), delta.y(), std::sin(delta.theta()), std::cos(delta.theta())});
}

RelativePose decode_label(const std::array<double, 4>& encoded, const LabelNormalizer& norm) {
  const auto raw = norm.denormalize(encoded);
  return {raw[0], raw[1], std::atan2(raw[2], raw[3])};
}

std::vector<float> dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
  std::vector<float> mask(n, 1.0f);
  if (rate <= 0.0) return mask;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const float scale = static_cast<float>(1.0 / (1.0 - rate));
  for (auto& m : mask) m = keep(rng) ? scale : 0.0f;
  return mask;
}

// -- network -----------------------------------------------------------------

template <typename T>
Network<T>::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    tensors_.push_back({std::move(name), offset, size, std::move(shape)});
    offset += size;
    return tensors_.back().offset;
  };
  int in_ch = 1;
  for (std::size_t l = 0; l < cfg_.conv_filters.size(); ++l) {
    const int out_ch = cfg_.conv_filters[l];
    conv_w_.push_back(add("conv" + std::to_string(l) + ".weight", {out_ch, in_ch, 3, 3}));
    conv_b_.push_back(add("conv" + std::to_string(l) + ".bias", {out_ch}));
    in_ch = out_ch;
  }
  int in_features = cfg_.flat_features();
  std::vector<int> widths = cfg_.fc_hidden;
  widths.push_back(cfg_.output_dim);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    fc_w_.push_back(add("fc" + std::to_string(i) + ".weight", {widths[i], in_features}));
    fc_b_.push_back(add("fc" + std::to_string(i) + ".bias", {widths[i]}));
    in_features = widths[i];
  }
  params_.assign(offset, T(0));
}

template <typename T>
const ParamTensor& Network<T>::tensor(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw std::out_of_range("network has no tensor " + name);
}

template <typename T>
std::span<T> Network<T>::view(const std::string& name) {
  const auto& t = tensor(name);
  return std::span<T>(params_).subspan(t.offset, t.size);
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t last_weight = fc_w_.back();
  for (const auto& t : tensors_) {
    const bool is_bias = t.shape.size() == 1;
    T* p = params_.data() + t.offset;
    if (is_bias) {
      std::fill(p, p + t.size, T(0));
      continue;
    }
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < t.shape.size(); ++d) fan_in *= static_cast<std::size_t>(t.shape[d]);
    const double gain = t.offset == last_weight ? 1.0 : 2.0;  // linear output layer
    const double sd = std::sqrt(gain / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size; ++i) p[i] = static_cast<T>(sd * normal(rng));
  }
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.cfg_ = cfg_;
  out.tensors_ = tensors_;
  out.conv_w_ = conv_w_;
  out.conv_b_ = conv_b_;
  out.fc_w_ = fc_w_;
  out.fc_b_ = fc_b_;
  out.params_.assign(params_.begin(), params_.end());
  return out;
}

template <typename T>
struct SampleScratch {
  std::vector<std::vector<T>> conv_out, pool_out;
  std::vector<std::vector<std::int32_t>> pool_idx;
  std::vector<std::vector<T>> fc_h, fc_a;
  std::vector<std::vector<float>> fc_mask;
  std::vector<T> out;
  std::vector<T> g_conv, g_pool_a, g_pool_b, g_fc_a, g_fc_b;
  std::vector<T> cols;  // im2col scratch

  explicit SampleScratch(const NetworkConfig& cfg) {
    int side = cfg.input_side;
    std::size_t max_conv = 0, max_pool = 0, max_cols = 0;
    int in_ch = 1;
    for (int f : cfg.conv_filters) {
      max_cols = std::max(max_cols, 2 * kernels::conv3x3_scratch(in_ch, side));
      in_ch = f;
      const std::size_t conv_n = static_cast<std::size_t>(f) * side * side;
      const std::size_t pool_n = static_cast<std::size_t>(f) * (side / 2) * (side / 2);
      conv_out.emplace_back(conv_n);
      pool_out.emplace_back(pool_n);
      pool_idx.emplace_back(pool_n);
      max_conv = std::max(max_conv, conv_n);
      max_pool = std::max(max_pool, pool_n);
      side /= 2;
    }
    std::size_t max_fc = static_cast<std::size_t>(cfg.flat_features());
    for (int h : cfg.fc_hidden) {
      fc_h.emplace_back(h);
      fc_a.emplace_back(h);
      fc_mask.emplace_back(h, 1.0f);
      max_fc = std::max<std::size_t>(max_fc, h);
    }
    out.resize(cfg.output_dim);
    g_conv.resize(max_conv);
    cols.resize(max_cols);
    g_pool_a.resize(std::max(max_pool, static_cast<std::size_t>(cfg.input_side) * cfg.input_side));
    g_pool_b.resize(g_pool_a.size());
    g_fc_a.resize(max_fc);
    g_fc_b.resize(max_fc);
  }
};

namespace {

template <typename T>
const T* flat_input(const SampleScratch<T>& s, const T* image) {
  return s.pool_out.empty() ? image : s.pool_out.back().data();
}

}  // namespace

template <typename T>
class NetworkPass {
 public:
  NetworkPass(const NetworkConfig& cfg, const std::vector<T>& params, const std::vector<std::size_t>& conv_w,
              const std::vector<std::size_t>& conv_b, const std::vector<std::size_t>& fc_w,
              const std::vector<std::size_t>& fc_b)
      : cfg_(cfg), p_(params), conv_w_(conv_w), conv_b_(conv_b), fc_w_(fc_w), fc_b_(fc_b) {}

  void forward(SampleScratch<T>& s, const T* image, bool training, std::uint64_t mask_seed, Exec exec) const {
    const bool ref = exec == Exec::serial_reference;
    int side = cfg_.input_side;
    int in_ch = 1;
    const T* in = image;
    for (std::size_t l = 0; l < cfg_.conv_filters.size(); ++l) {
      const int out_ch = cfg_.conv_filters[l];
      T* co = s.conv_out[l].data();
      if (ref)
        kernels::reference::conv3x3_forward(in, in_ch, side, p_.data() + conv_w_[l], p_.data() + conv_b_[l], out_ch, co);
      else
        kernels::conv3x3_forward(in, in_ch, side, p_.data() + conv_w_[l], p_.data() + conv_b_[l], out_ch, co,
                                 s.cols.data());
      kernels::relu_inplace(co, s.conv_out[l].size());
      if (ref)
        kernels::reference::maxpool2_forward(co, out_ch, side, s.pool_out[l].data(), s.pool_idx[l].data());
      else
        kernels::maxpool2_forward(co, out_ch, side, s.pool_out[l].data(), s.pool_idx[l].data());
      in = s.pool_out[l].data();
      in_ch = out_ch;
      side /= 2;
    }
    const T* x = flat_input(s, image);
    int n_in = cfg_.flat_features();
    for (std::size_t i = 0; i < cfg_.fc_hidden.size(); ++i) {
      const int n_out = cfg_.fc_hidden[i];
      dense(x, n_in, n_out, i, s.fc_h[i].data(), ref);
      kernels::relu_inplace(s.fc_h[i].data(), s.fc_h[i].size());
      if (training && cfg_.dropout_rate > 0.0)
        s.fc_mask[i] = dropout_mask(n_out, cfg_.dropout_rate, seed_mix(mask_seed, i));
      else
        std::fill(s.fc_mask[i].begin(), s.fc_mask[i].end(), 1.0f);
      for (int k = 0; k < n_out; ++k) s.fc_a[i][k] = s.fc_h[i][k] * static_cast<T>(s.fc_mask[i][k]);
      x = s.fc_a[i].data();
      n_in = n_out;
    }
    dense(x, n_in, cfg_.output_dim, cfg_.fc_hidden.size(), s.out.data(), ref);
  }

  /// gy: dLoss/dOutput. grad: this sample's gradient slot (accumulated into).
  void backward(SampleScratch<T>& s, const T* image, const T* gy, T* grad, Exec exec) const {
    const bool ref = exec == Exec::serial_reference;
    const std::size_t n_hidden = cfg_.fc_hidden.size();
    // dense stack, last to first
    const T* g_out = gy;
    int n_out = cfg_.output_dim;
    T* g_cur = s.g_fc_a.data();
    T* g_next = s.g_fc_b.data();
    for (std::size_t layer = n_hidden + 1; layer-- > 0;) {
      const T* x = layer == 0 ? flat_input(s, image) : s.fc_a[layer - 1].data();
      const int n_in = layer == 0 ? cfg_.flat_features() : cfg_.fc_hidden[layer - 1];
      T* gx = layer == 0 ? s.g_pool_a.data() : g_cur;
      const bool need_gx = layer > 0 || !cfg_.conv_filters.empty();
      dense_back(x, g_out, n_in, n_out, layer, grad, need_gx ? gx : nullptr, ref);
      if (layer == 0) break;
      // through dropout and ReLU of hidden layer (layer - 1)
      const std::size_t h = layer - 1;
      for (int k = 0; k < n_in; ++k)
        gx[k] = s.fc_h[h][k] > T(0) ? gx[k] * static_cast<T>(s.fc_mask[h][k]) : T(0);
      g_out = gx;
      n_out = n_in;
      std::swap(g_cur, g_next);
    }
    // conv stack; g_pool_a holds dLoss/d(last pool output)
    T* g_pool = s.g_pool_a.data();
    T* g_prev = s.g_pool_b.data();
    for (std::size_t l = cfg_.conv_filters.size(); l-- > 0;) {
      const int out_ch = cfg_.conv_filters[l];
      const int side = cfg_.input_side >> l;
      const int in_ch = l == 0 ? 1 : cfg_.conv_filters[l - 1];
      const std::size_t conv_n = s.conv_out[l].size();
      std::fill(s.g_conv.begin(), s.g_conv.begin() + static_cast<std::ptrdiff_t>(conv_n), T(0));
      kernels::maxpool2_backward(g_pool, s.pool_idx[l].data(), s.pool_out[l].size(), s.g_conv.data());
      for (std::size_t i = 0; i < conv_n; ++i)
        if (!(s.conv_out[l][i] > T(0))) s.g_conv[i] = T(0);
      const T* in = l == 0 ? image : s.pool_out[l - 1].data();
      T* gin = nullptr;
      if (l > 0) {
        gin = g_prev;
        std::fill(gin, gin + s.pool_out[l - 1].size(), T(0));
      }
      T* gw = grad + conv_w_[l];
      T* gb = grad + conv_b_[l];
      const T* w = p_.data() + conv_w_[l];
      if (ref)
        kernels::reference::conv3x3_backward(in, in_ch, side, w, out_ch, s.g_conv.data(), gw, gb, gin);
      else
        kernels::conv3x3_backward(in, in_ch, side, w, out_ch, s.g_conv.data(), gw, gb, gin, s.cols.data());
      std::swap(g_pool, g_prev);
    }
  }

 private:
  void dense(const T* x, int n_in, int n_out, std::size_t layer, T* y, bool ref) const {
    const T* w = p_.data() + fc_w_[layer];
    const T* b = p_.data() + fc_b_[layer];
    if (ref)
      kernels::reference::dense_forward(w, b, x, n_in, n_out, y);
    else
      kernels::dense_forward(w, b, x, n_in, n_out, y);
  }
  void dense_back(const T* x, const T* gy, int n_in, int n_out, std::size_t layer, T* grad, T* gx, bool ref) const {
    const T* w = p_.data() + fc_w_[layer];
    T* gw = grad + fc_w_[layer];
    T* gb = grad + fc_b_[layer];
    if (ref)
      kernels::reference::dense_backward(w, x, gy, n_in, n_out, gw, gb, gx);
    else
      kernels::dense_backward(w, x, gy, n_in, n_out, gw, gb, gx);
  }

  const NetworkConfig& cfg_;
  const std::vector<T>& p_;
  const std::vector<std::size_t>&conv_w_, &conv_b_, &fc_w_, &fc_b_;
};

template <typename T>
void Network<T>::forward(std::span<const T> images, std::size_t batch, bool training, std::uint64_t dropout_seed,
                         std::span<T> out, Exec exec) const {
  const std::size_t plane = static_cast<std::size_t>(cfg_.input_side) * cfg_.input_side;
  if (images.size() != batch * plane) throw std::invalid_argument("forward: image batch has the wrong shape");
  if (out.size() != batch * static_cast<std::size_t>(cfg_.output_dim))
    throw std::invalid_argument("forward: output buffer has the wrong shape");
  const NetworkPass<T> pass(cfg_, params_, conv_w_, conv_b_, fc_w_, fc_b_);
  const auto n = static_cast<std::ptrdiff_t>(batch);
  if (exec == Exec::serial_reference) {
    SampleScratch<T> s(cfg_);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      pass.forward(s, images.data() + i * plane, training, seed_mix(dropout_seed, i), exec);
      std::copy(s.out.begin(), s.out.end(), out.begin() + i * cfg_.output_dim);
    }
    return;
  }
  std::vector<SampleScratch<T>> scratch(std::min<std::size_t>(max_threads(), std::max<std::size_t>(batch, 1)),
                                        SampleScratch<T>(cfg_));
#pragma omp parallel for schedule(static) if (batch > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    SampleScratch<T>& s = scratch[thread_index()];
    pass.forward(s, images.data() + i * plane, training, seed_mix(dropout_seed, i), exec);
    std::copy(s.out.begin(), s.out.end(), out.begin() + i * cfg_.output_dim);
  }
}

template <typename T>
BatchWorkspace<T>::BatchWorkspace() = default;
template <typename T>
BatchWorkspace<T>::~BatchWorkspace() = default;
template <typename T>
BatchWorkspace<T>::BatchWorkspace(BatchWorkspace&&) noexcept = default;
template <typename T>
BatchWorkspace<T>& BatchWorkspace<T>::operator=(BatchWorkspace&&) noexcept = default;

template <typename T>
void BatchWorkspace<T>::prepare(const Network<T>& net, std::size_t batch) {
  if (batch_ == batch && params_ == net.param_count() && !scratch_.empty()) return;
  batch_ = batch;
  params_ = net.param_count();
  slot_count_ = std::min(batch, kSlots);
  slots_.assign(slot_count_ * params_, T(0));
  sample_loss_.assign(batch, 0.0);
  scratch_.clear();
  for (std::size_t i = 0; i < slot_count_; ++i) scratch_.push_back(std::make_unique<SampleScratch<T>>(net.config()));
}

template <typename T>
double Network<T>::loss_and_gradient(std::span<const T> images, std::span<const T> targets, std::size_t batch,
                                     bool training, std::uint64_t dropout_seed, std::span<T> grad,
                                     BatchWorkspace<T>& ws, Exec exec) const {
  const std::size_t plane = static_cast<std::size_t>(cfg_.input_side) * cfg_.input_side;
  const std::size_t dim = static_cast<std::size_t>(cfg_.output_dim);
  if (images.size() != batch * plane || targets.size() != batch * dim)
    throw std::invalid_argument("loss_and_gradient: batch has the wrong shape");
  if (grad.size() != params_.size()) throw std::invalid_argument("loss_and_gradient: gradient buffer size mismatch");
  if (batch == 0) throw std::invalid_argument("loss_and_gradient: empty batch");
  const NetworkPass<T> pass(cfg_, params_, conv_w_, conv_b_, fc_w_, fc_b_);
  const T denom = static_cast<T>(batch * dim);
  const std::size_t P = params_.size();

  auto run_sample = [&](SampleScratch<T>& s, std::size_t i, T* slot, double& loss) {
    const T* img = images.data() + i * plane;
    pass.forward(s, img, training, seed_mix(dropout_seed, i), exec);
    T gy[16];
    loss = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const T r = s.out[c] - targets[i * dim + c];
      loss += static_cast<double>(r) * static_cast<double>(r);
      gy[c] = T(2) * r / denom;
    }
    pass.backward(s, img, gy, slot, exec);
  };

  double total = 0.0;
  if (exec == Exec::serial_reference) {
    // one sample at a time straight into grad
    SampleScratch<T> s(cfg_);
    std::fill(grad.begin(), grad.end(), T(0));
    for (std::size_t i = 0; i < batch; ++i) {
      double loss = 0.0;
      run_sample(s, i, grad.data(), loss);
      total += loss;
    }
    return total / static_cast<double>(batch * dim);
  }

  ws.prepare(*this, batch);
  const std::size_t slots = ws.slot_count_;
  const auto n_slots = static_cast<std::ptrdiff_t>(slots);
#pragma omp parallel for schedule(static, 1) if (slots > 1)
  for (std::ptrdiff_t k = 0; k < n_slots; ++k) {
    const std::size_t begin = batch * static_cast<std::size_t>(k) / slots;
    const std::size_t end = batch * static_cast<std::size_t>(k + 1) / slots;
    T* slot = ws.slots_.data() + static_cast<std::size_t>(k) * P;
    std::fill(slot, slot + P, T(0));
    for (std::size_t i = begin; i < end; ++i) run_sample(*ws.scratch_[k], i, slot, ws.sample_loss_[i]);
  }

  // fixed-order reduction keeps the result independent of the thread count
  std::copy(ws.slots_.begin(), ws.slots_.begin() + static_cast<std::ptrdiff_t>(P), grad.begin());
  for (std::size_t k = 1; k < slots; ++k) {
    const T* slot = ws.slots_.data() + k * P;
    for (std::size_t j = 0; j < P; ++j) grad[j] += slot[j];
  }
  for (std::size_t i = 0; i < batch; ++i) total += ws.sample_loss_[i];
  return total / static_cast<double>(batch * dim);
}

template <typename T>
double Network<T>::loss_and_gradient(std::span<const T> images, std::span<const T> targets, std::size_t batch,
                                     bool training, std::uint64_t dropout_seed, std::span<T> grad, Exec exec) const {
  BatchWorkspace<T> ws;
  return loss_and_gradient(images, targets, batch, training, dropout_seed, grad, ws, exec);
}

template <typename T>
double mse_loss(std::span<const T> pred, std::span<const T> targets) {
  if (pred.size() != targets.size()) throw std::invalid_argument("mse_loss: shape mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = static_cast<double>(pred[i]) - static_cast<double>(targets[i]);
    sum += r * r;
  }
  return sum / static_cast<double>(pred.size());
}

template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grad, std::span<T> momentum_buffer, const TrainConfig& cfg) {
  if (params.size() != grad.size() || params.size() != momentum_buffer.size())
    throw std::invalid_argument("sgd_step: shape mismatch");
  const T mu = static_cast<T>(cfg.momentum), lr = static_cast<T>(cfg.learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    momentum_buffer[i] = mu * momentum_buffer[i] + grad[i];
    params[i] -= lr * momentum_buffer[i];
  }
}

template class Network<float>;
template class Network<double>;
template struct SampleScratch<float>;
template struct SampleScratch<double>;
template class BatchWorkspace<float>;
template class BatchWorkspace<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template double mse_loss<float>(std::span<const float>, std::span<const float>);
template double mse_loss<double>(std::span<const double>, std::span<const double>);
template void sgd_step<float>(std::span<float>, std::span<const float>, std::span<float>, const TrainConfig&);
template void sgd_step<double>(std::span<double>, std::span<const double>, std::span<double>, const TrainConfig&);

// -- data --------------------------------------------------------------------

std::span<const float> TensorSet::image(std::size_t i) const {
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  return std::span<const float>(images).subspan(i * plane, plane);
}

std::vector<float> image_to_input(const GrayImage& img, int side) {
  if (img.width == side && img.height == side) return to_unit_floats(img);
  return to_unit_floats(crop_resize(img, side));
}

TensorSet load_tensors(const DatasetManifest& manifest, int side, const LabelNormalizer& norm) {
  TensorSet set;
  set.side = side;
  set.count = manifest.samples.size();
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  set.images.resize(set.count * plane);
  set.targets.resize(set.count * 4);
  set.labels.reserve(set.count);
  for (std::size_t i = 0; i < set.count; ++i) {
    const Sample& s = manifest.samples[i];
    const auto input = image_to_input(read_pgm(manifest.image_path(s)), side);
    std::copy(input.begin(), input.end(), set.images.begin() + static_cast<std::ptrdiff_t>(i * plane));
    const auto enc = encode_label(s.label, norm);
    for (int c = 0; c < 4; ++c) set.targets[i * 4 + c] = static_cast<float>(enc[c]);
    set.labels.push_back(s.label);
  }
  return set;
}

std::vector<float> predict_batch(const Network<float>& net, const TensorSet& set, std::size_t batch) {
  const std::size_t plane = static_cast<std::size_t>(set.side) * set.side;
  std::vector<float> out(set.count * 4);
  for (std::size_t start = 0; start < set.count; start += batch) {
    const std::size_t n = std::min(batch, set.count - start);
    net.forward(std::span<const float>(set.images).subspan(start * plane, n * plane), n, false, 0,
                std::span<float>(out).subspan(start * 4, n * 4));
  }
  return out;
}

double evaluate_loss(const Network<float>& net, const TensorSet& set, std::size_t batch) {
  if (set.count == 0) return 0.0;
  const auto pred = predict_batch(net, set, batch);
  return mse_loss<float>(pred, set.targets);
}

TrainResult train(const TensorSet& train_set, const TensorSet& val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& cfg, const LabelNormalizer& norm, const EpochCallback& on_epoch) {
  cfg.validate();
  net_cfg.validate();
  if (train_set.count == 0 || val_set.count == 0) throw std::invalid_argument("train: empty split");
  if (train_set.side != net_cfg.input_side || val_set.side != net_cfg.input_side)
    throw std::invalid_argument("train: tensor side does not match the network input");

  TrainResult result;
  result.normalizer = norm;
  Network<float> net(net_cfg);
  net.initialize(seed_mix(cfg.seed, 0x1417));
  std::vector<float> momentum(net.param_count(), 0.0f), grad(net.param_count(), 0.0f);
  BatchWorkspace<float> ws;
  const std::size_t plane = static_cast<std::size_t>(train_set.side) * train_set.side;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<float> batch_images(bs * plane), batch_targets(bs * 4);
  std::vector<std::size_t> order(train_set.count);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(seed_mix(cfg.seed, 0xE90C000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double running = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = order[start + k];
        const auto img = train_set.image(idx);
        std::copy(img.begin(), img.end(), batch_images.begin() + static_cast<std::ptrdiff_t>(k * plane));
        for (int c = 0; c < 4; ++c) batch_targets[k * 4 + c] = train_set.targets[idx * 4 + c];
      }
      const double loss = net.loss_and_gradient(std::span<const float>(batch_images).first(n * plane),
                                                std::span<const float>(batch_targets).first(n * 4), n, true,
                                                seed_mix(cfg.seed, 0xD0D0000ULL + step), grad, ws);
      sgd_step<float>(net.params(), grad, momentum, cfg);
      running += loss * static_cast<double>(n);
      ++step;
    }
    EpochRecord rec{epoch, running / static_cast<double>(order.size()), evaluate_loss(net, val_set)};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
      throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.best = net;
    }
    if (on_epoch) on_epoch(rec);
  }
  result.last = std::move(net);
  result.momentum = std::move(momentum);
  return result;
}

TrainResult train(const DatasetManifest& train_manifest, const DatasetManifest& val_manifest,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  std::vector<RelativePose> labels;
  for (const auto& s : train_manifest.samples) labels.push_back(s.label);
  const LabelNormalizer norm = LabelNormalizer::fit(labels);
  const TensorSet tr = load_tensors(train_manifest, net_cfg.input_side, norm);
  const TensorSet va = load_tensors(val_manifest, net_cfg.input_side, norm);
  return train(tr, va, net_cfg, cfg, norm, on_epoch);
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  for (const auto& r : history) os << r.epoch << ',' << fmt_exact(r.train_loss) << ',' << fmt_exact(r.val_loss) << '\n';
  return os.str();
}

// -- estimator ---------------------------------------------------------------

DockPoseEstimator::DockPoseEstimator(Network<float> net, LabelNormalizer norm)
    : net_(std::move(net)), norm_(norm) {}

RelativePose DockPoseEstimator::predict_input(std::span<const float> input) const {
  std::array<float, 4> out{};
  net_.forward(input, 1, false, 0, out);
  return decode_label({out[0], out[1], out[2], out[3]}, norm_);
}

RelativePose DockPoseEstimator::predict(const GrayImage& img) const {
  return predict_input(image_to_input(img, net_.config().input_side));
}

// -- weight files ------------------------------------------------------------

namespace {
constexpr char kWeightMagic[8] = {'N', 'D', 'P', 'E', 'W', 'G', 'T', '1'};
static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");
}  // namespace

void save_weights(const std::filesystem::path& path, const Network<float>& net, const LabelNormalizer& norm,
                  const std::string& config_hash) {
  nlohmann::ordered_json h;
  const auto& c = net.config();
  h["format"] = "ndpe-weights-v1";
  h["network"] = {{"input_side", c.input_side},
                  {"conv_filters", c.conv_filters},
                  {"fc_hidden", c.fc_hidden},
                  {"dropout_rate", c.dropout_rate},
                  {"output_dim", c.output_dim}};
  h["normalizer"] = {{"offset", norm.offset}, {"scale", norm.scale}};
  h["config_hash"] = config_hash;
  h["param_count"] = net.param_count();
  auto tensors = nlohmann::ordered_json::array();
  for (const auto& t : net.tensors()) tensors.push_back({{"name", t.name}, {"offset", t.offset}, {"shape", t.shape}});
  h["tensors"] = tensors;
  const std::string header = h.dump();
  std::string blob(kWeightMagic, sizeof kWeightMagic);
  const std::uint64_t len = header.size();
  blob.append(reinterpret_cast<const char*>(&len), sizeof len);
  blob += header;
  const auto p = net.params();
  blob.append(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(float));
  write_file(path, blob);
}

WeightFile load_weights(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 16 || std::memcmp(blob.data(), kWeightMagic, sizeof kWeightMagic) != 0)
    throw std::runtime_error("not a weight file: " + path.string());
  std::uint64_t len = 0;
  std::memcpy(&len, blob.data() + 8, sizeof len);
  if (16 + len > blob.size()) throw std::runtime_error("truncated weight header in " + path.string());
  const auto h = nlohmann::json::parse(blob.substr(16, len));
  NetworkConfig c;
  const auto& n = h.at("network");
  c.input_side = n.at("input_side").get<int>();
  c.conv_filters = n.at("conv_filters").get<std::vector<int>>();
  c.fc_hidden = n.at("fc_hidden").get<std::vector<int>>();
  c.dropout_rate = n.at("dropout_rate").get<double>();
  c.output_dim = n.at("output_dim").get<int>();
  WeightFile wf{Network<float>(c), {}, h.value("config_hash", std::string())};
  wf.normalizer.offset = h.at("normalizer").at("offset").get<std::array<double, 4>>();
  wf.normalizer.scale = h.at("normalizer").at("scale").get<std::array<double, 4>>();
  const std::size_t count = h.at("param_count").get<std::size_t>();
  if (count != wf.net.param_count()) throw std::runtime_error("weight file parameter count does not match its shapes");
  if (blob.size() != 16 + len + count * sizeof(float)) throw std::runtime_error("weight payload size mismatch in " + path.string());
  std::memcpy(wf.net.params().data(), blob.data() + 16 + len, count * sizeof(float));
  return wf;
}

}  // namespace dockpilot
