#include "punch/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "punch/error.hpp"
#include "punch/kernels.hpp"
#include "punch/rng.hpp"

namespace punch {

namespace {

constexpr char kMagic[5] = {'P', 'N', 'C', 'H', '1'};

// Kept strictly inside (0, 1) even when the logit saturates.
double sigmoid(double t) {
  double s;
  if (t >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-t));
  } else {
    const double e = std::exp(t);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp);
}

void apply_activation(Activation a, std::span<double> v) {
  if (a == Activation::relu) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
  } else {
    for (double& x : v) x = std::tanh(x);
  }
}

// Derivative expressed through the activation output h = act(z).
double activation_slope(Activation a, double h) { return a == Activation::relu ? (h > 0.0 ? 1.0 : 0.0) : 1.0 - h * h; }

}  // namespace

Classifier::Classifier(std::vector<std::size_t> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.size() < 2) throw ConfigError("classifier needs at least an input and an output layer");
  if (layers_.back() != 1) throw ConfigError("classifier output layer must have exactly one unit");
  for (auto n : layers_) {
    if (n == 0) throw ConfigError("classifier layer sizes must be positive");
  }
  build_offsets();
  params_.assign(offsets_.back(), 0.0);
}

void Classifier::build_offsets() {
  offsets_.assign(1, 0);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    offsets_.push_back(offsets_.back() + layers_[l] * layers_[l + 1] + layers_[l + 1]);
  }
}

Classifier Classifier::initialized(std::vector<std::size_t> layers, Activation activation, std::uint64_t seed) {
  Classifier net(std::move(layers), activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.layers_[l]));
    for (double& w : net.weights(l)) w = (2.0 * uniform01(rng) - 1.0) * bound;
    for (double& b : net.bias(l)) b = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  return net;
}

std::span<const double> Classifier::weights(std::size_t l) const {
  return {params_.data() + offsets_[l], layers_[l] * layers_[l + 1]};
}
std::span<const double> Classifier::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + layers_[l] * layers_[l + 1], layers_[l + 1]};
}
std::span<double> Classifier::weights(std::size_t l) {
  return {params_.data() + offsets_[l], layers_[l] * layers_[l + 1]};
}
std::span<double> Classifier::bias(std::size_t l) {
  return {params_.data() + offsets_[l] + layers_[l] * layers_[l + 1], layers_[l + 1]};
}

std::vector<double> Classifier::logits_batch(std::span<const double> inputs, std::size_t batch) const {
  if (inputs.size() != batch * input_size()) {
    throw ConfigError("input has " + std::to_string(inputs.size()) + " values, expected " +
                      std::to_string(batch) + " x " + std::to_string(input_size()));
  }
  std::vector<double> cur(inputs.begin(), inputs.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    next.resize(batch * layers_[l + 1]);
    kernels::dense_forward(weights(l), bias(l), cur, batch, layers_[l], layers_[l + 1], next);
    if (l + 1 < layer_count()) apply_activation(activation_, next);
    cur.swap(next);
  }
  return cur;
}

std::vector<double> Classifier::forward_batch(std::span<const double> inputs, std::size_t batch) const {
  auto out = logits_batch(inputs, batch);
  for (double& v : out) v = sigmoid(v);
  return out;
}

double Classifier::forward(std::span<const double> input) const { return forward_batch(input, 1)[0]; }

std::vector<double> backprop_with(const Classifier& net, std::span<const double> inputs, std::size_t batch,
                                  const DlogitFn& make_dlogit) {
  const std::size_t L = net.layer_count();
  if (inputs.size() != batch * net.input_size()) throw ConfigError("backprop input dimension mismatch");

  // Forward pass keeping every layer's activations.
  std::vector<std::vector<double>> acts(L + 1);
  acts[0].assign(inputs.begin(), inputs.end());
  for (std::size_t l = 0; l < L; ++l) {
    acts[l + 1].resize(batch * net.layers_[l + 1]);
    kernels::dense_forward(net.weights(l), net.bias(l), acts[l], batch, net.layers_[l], net.layers_[l + 1], acts[l + 1]);
    if (l + 1 < L) apply_activation(net.activation_, acts[l + 1]);
  }
  std::vector<double> scores(batch);
  for (std::size_t b = 0; b < batch; ++b) scores[b] = sigmoid(acts[L][b]);
  std::vector<double> delta = make_dlogit(scores);
  if (delta.size() != batch) throw ConfigError("backprop needs one dlogit per example");

  std::vector<double> grad(net.parameter_count(), 0.0);
  std::vector<double> prev;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = net.layers_[l], out = net.layers_[l + 1];
    std::span<double> gw(grad.data() + net.offsets_[l], in * out);
    std::span<double> gb(grad.data() + net.offsets_[l] + in * out, out);
    kernels::dense_weight_grad(delta, acts[l], batch, in, out, gw, gb);
    for (double v : gw) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in layer " + std::to_string(l));
    }
    for (double v : gb) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in layer " + std::to_string(l) + " bias");
    }
    if (l == 0) break;
    prev.resize(batch * in);
    kernels::dense_input_grad(net.weights(l), delta, batch, in, out, prev);
    for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= activation_slope(net.activation_, acts[l][i]);
    delta.swap(prev);
  }
  return grad;
}

std::vector<double> backprop(const Classifier& net, std::span<const double> inputs, std::size_t batch,
                             std::span<const double> dlogit) {
  return backprop_with(net, inputs, batch, [&](std::span<const double>) {
    return std::vector<double>(dlogit.begin(), dlogit.end());
  });
}

std::vector<double> TrainingBatch::labels() const {
  std::vector<double> y(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) y[i] = tags[i] == ExampleTag::positive ? 1.0 : 0.0;
  return y;
}

namespace {

struct NnreSplit {
  std::vector<std::size_t> pos, unl;
  std::vector<double> sp, su, wu;
};

NnreSplit split_nnre(const TrainingBatch& batch, std::span<const double> scores) {
  NnreSplit s;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    switch (batch.tags[i]) {
      case ExampleTag::positive:
        s.pos.push_back(i);
        s.sp.push_back(scores[i]);
        break;
      case ExampleTag::unlabelled:
        s.unl.push_back(i);
        s.su.push_back(scores[i]);
        if (!batch.weights.empty()) s.wu.push_back(batch.weights[i]);
        break;
      case ExampleTag::sampled_negative:
        throw ConfigError("nnre_pu batches cannot contain sampled negatives");
    }
  }
  return s;
}

}  // namespace

BatchGradient backward(const Classifier& net, const TrainingBatch& batch, const LossSpec& spec) {
  spec.validate();
  if (batch.size() == 0) throw ConfigError("empty training batch");
  BatchGradient out;
  out.gradient = backprop_with(net, batch.inputs, batch.size(), [&](std::span<const double> scores) {
    if (spec.kind == LossKind::pn_cross_entropy) {
      const auto y = batch.labels();
      out.loss = pn_loss(scores, y);
      return pn_loss_dlogit(scores, y);
    }
    std::vector<double> dlogit(batch.size(), 0.0);
    auto s = split_nnre(batch, scores);
    const auto g = nnre_pu_dlogit(s.sp, s.su, spec, s.wu);
    for (std::size_t i = 0; i < s.pos.size(); ++i) dlogit[s.pos[i]] = g.positives[i];
    for (std::size_t j = 0; j < s.unl.size(); ++j) dlogit[s.unl[j]] = g.unlabelled[j];
    out.loss = g.risk.total;
    out.correction = g.risk.correction;
    out.defused = g.defused;
    return dlogit;
  });
  return out;
}

double batch_loss(const Classifier& net, const TrainingBatch& batch, const LossSpec& spec) {
  spec.validate();
  const auto scores = net.forward_batch(batch.inputs, batch.size());
  if (spec.kind == LossKind::pn_cross_entropy) return pn_loss(scores, batch.labels());
  auto s = split_nnre(batch, scores);
  return nnre_pu_loss(s.sp, s.su, spec, s.wu).total;
}

std::vector<std::size_t> reference_layers(int patch_size, int channels, std::vector<std::size_t> hidden) {
  std::vector<std::size_t> layers{static_cast<std::size_t>(patch_size) * patch_size * channels};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(1);
  return layers;
}

void Classifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write classifier " + path.string());
  auto put_u32 = [&](std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
  };
  out.write(kMagic, 5);
  put_u32(activation_ == Activation::relu ? 0 : 1);
  put_u32(static_cast<std::uint32_t>(layers_.size()));
  for (auto n : layers_) put_u32(static_cast<std::uint32_t>(n));
  for (double p : params_) put_u32(std::bit_cast<std::uint32_t>(static_cast<float>(p)));
}

Classifier Classifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open classifier " + path.string());
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    throw DataError(path.string() + " is not a PNCH1 classifier file");
  }
  auto get_u32 = [&]() {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated classifier file " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const auto act = get_u32();
  if (act > 1) throw DataError("unknown activation code in classifier file");
  const auto count = get_u32();
  if (count < 2 || count > 64) throw DataError("implausible layer count in classifier file");
  std::vector<std::size_t> layers(count);
  for (auto& n : layers) n = get_u32();
  Classifier net(layers, act == 0 ? Activation::relu : Activation::tanh);
  for (double& p : net.params_) p = std::bit_cast<float>(get_u32());
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in classifier file");
  return net;
}

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

}  // namespace punch
