#include "necoc/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

namespace necoc {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kProbFloor = 1e-12;

// Seed roles inside fit(); keeps init and shuffle streams independent.
constexpr std::uint64_t kSeedInit = 0;
constexpr std::uint64_t kSeedShuffle = 1;

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative given the pre-activation values.
Eigen::ArrayXXd activation_deriv(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::relu) {
    return (z.array() > 0.0).cast<double>();
  }
  return 1.0 - z.array().tanh().square();
}

void check_feature_width(const NetworkParams& params,
                         const Eigen::MatrixXd& features) {
  if (params.weights.empty()) {
    throw ShapeMismatch("network has no layers");
  }
  if (features.cols() != params.weights.front().rows()) {
    throw ShapeMismatch("feature width " + std::to_string(features.cols()) +
                        " does not match input dim " +
                        std::to_string(params.weights.front().rows()));
  }
}

}  // namespace

long long NetworkParams::scalar_count() const {
  long long n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<long long>(weights[l].size()) +
         static_cast<long long>(biases[l].size());
  }
  return n;
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw ShapeMismatch("input_dim and output_dim must be >= 1");
  }
  for (int h : spec.hidden_dims) {
    if (h < 1) throw ShapeMismatch("hidden dims must be >= 1");
  }

  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  dims.push_back(spec.output_dim);

  NetworkParams params;
  params.activation = spec.activation;
  RandomStream rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double scale = spec.init_scale / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = rng.next_uniform(-scale, scale);
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

SegmentCache segment_forward(const NetworkParams& params,
                             const Eigen::MatrixXd& input, bool activate_last) {
  check_feature_width(params, input);
  SegmentCache cache;
  cache.inputs.reserve(params.weights.size() + 1);
  cache.preacts.reserve(params.weights.size());
  cache.inputs.push_back(input);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Eigen::MatrixXd z =
        (cache.inputs.back() * params.weights[l]).rowwise() +
        params.biases[l].transpose();
    const bool last = (l + 1 == params.weights.size());
    if (!last || activate_last) {
      cache.inputs.push_back(apply_activation(z, params.activation));
    } else {
      cache.inputs.push_back(z);
    }
    cache.preacts.push_back(std::move(z));
  }
  return cache;
}

SegmentBackward segment_backward(const NetworkParams& params,
                                 const SegmentCache& cache,
                                 const Eigen::MatrixXd& output_grad,
                                 bool activate_last) {
  const int layers = params.layer_count();
  SegmentBackward back;
  back.grads.activation = params.activation;
  back.grads.weights.resize(static_cast<std::size_t>(layers));
  back.grads.biases.resize(static_cast<std::size_t>(layers));

  Eigen::MatrixXd delta = output_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const bool last = (l + 1 == layers);
    if (!last || activate_last) {
      delta.array() *=
          activation_deriv(cache.preacts[static_cast<std::size_t>(l)],
                           params.activation);
    }
    back.grads.weights[static_cast<std::size_t>(l)] =
        cache.inputs[static_cast<std::size_t>(l)].transpose() * delta;
    back.grads.biases[static_cast<std::size_t>(l)] = delta.colwise().sum();
    delta = delta * params.weights[static_cast<std::size_t>(l)].transpose();
  }
  back.input_grad = std::move(delta);
  return back;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::ArrayXXd shifted =
      logits.array().colwise() - logits.rowwise().maxCoeff().array();
  Eigen::ArrayXXd ex = shifted.exp();
  return (ex.colwise() / ex.rowwise().sum()).matrix();
}

void check_labels(const Eigen::Index rows, const Eigen::Index classes,
                  const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ShapeMismatch("label count " + std::to_string(labels.size()) +
                        " does not match sample count " + std::to_string(rows));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ShapeMismatch("label " + std::to_string(labels[i]) + " at sample " +
                          std::to_string(i) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

}  // namespace

ForwardResult forward(const NetworkParams& params,
                      const Eigen::MatrixXd& features) {
  SegmentCache cache = segment_forward(params, features, false);
  ForwardResult out;
  out.logits = cache.output();
  out.probabilities = softmax_rows(out.logits);
  return out;
}

double cross_entropy_loss(const Eigen::MatrixXd& probabilities,
                          const std::vector<int>& labels) {
  check_labels(probabilities.rows(), probabilities.cols(), labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    const double p = std::max(probabilities(i, labels[static_cast<std::size_t>(i)]),
                              kProbFloor);
    total -= std::log(p);
  }
  return total / static_cast<double>(probabilities.rows());
}

double softmax_loss_grad(const Eigen::MatrixXd& logits,
                         const std::vector<int>& labels,
                         Eigen::MatrixXd& dlogits) {
  check_labels(logits.rows(), logits.cols(), labels);
  const Eigen::MatrixXd probs = softmax_rows(logits);
  const double n = static_cast<double>(logits.rows());
  dlogits = probs / n;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    dlogits(i, y) -= 1.0 / n;
    total -= std::log(std::max(probs(i, y), kProbFloor));
  }
  return total / n;
}

NetworkParams gradients(const NetworkParams& params, const LabeledBatch& batch) {
  SegmentCache cache = segment_forward(params, batch.features, false);
  Eigen::MatrixXd dlogits;
  softmax_loss_grad(cache.output(), batch.labels, dlogits);
  return segment_backward(params, cache, dlogits, false).grads;
}

double lr_at(const TrainConfig& cfg, long long t) {
  if (cfg.schedule == ScheduleKind::per_epoch) {
    return cfg.base_lr / (1.0 + cfg.decay_rate * static_cast<double>(t));
  }
  if (t < cfg.warmup_iterations) return cfg.base_lr;
  const double progressed =
      static_cast<double>(t - cfg.warmup_iterations) /
      static_cast<double>(cfg.decay_step);
  return cfg.base_lr / (1.0 + cfg.decay_rate * progressed);
}

OptimizerState::OptimizerState(Optimizer kind,
                               const std::vector<NetworkParams*>& group)
    : kind_(kind) {
  if (kind_ != Optimizer::adam) return;
  for (const NetworkParams* p : group) {
    for (std::size_t l = 0; l < p->weights.size(); ++l) {
      m_w_.push_back(Eigen::MatrixXd::Zero(p->weights[l].rows(),
                                           p->weights[l].cols()));
      v_w_.push_back(Eigen::MatrixXd::Zero(p->weights[l].rows(),
                                           p->weights[l].cols()));
      m_b_.push_back(Eigen::VectorXd::Zero(p->biases[l].size()));
      v_b_.push_back(Eigen::VectorXd::Zero(p->biases[l].size()));
    }
  }
}

void OptimizerState::step(const std::vector<NetworkParams*>& group,
                          const std::vector<const NetworkParams*>& grads,
                          double lr) {
  if (kind_ == Optimizer::sgd) {
    for (std::size_t g = 0; g < group.size(); ++g) {
      for (std::size_t l = 0; l < group[g]->weights.size(); ++l) {
        group[g]->weights[l] -= lr * grads[g]->weights[l];
        group[g]->biases[l] -= lr * grads[g]->biases[l];
      }
    }
    return;
  }

  ++t_;
  const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
  std::size_t slot = 0;
  for (std::size_t g = 0; g < group.size(); ++g) {
    for (std::size_t l = 0; l < group[g]->weights.size(); ++l, ++slot) {
      auto& mw = m_w_[slot];
      auto& vw = v_w_[slot];
      const auto& gw = grads[g]->weights[l];
      mw = kAdamBeta1 * mw + (1.0 - kAdamBeta1) * gw;
      vw = kAdamBeta2 * vw.array().matrix() +
           (1.0 - kAdamBeta2) * gw.array().square().matrix();
      group[g]->weights[l].array() -=
          lr * (mw.array() / correction1) /
          ((vw.array() / correction2).sqrt() + kAdamEps);

      auto& mb = m_b_[slot];
      auto& vb = v_b_[slot];
      const auto& gb = grads[g]->biases[l];
      mb = kAdamBeta1 * mb + (1.0 - kAdamBeta1) * gb;
      vb = kAdamBeta2 * vb.array().matrix() +
           (1.0 - kAdamBeta2) * gb.array().square().matrix();
      group[g]->biases[l].array() -=
          lr * (mb.array() / correction1) /
          ((vb.array() / correction2).sqrt() + kAdamEps);
    }
  }
}

double global_grad_norm(const std::vector<const NetworkParams*>& grads) {
  double sq = 0.0;
  for (const NetworkParams* g : grads) {
    for (std::size_t l = 0; l < g->weights.size(); ++l) {
      sq += g->weights[l].squaredNorm() + g->biases[l].squaredNorm();
    }
  }
  return std::sqrt(sq);
}

double clip_gradients(const std::vector<NetworkParams*>& grads, double clip) {
  std::vector<const NetworkParams*> view(grads.begin(), grads.end());
  const double norm = global_grad_norm(view);
  if (norm > clip && norm > 0.0) {
    const double scale = clip / norm;
    for (NetworkParams* g : grads) {
      for (std::size_t l = 0; l < g->weights.size(); ++l) {
        g->weights[l] *= scale;
        g->biases[l] *= scale;
      }
    }
  }
  return norm;
}

namespace {

double accuracy_of(const NetworkParams& params, const Eigen::MatrixXd& x,
                   const std::vector<int>& y) {
  const std::vector<int> pred = predict(params, x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pred[i] == y[i]) ++hit;
  }
  return y.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

NetworkParams fit(const NetworkSpec& spec, const TrainConfig& cfg,
                  const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                  const Eigen::MatrixXd* dev_x, const std::vector<int>* dev_y) {
  if (spec.output_dim < 2) {
    throw ShapeMismatch("output_dim must be >= 2 for classification");
  }
  check_labels(train_x.rows(), spec.output_dim, train_y);

  NetworkParams params = init_params(spec, derive_seed(cfg.seed, kSeedInit));
  if (cfg.epochs <= 0) return params;

  RandomStream shuffle_rng(derive_seed(cfg.seed, kSeedShuffle));
  OptimizerState opt(cfg.optimizer, {&params});

  const int n = static_cast<int>(train_x.rows());
  const int batch_size = std::max(1, std::min(cfg.batch_size, n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  NetworkParams best = params;
  double best_acc = -1.0;
  long long iteration = 0;

  Eigen::MatrixXd bx;
  std::vector<int> by;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int start = 0; start < n; start += batch_size) {
      const int count = std::min(batch_size, n - start);
      bx.resize(count, train_x.cols());
      by.resize(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        bx.row(i) = train_x.row(src);
        by[static_cast<std::size_t>(i)] = train_y[static_cast<std::size_t>(src)];
      }

      SegmentCache cache = segment_forward(params, bx, false);
      Eigen::MatrixXd dlogits;
      const double loss = softmax_loss_grad(cache.output(), by, dlogits);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("loss became non-finite at epoch " +
                            std::to_string(epoch) + ", iteration " +
                            std::to_string(iteration));
      }
      NetworkParams grads = segment_backward(params, cache, dlogits, false).grads;
      if (cfg.grad_clip) clip_gradients({&grads}, *cfg.grad_clip);

      const long long t =
          cfg.schedule == ScheduleKind::per_epoch ? epoch : iteration;
      opt.step({&params}, {&grads}, lr_at(cfg, t));
      ++iteration;
    }

    if (dev_x != nullptr && dev_y != nullptr) {
      const double acc = accuracy_of(params, *dev_x, *dev_y);
      if (acc > best_acc) {
        best_acc = acc;
        best = params;
      }
    }
  }
  return (dev_x != nullptr && dev_y != nullptr) ? best : params;
}

NetworkParams fit(const NetworkSpec& spec, const TrainConfig& cfg,
                  const LabeledBatch& train, const LabeledBatch* dev) {
  if (dev != nullptr) {
    return fit(spec, cfg, train.features, train.labels, &dev->features,
               &dev->labels);
  }
  return fit(spec, cfg, train.features, train.labels);
}

std::vector<int> predict(const NetworkParams& params,
                         const Eigen::MatrixXd& features) {
  SegmentCache cache = segment_forward(params, features, false);
  const Eigen::MatrixXd& logits = cache.output();
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    double best_v = logits(i, 0);
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > best_v) {
        best_v = logits(i, j);
        best = static_cast<int>(j);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// --- parameter blob ------------------------------------------------------
// Layout: magic "NECP", u32 version, u32 tensor count, then per tensor:
// u32 name length, name bytes, u32 rank, u64 dims..., f64 payload
// (row-major). All integers and floats little-endian.

namespace {

constexpr char kBlobMagic[4] = {'N', 'E', 'C', 'P'};
constexpr std::uint32_t kBlobVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw TruncatedFile("unexpected end of " + path);
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw TruncatedFile("unexpected end of " + path);
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in, const std::string& path) {
  const std::uint64_t bits = get_u64(in, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_tensor(std::ostream& out, const std::string& name,
                const std::vector<std::uint64_t>& dims, const double* data,
                std::size_t count) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::uint64_t d : dims) put_u64(out, d);
  for (std::size_t i = 0; i < count; ++i) put_f64(out, data[i]);
}

}  // namespace

void write_params(const NetworkParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kBlobMagic, 4);
  put_u32(out, kBlobVersion);
  put_u32(out, static_cast<std::uint32_t>(params.weights.size() * 2));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const Eigen::MatrixXd& w = params.weights[l];
    // Row-major payload irrespective of Eigen's storage order.
    std::vector<double> rowmajor(static_cast<std::size_t>(w.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) rowmajor[k++] = w(i, j);
    }
    put_tensor(out, "layer" + std::to_string(l) + ".weight",
               {static_cast<std::uint64_t>(w.rows()),
                static_cast<std::uint64_t>(w.cols())},
               rowmajor.data(), rowmajor.size());
    const Eigen::VectorXd& b = params.biases[l];
    put_tensor(out, "layer" + std::to_string(l) + ".bias",
               {static_cast<std::uint64_t>(b.size())}, b.data(),
               static_cast<std::size_t>(b.size()));
  }
  if (!out) throw IoError("failed writing " + path);
}

NetworkParams read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kBlobMagic, 4) != 0) {
    throw BadMagic("bad parameter blob magic in " + path);
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kBlobVersion) {
    throw ParseError("unsupported parameter blob version " +
                     std::to_string(version) + " in " + path);
  }
  const std::uint32_t tensor_count = get_u32(in, path);
  if (tensor_count % 2 != 0) {
    throw ParseError("parameter blob " + path +
                     " must hold weight/bias pairs");
  }

  NetworkParams params;
  const std::size_t layers = tensor_count / 2;
  params.weights.resize(layers);
  params.biases.resize(layers);
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    const std::uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw TruncatedFile("unexpected end of " + path);
    }
    const std::uint32_t rank = get_u32(in, path);
    std::vector<std::uint64_t> dims(rank);
    for (std::uint32_t r = 0; r < rank; ++r) dims[r] = get_u64(in, path);

    const auto dot = name.find('.');
    if (name.rfind("layer", 0) != 0 || dot == std::string::npos) {
      throw ParseError("unexpected tensor name '" + name + "' in " + path);
    }
    const std::size_t layer =
        static_cast<std::size_t>(std::stoul(name.substr(5, dot - 5)));
    if (layer >= layers) {
      throw ParseError("tensor '" + name + "' exceeds layer count in " + path);
    }
    const std::string kind = name.substr(dot + 1);
    if (kind == "weight") {
      if (rank != 2) throw ParseError("weight tensor '" + name + "' must be rank 2");
      Eigen::MatrixXd w(static_cast<Eigen::Index>(dims[0]),
                        static_cast<Eigen::Index>(dims[1]));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = get_f64(in, path);
      }
      params.weights[layer] = std::move(w);
    } else if (kind == "bias") {
      if (rank != 1) throw ParseError("bias tensor '" + name + "' must be rank 1");
      Eigen::VectorXd b(static_cast<Eigen::Index>(dims[0]));
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = get_f64(in, path);
      params.biases[layer] = std::move(b);
    } else {
      throw ParseError("unexpected tensor kind in '" + name + "' in " + path);
    }
  }
  return params;
}

std::string activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ParseError("unknown activation '" + name + "'");
}

}  // namespace necoc
