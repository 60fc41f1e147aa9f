#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace necoc {

enum class Activation { relu, tanh };

// Layer-shape description of a feed-forward learner. Empty hidden_dims gives
// plain softmax regression.
struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
  Activation activation = Activation::relu;
  double init_scale = 1.0;
};

// Weights and biases of a stack of affine layers. weights[l] has shape
// (fan_in x fan_out) so that a batch X (samples x fan_in) maps to
// X * W + b. The activation travels with the parameters so that forward /
// gradients need no separate spec.
struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::relu;

  int layer_count() const { return static_cast<int>(weights.size()); }
  long long scalar_count() const;
};

enum class Optimizer { sgd, adam };
enum class ScheduleKind { per_epoch, per_iteration_after_warmup };

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double base_lr = 0.001;
  double decay_rate = 0.05;
  int decay_step = 500;
  int warmup_iterations = 0;
  std::optional<double> grad_clip = 5.0;  // global-norm clip, nullopt disables
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  ScheduleKind schedule = ScheduleKind::per_epoch;
};

struct LabeledBatch {
  Eigen::MatrixXd features;  // samples x input_dim
  std::vector<int> labels;   // 0-based, < output_dim
};

struct ForwardResult {
  Eigen::MatrixXd logits;
  Eigen::MatrixXd probabilities;
};

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

ForwardResult forward(const NetworkParams& params,
                      const Eigen::MatrixXd& features);

double cross_entropy_loss(const Eigen::MatrixXd& probabilities,
                          const std::vector<int>& labels);

// Analytic gradient of cross_entropy_loss(forward(params, X), y) with respect
// to every parameter; returned in a NetworkParams of identical shape.
NetworkParams gradients(const NetworkParams& params, const LabeledBatch& batch);

// Learning rate at step t. per_epoch: base_lr / (1 + decay_rate * t).
// per_iteration_after_warmup: base_lr while t < warmup_iterations, then
// base_lr / (1 + decay_rate * (t - warmup_iterations) / decay_step).
double lr_at(const TrainConfig& cfg, long long t);

// Mini-batch training. Epoch order is reshuffled from a seed-derived stream;
// if dev is given the parameters with the best dev accuracy seen at epoch
// boundaries are returned, otherwise the final ones. Throws NonFiniteLoss on
// divergence.
NetworkParams fit(const NetworkSpec& spec, const TrainConfig& cfg,
                  const LabeledBatch& train, const LabeledBatch* dev = nullptr);

NetworkParams fit(const NetworkSpec& spec, const TrainConfig& cfg,
                  const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                  const Eigen::MatrixXd* dev_x = nullptr,
                  const std::vector<int>* dev_y = nullptr);

// Row-wise argmax of logits, smallest index on ties.
std::vector<int> predict(const NetworkParams& params,
                         const Eigen::MatrixXd& features);

// --- segment machinery ---------------------------------------------------
// A NetworkParams can act as a slice of a larger network. activate_last
// controls whether the final layer applies the activation (true for shared
// trunks made of hidden layers) or emits logits (full networks, heads).

struct SegmentCache {
  std::vector<Eigen::MatrixXd> inputs;   // inputs[l] feeds layer l; inputs[0] is the batch
  std::vector<Eigen::MatrixXd> preacts;  // pre-activation outputs per layer
  const Eigen::MatrixXd& output() const { return inputs.back(); }
};

SegmentCache segment_forward(const NetworkParams& params,
                             const Eigen::MatrixXd& input, bool activate_last);

struct SegmentBackward {
  NetworkParams grads;
  Eigen::MatrixXd input_grad;
};

SegmentBackward segment_backward(const NetworkParams& params,
                                 const SegmentCache& cache,
                                 const Eigen::MatrixXd& output_grad,
                                 bool activate_last);

// Mean cross-entropy over the batch and its gradient w.r.t. the logits.
double softmax_loss_grad(const Eigen::MatrixXd& logits,
                         const std::vector<int>& labels,
                         Eigen::MatrixXd& dlogits);

// --- optimizer -----------------------------------------------------------

// Adam / SGD state over an arbitrary group of parameter tensors. The group
// is addressed as a flat list so trunk and heads can share one optimizer.
class OptimizerState {
 public:
  OptimizerState(Optimizer kind, const std::vector<NetworkParams*>& group);

  // Applies one update step with the given learning rate. Gradients must be
  // passed in the same group order used at construction.
  void step(const std::vector<NetworkParams*>& group,
            const std::vector<const NetworkParams*>& grads, double lr);

 private:
  Optimizer kind_;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
  long long t_ = 0;
};

double global_grad_norm(const std::vector<const NetworkParams*>& grads);

// Scales the whole gradient group so its global norm is at most clip.
// Returns the pre-clip norm.
double clip_gradients(const std::vector<NetworkParams*>& grads, double clip);

// --- checkpoint blob -----------------------------------------------------
// Portable binary blob: little-endian, tensors named layer<i>.weight /
// layer<i>.bias with explicit shapes and 64-bit float payloads.

void write_params(const NetworkParams& params, const std::string& path);
NetworkParams read_params(const std::string& path);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace necoc
