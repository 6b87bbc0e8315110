#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdrtune/features.hpp"
#include "pdrtune/graphdata.hpp"
#include "pdrtune/params.hpp"

namespace pdrtune::model {

struct NetConfig {
  unsigned node_dim = static_cast<unsigned>(graphdata::kNodeFeatureDim);
  unsigned sage_width = 64;
  unsigned sage_depth = 3;
  unsigned feat_dim = 11;
  unsigned config_dim = 9;
  std::vector<unsigned> head_hidden = {64, 32};

  bool operator==(const NetConfig&) const = default;
};

struct LossConfig {
  double alpha = 0.3;   // weight of the MSE term
  double margin = 0.1;  // ranking hinge margin, in log-seconds
};

/// Runtime predictor: a stack of GraphSAGE layers over the circuit graph,
/// global mean pooling, then an MLP over the pooled embedding concatenated
/// with the static feature vector and the configuration bits. All parameters
/// live in one flat vector so the optimizer and checkpointing stay trivial.
class PredictorNet {
public:
  struct SageShape {
    std::size_t d_in, d_out;
    std::size_t w_self, w_neigh, bias;  // offsets into the flat vector
  };
  struct DenseShape {
    std::size_t d_in, d_out;
    bool relu;
    std::size_t w, b;
  };

  explicit PredictorNet(NetConfig cfg = {});

  const NetConfig& config() const { return cfg_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Glorot-uniform weights, zero biases; fully determined by the seed.
  void init_params(std::uint64_t seed);

  std::size_t num_sage_layers() const { return sage_.size(); }
  std::size_t num_head_layers() const { return head_.size(); }
  const SageShape& sage_shape(std::size_t l) const { return sage_[l]; }
  const DenseShape& head_shape(std::size_t l) const { return head_[l]; }
  std::size_t head_input_dim() const { return head_.front().d_in; }

private:
  NetConfig cfg_;
  std::vector<SageShape> sage_;
  std::vector<DenseShape> head_;
  std::vector<double> params_;
};

/// Adjacency in CSR form (in-neighbors) plus the initial feature matrix;
/// built once per circuit and reused across forward passes.
struct CompiledGraph {
  int num_nodes = 0;
  std::vector<double> x0;       // num_nodes x node_dim
  std::vector<int> in_offset;   // size num_nodes + 1
  std::vector<int> in_src;
};

CompiledGraph compile(const graphdata::GraphData& g);

struct EncodeCache {
  std::vector<std::vector<double>> x;  // x[0] = input, x[l+1] = layer l output
  std::vector<std::vector<double>> m;  // neighbor means fed to layer l
  std::vector<std::vector<double>> z;  // pre-activations of layer l
};

/// One GraphSAGE layer: out_i = relu(W_self x_i + W_neigh mean_{j->i} x_j + b).
/// Nodes without in-edges use a zero neighbor term.
std::vector<double> sage_forward(const PredictorNet& net, std::size_t layer,
                                 const CompiledGraph& g, const std::vector<double>& x,
                                 std::vector<double>* neigh_mean = nullptr,
                                 std::vector<double>* pre_act = nullptr);

/// Circuit embedding: global mean pool over the last layer's node states.
std::vector<double> encode(const PredictorNet& net, const CompiledGraph& g,
                           EncodeCache* cache = nullptr);

struct HeadCache {
  std::vector<std::vector<double>> in;  // input to each dense layer
  std::vector<std::vector<double>> z;   // pre-activations
};

double head_forward(const PredictorNet& net, std::span<const double> h,
                    std::span<const double> f_norm, const params::PdrConfig& config,
                    HeadCache* cache = nullptr);

double predict_log_runtime(const PredictorNet& net, const graphdata::GraphData& g,
                           const std::array<double, 11>& f_norm,
                           const params::PdrConfig& config);

struct LossResult {
  double total = 0;
  double mse = 0;
  double ranking = 0;
  std::vector<double> grad_pred;  // d total / d prediction
};

/// alpha * MSE + (1-alpha) * pairwise hinge over same-circuit pairs with
/// strictly smaller true runtime; no pairs means zero ranking term.
LossResult hybrid_loss(std::span<const int> circuit_ids, std::span<const double> preds,
                       std::span<const double> targets, const LossConfig& cfg);

struct Sample {
  int circuit = 0;  // index into the batch's circuit array
  params::PdrConfig config;
  double target_log = 0;
};

struct CircuitInput {
  const CompiledGraph* graph = nullptr;
  std::array<double, 11> f_norm{};
};

struct BatchResult {
  LossResult loss;
  std::vector<double> preds;
  std::vector<double> grads;  // same layout as PredictorNet::params()
};

/// Full forward plus exact reverse-mode gradients of the hybrid loss with
/// respect to every parameter.
BatchResult backward(const PredictorNet& net, std::span<const CircuitInput> circuits,
                     std::span<const Sample> samples, const LossConfig& cfg);

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
};

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

void save_checkpoint(const std::string& path, const PredictorNet& net,
                     const features::FeatureNormalizer& normalizer);

struct Checkpoint {
  PredictorNet net;
  features::FeatureNormalizer normalizer;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace pdrtune::model
