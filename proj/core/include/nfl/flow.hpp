#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nfl/common.hpp"
#include "nfl/keycodec.hpp"

namespace nfl {

struct FlowConfig {
  std::uint32_t dims = 2;         // feature dimensions d
  std::uint32_t layers = 2;       // masked affine layers L
  std::uint32_t hidden_mult = 2;  // hidden units per input dimension h
  double sigma_latent = 1e8;      // latent normal std-dev (variance 1e16)
  double theta = 2.5;             // codec scale factor
  std::uint32_t batch_size = 256;
  std::uint32_t epochs = 3;
  double sample_fraction = 0.1;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0x5eed;
};

void validate(const FlowConfig& cfg);

// All state of a trained flow. Weights are the packed lower-block-triangular
// matrices, layer-major, row-major within a layer, stored as unconstrained
// reals. At evaluation time every entry is exponentiated (diagonal blocks get
// their strictly positive Jacobian contribution from this), and first-layer
// rows add a significance chain across input dimensions:
//   eff[j] = theta * eff[j+1] + exp(stored[j]).
// The chain guarantees that the merged transformed key is strictly
// increasing in the original key for any parameter values: when a key
// crosses a feature-cell boundary, the gain on the more significant
// dimension always outweighs the reset of the junior ones.
struct FlowParams {
  FlowConfig config;
  CodecParams codec;
  std::vector<double> weights;
  std::vector<double> biases;
  bool bypass = false;

  bool same_model(const FlowParams& other) const;
};

struct TransformResult {
  std::vector<FeatureVector> z_batch;
  std::vector<double> logdet_batch;
};

// Layer widths: d -> d*h -> ... -> d*h -> d (single layer maps d -> d).
std::size_t weight_count(const FlowConfig& cfg);
std::size_t bias_count(const FlowConfig& cfg);

// Seeded initial parameters: weights uniform in [-0.1, 0.1], biases zero.
FlowParams init_flow(const FlowConfig& cfg, const CodecParams& codec);

// Identity transform with logdet 0; used as a test fixture and as the
// execution path when switching disables the flow.
FlowParams bypass_flow(const FlowConfig& cfg, const CodecParams& codec);

// Density-estimation direction x -> z with the exact log |det Jacobian| per
// item, accumulated in log space. Throws ShapeMismatch on a wrong-length
// vector.
TransformResult flow_forward(const std::vector<FeatureVector>& x_batch, const FlowParams& params);

// Mean over the batch of sum_k N(z_k; 0, sigma) log-density plus logdet.
double log_likelihood(const TransformResult& result, double sigma_latent);

// Mean log-likelihood of a feature batch and its exact gradient with respect
// to every stored parameter. This is the training objective; exposed so the
// analytic gradients can be checked against finite differences.
double loss_and_gradient(const std::vector<FeatureVector>& x_batch, const FlowParams& params,
                         std::span<double> grad_weights, std::span<double> grad_biases);

struct TrainStats {
  std::vector<double> step_loglik;          // per-step minibatch mean
  std::vector<std::size_t> epoch_step_end;  // step count after each epoch
};

// Fits the codec, samples sample_fraction of the keys, and runs epochs of
// minibatch gradient ascent on the mean log-likelihood. Deterministic for a
// fixed (keys, config).
FlowParams train_flow(std::span<const Key> keys, const FlowConfig& cfg,
                      TrainStats* stats = nullptr);

// normalize -> expand -> flow -> merge for every key, processed in internal
// batches of config.batch_size.
std::vector<double> transform_keys(std::span<const Key> keys, const FlowParams& params);

// Mean log-likelihood of a key set under the flow (evaluation only).
double evaluate_log_likelihood(std::span<const Key> keys, const FlowParams& params);

// Flow parameter file, little-endian, magic "NFL1". Roundtrip is bit-exact.
void save_flow(const FlowParams& params, std::ostream& sink);
void save_flow(const FlowParams& params, const std::string& path);
FlowParams load_flow(std::istream& source);
FlowParams load_flow(const std::string& path);

}  // namespace nfl
