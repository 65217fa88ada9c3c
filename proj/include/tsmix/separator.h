// include/tsmix/separator.h

// Copyright 2026  tsmix authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TSMIX_SEPARATOR_H_
#define TSMIX_SEPARATOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsmix/assign.h"
#include "tsmix/losses.h"
#include "tsmix/signal.h"

namespace tsmix {

enum class MaskActivation { sigmoid, relu };

// Micro encoder-masker-decoder: a strided conv encoder with ReLU, a
// frame-wise MLP producing one mask per output channel, and an overlap-add
// transposed-conv decoder. M output channels; optional mixture-consistency
// projection on the outputs.
struct SeparatorConfig {
  int num_filters = 32;  // N
  int kernel_len = 16;   // L, samples
  int stride = 8;
  int hidden_dim = 64;   // H
  int num_hidden_layers = 2;
  int num_outputs = 2;   // M
  bool mixture_consistency = true;
  MaskActivation mask_activation = MaskActivation::sigmoid;
  std::uint64_t seed = 0;

  void validate() const;
};

// Parameter block offsets for one config. Declaration order (also the
// checkpoint serialization order): encoder filters (N x L row-major), then
// per masker layer weight (out x in row-major) followed by bias, then
// decoder filters (N x L row-major).
struct ParamLayout {
  struct Linear {
    std::size_t weight_offset;
    std::size_t bias_offset;
    int out_dim;
    int in_dim;
  };
  std::size_t encoder_offset;
  std::vector<Linear> masker;
  std::size_t decoder_offset;
  std::size_t total;

  static ParamLayout from_config(const SeparatorConfig& config);
};

// All trainable tensors, flattened in declaration order.
struct SeparatorParams {
  std::vector<double> values;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(std::size_t num_params, double lr = 1e-3);
};

// Deterministic uniform(-a, a) init with a = sqrt(1/fan_in); biases zero.
SeparatorParams init_params(const SeparatorConfig& config);

// Run the network on one mixture. Output stack has M waveforms, each exactly
// the input length. Input must be at least kernel_len samples.
SourceStack forward(const SeparatorParams& params,
                    const SeparatorConfig& config, const Waveform& mixture);

// Closed-form projection onto {sum_m s_m = x}: each source receives an equal
// share of the residual, s_m + (x - sum s)/M.
SourceStack mixture_consistency_project(const SourceStack& initial,
                                        const Waveform& mixture);

// One training example for the unsupervised criterion: the forward input is
// x1 + x2 and the loss assigns output channels back to the two mixtures.
struct MixitExample {
  Waveform x1;
  Waveform x2;
};

// One training example for the supervised/pseudo-supervised criterion.
struct PitExample {
  Waveform mixture;
  SourceStack refs;
};

struct LossGrad {
  double loss_db;            // mean over the batch of per-example totals
  std::vector<double> grads; // d loss / d params, same layout as params
};

// Batch loss and analytic parameter gradients. The optimal assignment /
// permutation is held fixed within the step (winner-take-all); gradients flow
// through the mixture-consistency projection when enabled. num_threads > 1
// evaluates examples in parallel; the reduction runs in example order, so
// results are identical for any thread count.
LossGrad loss_and_grad(const SeparatorParams& params,
                       const SeparatorConfig& config,
                       const std::vector<MixitExample>& batch,
                       const LossSpec& spec, int num_threads = 1);
LossGrad loss_and_grad(const SeparatorParams& params,
                       const SeparatorConfig& config,
                       const std::vector<PitExample>& batch,
                       const LossSpec& spec, int num_threads = 1);

// Standard Adam with bias correction. Pure: returns the updated copies.
std::pair<SeparatorParams, AdamState> adam_step(const SeparatorParams& params,
                                                const std::vector<double>& grads,
                                                AdamState state);

// Little-endian binary checkpoint: magic, format version, config block, then
// the raw parameter array. Round-trips are bit-exact.
void save_checkpoint(const SeparatorParams& params,
                     const SeparatorConfig& config, const std::string& path);
std::pair<SeparatorParams, SeparatorConfig> load_checkpoint(
    const std::string& path);

}  // namespace tsmix

#endif  // TSMIX_SEPARATOR_H_
