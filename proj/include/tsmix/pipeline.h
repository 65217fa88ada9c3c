// include/tsmix/pipeline.h

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

#ifndef TSMIX_PIPELINE_H_
#define TSMIX_PIPELINE_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tsmix/datagen.h"
#include "tsmix/losses.h"
#include "tsmix/separator.h"
#include "tsmix/signal.h"

namespace tsmix {

enum class StageKind { teacher, student, finetune, distill };

StageKind stage_from_string(const std::string& name);
std::string stage_to_string(StageKind stage);

// One training stage. The unsupervised teacher requires M >= 2C and mixture
// consistency on; the supervised-style stages require M == C.
struct StageConfig {
  StageKind stage = StageKind::teacher;
  SeparatorConfig separator;
  int epochs = 30;
  int batch_size = 8;
  double lr = 1e-3;
  LossSpec loss;
  std::uint64_t seed = 0;
  double segment_seconds = 4.0;

  void validate(int num_sources) const;
};

// Dynamic-remixing knobs for the teacher stage; pairing reseeds every epoch
// from mix_seed(base_seed, epoch).
struct DataOptions {
  PairStrategy strategy = PairStrategy::two_src;
  double single_fraction = 0.10;
  std::uint64_t base_seed = 0;
};

struct CurvePoint {
  std::int64_t step = 0;  // 1-based global optimizer step
  int epoch = 0;          // 0-based
  double loss_db = 0.0;   // batch-mean loss at that step
};

struct TrainOutput {
  SeparatorParams params;
  SeparatorConfig config;
  std::vector<CurvePoint> curve;
};

// Teacher-separated channels for one mixture, snapped to the 16-bit PCM grid
// so the stored WAVs reproduce them exactly; indices are the teacher output
// channels that survived energy selection, in descending energy order.
struct PseudoExample {
  std::string id;
  Waveform mixture;
  SourceStack targets;
  std::vector<int> selected_indices;
};

// Unsupervised stage: per epoch, re-pair the mixtures, segment both members
// jointly, shuffle, and run batched optimizer steps on the summed inputs.
TrainOutput train_teacher(const std::vector<MixExample>& train_mixtures,
                          const StageConfig& cfg, const DataOptions& data,
                          int num_sources, int num_threads = 1,
                          std::ostream* log = nullptr);

// Forward each original mixture (not a sum of two) through the teacher and
// keep the C highest-energy output channels, quantized. Examples where any
// kept channel has energy below 1e-6 x mixture energy are dropped with a
// warning.
std::vector<PseudoExample> generate_pseudo_targets(
    const SeparatorParams& teacher_params, const SeparatorConfig& teacher_cfg,
    const std::vector<MixExample>& mixtures, int num_sources,
    std::vector<std::string>* warnings = nullptr, int num_threads = 1);

// Permutation-invariant training against fixed pseudo-targets.
TrainOutput train_student(const std::vector<PseudoExample>& pseudo,
                          const StageConfig& cfg, int num_threads = 1,
                          std::ostream* log = nullptr);

// Continue training the loaded parameters on labeled pairs; all layers stay
// trainable and the optimizer state starts fresh. cfg.separator must match
// the checkpoint's architecture. Zero epochs returns the parameters as-is.
TrainOutput finetune(const SeparatorParams& init_params,
                     const SeparatorConfig& init_cfg,
                     const std::vector<MixExample>& supervised,
                     const StageConfig& cfg, int num_threads = 1,
                     std::ostream* log = nullptr);

// Train a differently-dimensioned network against the frozen teacher's
// direct outputs (teacher M == C, no selection) on unlabeled mixtures.
TrainOutput distill(const SeparatorParams& teacher_params,
                    const SeparatorConfig& teacher_cfg,
                    const std::vector<MixExample>& unlabeled,
                    const StageConfig& cfg, int num_threads = 1,
                    std::ostream* log = nullptr);

enum class SelectionMode { direct, energy, oracle };

SelectionMode selection_mode_from_string(const std::string& name);
std::string selection_mode_to_string(SelectionMode mode);

struct EvalReport {
  std::vector<std::string> ids;
  std::vector<double> per_utterance_si_snri_db;
  double mean_si_snri_db = 0.0;
  std::string model_id;
  std::string dataset_id;
  SelectionMode mode = SelectionMode::direct;
};

// Forward each full test utterance, pick C channels per the mode (direct
// needs M == C; energy and oracle need M > C), and score the best-matching
// channel/reference pairing by mean SI-SNR improvement over the mixture.
EvalReport evaluate(const SeparatorParams& params, const SeparatorConfig& config,
                    const std::vector<MixExample>& test, SelectionMode mode,
                    const std::string& model_id = "",
                    const std::string& dataset_id = "", int num_threads = 1);

// CSV writers; all floats use %.17g so files are bitwise stable.
void write_curve_csv(const std::vector<CurvePoint>& curve,
                     const std::string& path);
void write_eval_csv(const EvalReport& report, const std::string& path);

}  // namespace tsmix

#endif  // TSMIX_PIPELINE_H_
