// include/tsmix/config.h

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

#ifndef TSMIX_CONFIG_H_
#define TSMIX_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tsmix/datagen.h"
#include "tsmix/pipeline.h"

namespace tsmix {

// The whole experiment in one JSON file. Every random stream is derived from
// the single master seed (see derive_seeds), so one (config, seed) pair pins
// the entire pipeline; stage sections carry no seeds of their own.
struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  std::string workdir = "work";
  int num_sources = 2;

  CorpusSpec corpus;
  PairStrategy strategy = PairStrategy::one_or_two_src;
  double single_fraction = 0.10;
  double supervised_fraction = 0.10;

  StageConfig teacher;
  StageConfig student;
  StageConfig finetune;
  StageConfig distill;

  std::vector<SelectionMode> teacher_eval_modes = {SelectionMode::energy,
                                                   SelectionMode::oracle};

  std::uint64_t remix_seed = 0;  // derived

  // Fill all derived seeds from master_seed. Called by load_experiment_config
  // and again by the CLI after a --seed override.
  void derive_seeds();

  void validate() const;
};

// Parse, derive seeds, validate. Unknown keys anywhere are errors.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace tsmix

#endif  // TSMIX_CONFIG_H_
