// src/config.cc

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

#include "tsmix/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsmix/error.h"
#include "tsmix/rng.h"

namespace tsmix {

namespace {

using nlohmann::json;

// Seed-stream ids hanging off the master seed.
enum : std::uint64_t {
  kStreamCorpus = 1,
  kStreamRemix = 2,
  kStreamTeacher = 3,
  kStreamStudent = 4,
  kStreamFinetune = 5,
  kStreamDistill = 6,
};

// Stream id for a stage's parameter initialization, derived from the stage
// seed (stream 2 off the stage seed is the batch order; see pipeline).
constexpr std::uint64_t kStageInitStream = 1;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  raise(ErrorKind::config, "config: " + where + ": " + msg);
}

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected a JSON object");
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      fail(where, "unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& where, const std::string& key,
         T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(where, "bad value for '" + key + "': " + e.what());
  }
}

SeparatorConfig parse_separator(const json& j, const std::string& where) {
  check_keys(j, where,
             {"num_filters", "kernel_len", "stride", "hidden_dim",
              "num_hidden_layers", "num_outputs", "mixture_consistency",
              "mask_activation"});
  SeparatorConfig cfg;
  cfg.num_filters = get_or(j, where, "num_filters", cfg.num_filters);
  cfg.kernel_len = get_or(j, where, "kernel_len", cfg.kernel_len);
  cfg.stride = get_or(j, where, "stride", cfg.stride);
  cfg.hidden_dim = get_or(j, where, "hidden_dim", cfg.hidden_dim);
  cfg.num_hidden_layers =
      get_or(j, where, "num_hidden_layers", cfg.num_hidden_layers);
  cfg.num_outputs = get_or(j, where, "num_outputs", cfg.num_outputs);
  cfg.mixture_consistency =
      get_or(j, where, "mixture_consistency", cfg.mixture_consistency);
  const std::string act =
      get_or<std::string>(j, where, "mask_activation", "sigmoid");
  if (act == "sigmoid") {
    cfg.mask_activation = MaskActivation::sigmoid;
  } else if (act == "relu") {
    cfg.mask_activation = MaskActivation::relu;
  } else {
    fail(where, "mask_activation must be 'sigmoid' or 'relu', got '" + act + "'");
  }
  return cfg;
}

LossSpec parse_loss(const json& j, const std::string& where,
                    const LossSpec& fallback) {
  check_keys(j, where, {"kind", "snr_max_db", "epsilon"});
  LossSpec spec = fallback;
  if (j.contains("kind")) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "thresholded_snr") {
      spec.kind = LossKind::thresholded_snr;
    } else if (kind == "si_snr_negative") {
      spec.kind = LossKind::si_snr_negative;
    } else {
      fail(where, "loss kind must be 'thresholded_snr' or 'si_snr_negative'");
    }
  }
  spec.snr_max_db = get_or(j, where, "snr_max_db", spec.snr_max_db);
  spec.epsilon = get_or(j, where, "epsilon", spec.epsilon);
  return spec;
}

StageConfig parse_stage(const json& j, const std::string& where,
                        StageKind stage, const LossSpec& default_loss,
                        const SeparatorConfig* default_separator) {
  check_keys(j, where,
             {"separator", "epochs", "batch_size", "lr", "loss",
              "segment_seconds"});
  StageConfig cfg;
  cfg.stage = stage;
  cfg.loss = default_loss;
  if (j.contains("separator")) {
    cfg.separator = parse_separator(j.at("separator"), where + ".separator");
  } else if (default_separator != nullptr) {
    cfg.separator = *default_separator;
  } else {
    fail(where, "missing 'separator' section");
  }
  cfg.epochs = get_or(j, where, "epochs", cfg.epochs);
  cfg.batch_size = get_or(j, where, "batch_size", cfg.batch_size);
  cfg.lr = get_or(j, where, "lr", cfg.lr);
  cfg.segment_seconds = get_or(j, where, "segment_seconds", cfg.segment_seconds);
  if (j.contains("loss")) {
    cfg.loss = parse_loss(j.at("loss"), where + ".loss", default_loss);
  }
  return cfg;
}

}  // namespace

void ExperimentConfig::derive_seeds() {
  corpus.seed = mix_seed(master_seed, kStreamCorpus);
  remix_seed = mix_seed(master_seed, kStreamRemix);
  teacher.seed = mix_seed(master_seed, kStreamTeacher);
  student.seed = mix_seed(master_seed, kStreamStudent);
  finetune.seed = mix_seed(master_seed, kStreamFinetune);
  distill.seed = mix_seed(master_seed, kStreamDistill);
  teacher.separator.seed = mix_seed(teacher.seed, kStageInitStream);
  student.separator.seed = mix_seed(student.seed, kStageInitStream);
  finetune.separator.seed = mix_seed(finetune.seed, kStageInitStream);
  distill.separator.seed = mix_seed(distill.seed, kStageInitStream);
}

void ExperimentConfig::validate() const {
  if (num_sources < 1) {
    raise(ErrorKind::config, "config: num_sources must be >= 1");
  }
  if (!(single_fraction >= 0.0 && single_fraction <= 1.0)) {
    raise(ErrorKind::config, "config: single_fraction must be in [0, 1]");
  }
  if (!(supervised_fraction >= 0.0 && supervised_fraction <= 1.0)) {
    raise(ErrorKind::config, "config: supervised_fraction must be in [0, 1]");
  }
  if (corpus.num_train < 2) {
    raise(ErrorKind::config, "config: data.num_train must be >= 2");
  }
  if (corpus.num_test < 1) {
    raise(ErrorKind::config, "config: data.num_test must be >= 1");
  }
  teacher.validate(num_sources);
  student.validate(num_sources);
  finetune.validate(num_sources);
  distill.validate(num_sources);
  if (workdir.empty()) {
    raise(ErrorKind::config, "config: workdir must not be empty");
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::config, "config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorKind::config, "config: " + path + ": invalid JSON: " + e.what());
  }
  check_keys(j, path,
             {"seed", "workdir", "num_sources", "data", "loss", "teacher",
              "student", "finetune", "distill", "eval"});
  ExperimentConfig cfg;
  cfg.master_seed = get_or<std::uint64_t>(j, path, "seed", 0);
  cfg.workdir = get_or<std::string>(j, path, "workdir", cfg.workdir);
  cfg.num_sources = get_or(j, path, "num_sources", cfg.num_sources);

  if (j.contains("data")) {
    const json& d = j.at("data");
    const std::string where = path + ".data";
    check_keys(d, where,
               {"num_train", "num_test", "duration_s", "sample_rate",
                "gain_range_db", "strategy", "single_fraction",
                "supervised_fraction"});
    cfg.corpus.num_train = get_or(d, where, "num_train", cfg.corpus.num_train);
    cfg.corpus.num_test = get_or(d, where, "num_test", cfg.corpus.num_test);
    cfg.corpus.duration_s = get_or(d, where, "duration_s", cfg.corpus.duration_s);
    cfg.corpus.sample_rate =
        get_or(d, where, "sample_rate", cfg.corpus.sample_rate);
    cfg.corpus.gain_range_db =
        get_or(d, where, "gain_range_db", cfg.corpus.gain_range_db);
    if (d.contains("strategy")) {
      cfg.strategy = strategy_from_string(d.at("strategy").get<std::string>());
    }
    cfg.single_fraction =
        get_or(d, where, "single_fraction", cfg.single_fraction);
    cfg.supervised_fraction =
        get_or(d, where, "supervised_fraction", cfg.supervised_fraction);
  }

  LossSpec default_loss;
  if (j.contains("loss")) {
    default_loss = parse_loss(j.at("loss"), path + ".loss", default_loss);
  }

  for (const char* name : {"teacher", "student", "finetune", "distill"}) {
    if (!j.contains(name)) {
      raise(ErrorKind::config,
            "config: " + path + ": missing stage section '" + name + "'");
    }
  }
  cfg.teacher = parse_stage(j.at("teacher"), path + ".teacher",
                            StageKind::teacher, default_loss, nullptr);
  cfg.student = parse_stage(j.at("student"), path + ".student",
                            StageKind::student, default_loss, nullptr);
  // Fine-tuning continues the student checkpoint, so its architecture
  // defaults to the student's.
  cfg.finetune = parse_stage(j.at("finetune"), path + ".finetune",
                             StageKind::finetune, default_loss,
                             &cfg.student.separator);
  cfg.distill = parse_stage(j.at("distill"), path + ".distill",
                            StageKind::distill, default_loss, nullptr);

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, path + ".eval", {"teacher_modes"});
    if (e.contains("teacher_modes")) {
      cfg.teacher_eval_modes.clear();
      for (const auto& m : e.at("teacher_modes")) {
        cfg.teacher_eval_modes.push_back(
            selection_mode_from_string(m.get<std::string>()));
      }
    }
  }

  cfg.derive_seeds();
  cfg.validate();
  return cfg;
}

}  // namespace tsmix
