// tests/test_config.cc

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

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "tsmix/config.h"
#include "tsmix/error.h"
#include "tsmix/rng.h"

using namespace tsmix;

namespace {

std::string write_temp_config(const std::string& name, const std::string& body) {
  std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << body;
  return path;
}

const char* kMinimalConfig = R"json({
  "seed": 42,
  "workdir": "work",
  "num_sources": 2,
  "data": {
    "num_train": 8,
    "num_test": 2,
    "duration_s": 0.5,
    "sample_rate": 8000,
    "gain_range_db": 3.0,
    "strategy": "one_or_two_src",
    "single_fraction": 0.25,
    "supervised_fraction": 0.5
  },
  "loss": {"kind": "thresholded_snr", "snr_max_db": 30.0},
  "teacher": {
    "separator": {"num_filters": 8, "kernel_len": 8, "stride": 4,
                  "hidden_dim": 12, "num_hidden_layers": 1,
                  "num_outputs": 4, "mixture_consistency": true,
                  "mask_activation": "sigmoid"},
    "epochs": 2, "batch_size": 2, "lr": 0.001, "segment_seconds": 0.5
  },
  "student": {
    "separator": {"num_filters": 8, "kernel_len": 8, "stride": 4,
                  "hidden_dim": 12, "num_hidden_layers": 1,
                  "num_outputs": 2, "mixture_consistency": true,
                  "mask_activation": "sigmoid"},
    "epochs": 2, "batch_size": 2, "lr": 0.001, "segment_seconds": 0.5
  },
  "finetune": {"epochs": 1, "batch_size": 2, "lr": 0.0005,
               "segment_seconds": 0.5},
  "distill": {
    "separator": {"num_filters": 8, "kernel_len": 8, "stride": 4,
                  "hidden_dim": 16, "num_hidden_layers": 2,
                  "num_outputs": 2, "mixture_consistency": true,
                  "mask_activation": "sigmoid"},
    "epochs": 2, "batch_size": 2, "lr": 0.001, "segment_seconds": 0.5
  },
  "eval": {"teacher_modes": ["energy", "oracle"]}
})json";

}  // namespace

TEST_CASE("experiment config loads with all derived seeds distinct") {
  std::string path = write_temp_config("tsmix_cfg_ok.json", kMinimalConfig);
  ExperimentConfig cfg = load_experiment_config(path);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.workdir == "work");
  CHECK(cfg.num_sources == 2);
  CHECK(cfg.corpus.num_train == 8);
  CHECK(cfg.corpus.num_test == 2);
  CHECK(cfg.strategy == PairStrategy::one_or_two_src);
  CHECK(cfg.single_fraction == 0.25);
  CHECK(cfg.supervised_fraction == 0.5);
  CHECK(cfg.teacher.stage == StageKind::teacher);
  CHECK(cfg.teacher.separator.num_outputs == 4);
  CHECK(cfg.student.separator.num_outputs == 2);
  CHECK(cfg.finetune.lr == 0.0005);
  // Fine-tune inherits the student architecture when none is given.
  CHECK(cfg.finetune.separator.hidden_dim == 12);
  CHECK(cfg.finetune.separator.num_outputs == 2);
  CHECK(cfg.distill.separator.hidden_dim == 16);
  REQUIRE(cfg.teacher_eval_modes.size() == 2);
  CHECK(cfg.teacher_eval_modes[0] == SelectionMode::energy);

  // Every stream seed is a distinct deterministic function of the master.
  std::set<std::uint64_t> seeds{cfg.corpus.seed,    cfg.remix_seed,
                                cfg.teacher.seed,   cfg.student.seed,
                                cfg.finetune.seed,  cfg.distill.seed};
  CHECK(seeds.size() == 6);
  CHECK(cfg.teacher.separator.seed == mix_seed(cfg.teacher.seed, 1));
  CHECK(cfg.student.separator.seed == mix_seed(cfg.student.seed, 1));

  ExperimentConfig again = load_experiment_config(path);
  CHECK(again.corpus.seed == cfg.corpus.seed);
  CHECK(again.teacher.seed == cfg.teacher.seed);

  // A different master seed shifts every stream.
  again.master_seed = 43;
  again.derive_seeds();
  CHECK(again.corpus.seed != cfg.corpus.seed);
  CHECK(again.teacher.seed != cfg.teacher.seed);
  std::remove(path.c_str());
}

TEST_CASE("unknown config keys are rejected wherever they appear") {
  std::string top = kMinimalConfig;
  top.insert(top.rfind('}'), ",\n  \"typo_key\": 1\n");
  std::string p1 = write_temp_config("tsmix_cfg_top.json", top);
  CHECK_THROWS_AS(load_experiment_config(p1), Error);
  std::remove(p1.c_str());

  std::string sep = kMinimalConfig;
  const std::string needle = "\"mask_activation\": \"sigmoid\"}";
  sep.replace(sep.find(needle), needle.size(),
              "\"mask_activation\": \"sigmoid\", \"seed\": 7}");
  std::string p2 = write_temp_config("tsmix_cfg_sep.json", sep);
  CHECK_THROWS_AS(load_experiment_config(p2), Error);  // seeds are derived
  std::remove(p2.c_str());

  std::string data = kMinimalConfig;
  const std::string dkey = "\"num_train\": 8,";
  data.replace(data.find(dkey), dkey.size(),
               "\"num_train\": 8, \"num_trian\": 8,");
  std::string p3 = write_temp_config("tsmix_cfg_data.json", data);
  CHECK_THROWS_AS(load_experiment_config(p3), Error);
  std::remove(p3.c_str());
}

TEST_CASE("config validation catches structural mistakes") {
  std::string path = write_temp_config("tsmix_cfg_base.json", kMinimalConfig);
  ExperimentConfig cfg = load_experiment_config(path);
  std::remove(path.c_str());

  ExperimentConfig bad = cfg;
  bad.single_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.supervised_fraction = -0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.corpus.num_train = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.corpus.num_test = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.workdir.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.teacher.separator.num_outputs = 2;  // teacher must over-separate
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("stage loss sections override the top-level default") {
  std::string body = kMinimalConfig;
  const std::string needle = "\"finetune\": {";
  body.replace(body.find(needle), needle.size(),
               "\"finetune\": {\"loss\": {\"kind\": \"si_snr_negative\"}, ");
  std::string path = write_temp_config("tsmix_cfg_loss.json", body);
  ExperimentConfig cfg = load_experiment_config(path);
  CHECK(cfg.teacher.loss.kind == LossKind::thresholded_snr);
  CHECK(cfg.finetune.loss.kind == LossKind::si_snr_negative);
  CHECK(cfg.teacher.loss.snr_max_db == 30.0);
  std::remove(path.c_str());
}

TEST_CASE("malformed json and missing files fail with io errors") {
  std::string path = write_temp_config("tsmix_cfg_bad.json", "{not json");
  CHECK_THROWS_AS(load_experiment_config(path), Error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/tsmix.json"), Error);
}
