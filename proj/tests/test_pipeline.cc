// tests/test_pipeline.cc

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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.h"
#include "tsmix/datagen.h"
#include "tsmix/error.h"
#include "tsmix/pipeline.h"
#include "tsmix/rng.h"
#include "tsmix/separator.h"
#include "tsmix/signal.h"

using namespace tsmix;

namespace {

const LossSpec kThresh{LossKind::thresholded_snr, 30.0, 1e-12};

// Family-structured corpus small enough for unit-test training runs.
std::vector<MixExample> toy_split(int num_train, int num_test,
                                  const std::string& split,
                                  std::uint64_t seed = 2026) {
  CorpusSpec spec;
  spec.num_train = num_train;
  spec.num_test = num_test;
  spec.duration_s = 0.5;
  spec.seed = seed;
  return realize_split(build_corpus_manifest(spec), split, ".");
}

SeparatorConfig micro_separator(int num_outputs) {
  SeparatorConfig sep;
  sep.num_filters = 12;
  sep.kernel_len = 16;
  sep.stride = 8;
  sep.hidden_dim = 24;
  sep.num_hidden_layers = 2;
  sep.num_outputs = num_outputs;
  sep.mixture_consistency = true;
  sep.mask_activation = MaskActivation::sigmoid;
  return sep;
}

StageConfig stage_config(StageKind stage, int num_outputs, int epochs,
                         std::uint64_t seed) {
  StageConfig cfg;
  cfg.stage = stage;
  cfg.separator = micro_separator(num_outputs);
  cfg.separator.seed = mix_seed(seed, 1);
  cfg.epochs = epochs;
  cfg.batch_size = 2;
  cfg.lr = 5e-3;
  cfg.loss = kThresh;
  cfg.seed = seed;
  cfg.segment_seconds = 0.5;
  return cfg;
}

double epoch_mean(const std::vector<CurvePoint>& curve, int epoch) {
  double sum = 0.0;
  int n = 0;
  for (const CurvePoint& p : curve) {
    if (p.epoch == epoch) {
      sum += p.loss_db;
      ++n;
    }
  }
  REQUIRE(n > 0);
  return sum / n;
}

std::vector<PseudoExample> oracle_pseudo(const std::vector<MixExample>& mixtures) {
  std::vector<PseudoExample> out;
  for (const MixExample& m : mixtures) {
    REQUIRE(m.references.has_value());
    std::vector<Waveform> targets;
    for (std::size_t i = 0; i < m.references->count(); ++i) {
      targets.push_back(quantize_pcm16((*m.references)[i]));
    }
    out.push_back(PseudoExample{m.id, m.mixture,
                                SourceStack(std::move(targets)), {0, 1}});
  }
  return out;
}

}  // namespace

TEST_CASE("stage config validation enforces channel-count rules") {
  StageConfig teacher = stage_config(StageKind::teacher, 4, 1, 5);
  CHECK_NOTHROW(teacher.validate(2));
  teacher.separator.num_outputs = 3;  // < 2*C
  CHECK_THROWS_AS(teacher.validate(2), Error);
  teacher.separator.num_outputs = 4;
  teacher.separator.mixture_consistency = false;
  CHECK_THROWS_AS(teacher.validate(2), Error);

  StageConfig student = stage_config(StageKind::student, 4, 1, 5);
  CHECK_THROWS_AS(student.validate(2), Error);  // M != C
  student.separator.num_outputs = 2;
  CHECK_NOTHROW(student.validate(2));
  student.batch_size = 0;
  CHECK_THROWS_AS(student.validate(2), Error);
  student.batch_size = 4;
  student.lr = 0.0;
  CHECK_THROWS_AS(student.validate(2), Error);
}

TEST_CASE("one mixture pair and one epoch yield exactly one step") {
  std::vector<MixExample> train = toy_split(2, 1, "train");
  StageConfig cfg = stage_config(StageKind::teacher, 4, 1, 11);
  DataOptions data{PairStrategy::two_src, 0.0, 77};
  TrainOutput out = train_teacher(train, cfg, data, 2);
  REQUIRE(out.curve.size() == 1);
  CHECK(out.curve[0].step == 1);
  CHECK(out.curve[0].epoch == 0);
  CHECK(std::isfinite(out.curve[0].loss_db));
  CHECK(out.config.num_outputs == 4);
}

TEST_CASE("teacher training is bitwise reproducible") {
  std::vector<MixExample> train = toy_split(8, 1, "train");
  StageConfig cfg = stage_config(StageKind::teacher, 4, 2, 13);
  DataOptions data{PairStrategy::one_or_two_src, 0.25, 99};
  std::ostringstream log_a, log_b;
  TrainOutput a = train_teacher(train, cfg, data, 2, 1, &log_a);
  TrainOutput b = train_teacher(train, cfg, data, 2, 1, &log_b);
  CHECK(a.params.values == b.params.values);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].loss_db == b.curve[i].loss_db);
  }
  // Thread count must not change the arithmetic.
  TrainOutput c = train_teacher(train, cfg, data, 2, 3);
  CHECK(a.params.values == c.params.values);
}

TEST_CASE("teacher loss improves by the pilot margin on the toy corpus") {
  std::vector<MixExample> train = toy_split(16, 1, "train");
  StageConfig cfg = stage_config(StageKind::teacher, 4, 60, 17);
  DataOptions data{PairStrategy::one_or_two_src, 0.10, 1717};
  TrainOutput out = train_teacher(train, cfg, data, 2);
  double first = epoch_mean(out.curve, 0);
  double last = epoch_mean(out.curve, cfg.epochs - 1);
  CHECK(last <= first - 3.0);
}

TEST_CASE("train_teacher rejects wrong stage or tiny corpora") {
  std::vector<MixExample> train = toy_split(2, 1, "train");
  StageConfig cfg = stage_config(StageKind::student, 2, 1, 3);
  DataOptions data{PairStrategy::two_src, 0.0, 5};
  CHECK_THROWS_AS(train_teacher(train, cfg, data, 2), Error);
  StageConfig ok = stage_config(StageKind::teacher, 4, 1, 3);
  CHECK_THROWS_AS(train_teacher({train[0]}, ok, data, 2), Error);
}

TEST_CASE("pseudo-target generation selects quantized top-energy channels") {
  std::vector<MixExample> train = toy_split(6, 1, "train");
  SeparatorConfig teacher_cfg = micro_separator(4);
  teacher_cfg.seed = 404;
  SeparatorParams teacher = init_params(teacher_cfg);
  std::vector<std::string> warnings;
  std::vector<PseudoExample> pseudo =
      generate_pseudo_targets(teacher, teacher_cfg, train, 2, &warnings);
  REQUIRE(pseudo.size() == 6);
  CHECK(warnings.empty());
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const PseudoExample& p = pseudo[i];
    CHECK(p.id == train[i].id);
    REQUIRE(p.targets.count() == 2);
    CHECK(p.targets.length() == train[i].mixture.size());
    REQUIRE(p.selected_indices.size() == 2);
    // Every stored sample sits on the 16-bit grid.
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t t = 0; t < p.targets.length(); t += 97) {
        CHECK(p.targets[c][t] == quantize_pcm16(p.targets[c][t]));
      }
    }
    // The audit trail re-derives: quantized forward outputs, top-2 energy.
    SourceStack outs = forward(teacher, teacher_cfg, train[i].mixture);
    std::vector<Waveform> q;
    for (std::size_t c = 0; c < outs.count(); ++c) {
      q.push_back(quantize_pcm16(outs[c]));
    }
    EnergySelection sel = select_top_energy(SourceStack(std::move(q)), 2);
    CHECK(p.selected_indices == sel.indices);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t t = 0; t < p.targets.length(); ++t) {
        CHECK(p.targets[c][t] == sel.selected[c][t]);
      }
    }
  }
}

TEST_CASE("degenerate teachers drop their examples with warnings") {
  std::vector<MixExample> train = toy_split(3, 1, "train");
  SeparatorConfig cfg = micro_separator(4);
  cfg.mixture_consistency = false;  // let the zero network emit silence
  SeparatorParams zero = init_params(cfg);
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  std::vector<std::string> warnings;
  std::vector<PseudoExample> pseudo =
      generate_pseudo_targets(zero, cfg, train, 2, &warnings);
  CHECK(pseudo.empty());
  CHECK(warnings.size() == 3);
  CHECK(warnings[0].find("dropped") != std::string::npos);
}

TEST_CASE("student trains to the pilot loss on oracle pseudo-targets") {
  std::vector<MixExample> train = toy_split(16, 1, "train");
  std::vector<PseudoExample> pseudo = oracle_pseudo(train);
  StageConfig cfg = stage_config(StageKind::student, 2, 30, 23);
  TrainOutput out = train_student(pseudo, cfg);
  double last = epoch_mean(out.curve, cfg.epochs - 1);
  CHECK(last <= -20.0);
  // Structural: the trained model still emits exactly 2 channels.
  Rng rng(12001);
  CHECK(forward(out.params, out.config, oracle::random_wave(rng, 500)).count() ==
        2);
}

TEST_CASE("student stage rejects target-count mismatches") {
  std::vector<MixExample> train = toy_split(2, 1, "train");
  std::vector<PseudoExample> pseudo = oracle_pseudo(train);
  StageConfig cfg = stage_config(StageKind::student, 3, 1, 29);
  CHECK_THROWS_AS(train_student(pseudo, cfg, 1), Error);  // M=3 vs C=2 targets
  CHECK_THROWS_AS(train_student({}, stage_config(StageKind::student, 2, 1, 29)),
                  Error);
}

TEST_CASE("zero fine-tuning epochs return the input parameters") {
  std::vector<MixExample> train = toy_split(4, 1, "train");
  StageConfig student_cfg = stage_config(StageKind::student, 2, 1, 31);
  TrainOutput student = train_student(oracle_pseudo(train), student_cfg);
  StageConfig ft_cfg = stage_config(StageKind::finetune, 2, 0, 37);
  ft_cfg.separator = student.config;
  TrainOutput ft = finetune(student.params, student.config, train, ft_cfg);
  CHECK(ft.params.values == student.params.values);
  CHECK(ft.curve.empty());
}

TEST_CASE("fine-tuning continues from the loaded parameters and improves") {
  std::vector<MixExample> train = toy_split(8, 1, "train");
  StageConfig student_cfg = stage_config(StageKind::student, 2, 4, 41);
  TrainOutput student = train_student(oracle_pseudo(train), student_cfg);

  StageConfig ft_cfg = stage_config(StageKind::finetune, 2, 8, 43);
  ft_cfg.separator = student.config;
  TrainOutput ft = finetune(student.params, student.config, train, ft_cfg);
  CHECK(ft.params.values != student.params.values);
  double before = epoch_mean(ft.curve, 0);
  double after = epoch_mean(ft.curve, ft_cfg.epochs - 1);
  CHECK(after <= before + 1e-9);  // supervised loss keeps falling

  // Architecture mismatch is rejected outright.
  StageConfig wrong = ft_cfg;
  wrong.separator.hidden_dim += 1;
  CHECK_THROWS_AS(finetune(student.params, student.config, train, wrong),
                  Error);
}

TEST_CASE("distillation freezes the teacher and fits its outputs") {
  std::vector<MixExample> train = toy_split(12, 1, "train");
  // Teacher: a student-shaped model with fixed random weights.
  SeparatorConfig teacher_cfg = micro_separator(2);
  teacher_cfg.seed = 51;
  SeparatorParams teacher = init_params(teacher_cfg);
  std::vector<double> teacher_before = teacher.values;

  StageConfig distill_cfg = stage_config(StageKind::distill, 2, 20, 53);
  distill_cfg.separator.hidden_dim = 32;       // architecture B
  distill_cfg.separator.num_hidden_layers = 3;
  TrainOutput out = distill(teacher, teacher_cfg, train, distill_cfg);
  CHECK(teacher.values == teacher_before);  // frozen contract
  double last = epoch_mean(out.curve, distill_cfg.epochs - 1);
  CHECK(last <= -15.0);

  // Same dimensions are rejected: distillation must change architecture.
  StageConfig same = stage_config(StageKind::distill, 2, 1, 57);
  CHECK_THROWS_AS(distill(teacher, teacher_cfg, train, same), Error);
  // A teacher with M != C cannot provide direct targets.
  SeparatorConfig wide = micro_separator(4);
  CHECK_THROWS_AS(distill(init_params(wide), wide, train, distill_cfg), Error);
}

TEST_CASE("evaluation of the passthrough model scores zero improvement") {
  std::vector<MixExample> test = toy_split(2, 4, "test");
  SeparatorConfig cfg = micro_separator(2);
  SeparatorParams zero = init_params(cfg);
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  // Zero weights + consistency: every output channel is exactly x / 2, which
  // SI-SNR treats as the mixture itself.
  EvalReport report = evaluate(zero, cfg, test, SelectionMode::direct);
  REQUIRE(report.per_utterance_si_snri_db.size() == 4);
  for (double v : report.per_utterance_si_snri_db) {
    CHECK(std::abs(v) <= 1e-6);
  }
  CHECK(std::abs(report.mean_si_snri_db) <= 1e-6);
}

TEST_CASE("evaluation reports the arithmetic mean and respects modes") {
  std::vector<MixExample> test = toy_split(2, 6, "test");
  SeparatorConfig teacher_cfg = micro_separator(4);
  teacher_cfg.seed = 61;
  SeparatorParams teacher = init_params(teacher_cfg);

  EvalReport energy = evaluate(teacher, teacher_cfg, test,
                               SelectionMode::energy, "teacher", "toy-test");
  EvalReport oracle_mode = evaluate(teacher, teacher_cfg, test,
                                    SelectionMode::oracle, "teacher", "toy-test");
  REQUIRE(energy.per_utterance_si_snri_db.size() == 6);
  double sum = 0.0;
  for (double v : energy.per_utterance_si_snri_db) sum += v;
  CHECK(std::abs(energy.mean_si_snri_db - sum / 6.0) <= 1e-12);
  CHECK(energy.model_id == "teacher");
  CHECK(energy.dataset_id == "toy-test");

  // Oracle search includes the energy-selected tuple, so it wins everywhere.
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(oracle_mode.per_utterance_si_snri_db[i] >=
          energy.per_utterance_si_snri_db[i] - 1e-12);
  }
  CHECK(oracle_mode.mean_si_snri_db >= energy.mean_si_snri_db - 1e-12);

  // Mode/channel-count mismatches are rejected.
  CHECK_THROWS_AS(evaluate(teacher, teacher_cfg, test, SelectionMode::direct),
                  Error);
  SeparatorConfig narrow = micro_separator(2);
  SeparatorParams np = init_params(narrow);
  CHECK_THROWS_AS(evaluate(np, narrow, test, SelectionMode::energy), Error);
  CHECK_THROWS_AS(
      evaluate(teacher, teacher_cfg, std::vector<MixExample>{},
               SelectionMode::energy),
      Error);
}

TEST_CASE("a near-perfect model evaluates far above the passthrough") {
  std::vector<MixExample> train = toy_split(16, 4, "train", 2027);
  std::vector<MixExample> test = toy_split(16, 4, "test", 2027);
  StageConfig cfg = stage_config(StageKind::student, 2, 30, 67);
  TrainOutput student = train_student(oracle_pseudo(train), cfg);
  EvalReport report =
      evaluate(student.params, student.config, test, SelectionMode::direct);
  CHECK(report.mean_si_snri_db >= 3.0);
}

TEST_CASE("csv writers emit stable headers and full-precision floats") {
  std::vector<CurvePoint> curve{{1, 0, -7.25}, {2, 0, -8.5},
                                {3, 1, -9.0625}};
  std::string cpath =
      (std::filesystem::temp_directory_path() / "tsmix_curve.csv").string();
  write_curve_csv(curve, cpath);
  std::ifstream cin_file(cpath);
  std::string line;
  std::getline(cin_file, line);
  CHECK(line == "step,epoch,loss_db");
  std::getline(cin_file, line);
  CHECK(line == "1,0,-7.25");
  std::getline(cin_file, line);
  CHECK(line == "2,0,-8.5");

  EvalReport report;
  report.ids = {"a", "b"};
  report.per_utterance_si_snri_db = {1.5, 2.5};
  report.mean_si_snri_db = 2.0;
  std::string epath =
      (std::filesystem::temp_directory_path() / "tsmix_eval.csv").string();
  write_eval_csv(report, epath);
  std::ifstream ein(epath);
  std::getline(ein, line);
  CHECK(line == "id,si_snri_db");
  std::getline(ein, line);
  CHECK(line == "a,1.5");
  std::getline(ein, line);
  CHECK(line == "b,2.5");
  std::getline(ein, line);
  CHECK(line == "mean,2");
  std::remove(cpath.c_str());
  std::remove(epath.c_str());
}

TEST_CASE("non-finite losses abort with the example index") {
  std::vector<MixExample> train = toy_split(2, 1, "train");
  SeparatorConfig cfg = micro_separator(4);
  SeparatorParams params = init_params(cfg);
  std::fill(params.values.begin(), params.values.end(), 1e200);
  std::vector<MixitExample> batch{
      MixitExample{train[0].mixture, train[1].mixture}};
  CHECK_THROWS_AS(loss_and_grad(params, cfg, batch, kThresh), Error);
}
