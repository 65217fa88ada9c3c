// src/pipeline.cc

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

#include "tsmix/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tsmix/assign.h"
#include "tsmix/error.h"
#include "tsmix/parallel.h"
#include "tsmix/rng.h"

namespace tsmix {

namespace {

// Seed-stream ids, so the batch-order stream never collides with the
// data-pairing or init streams derived from the same stage seed.
constexpr std::uint64_t kBatchOrderStream = 2;

constexpr double kMinPseudoEnergyRatio = 1e-6;

std::uint64_t epoch_order_seed(std::uint64_t stage_seed, int epoch) {
  return mix_seed(mix_seed(stage_seed, kBatchOrderStream),
                  static_cast<std::uint64_t>(epoch));
}

void log_line(std::ostream* log, const std::string& line) {
  if (log != nullptr) (*log) << line << "\n";
}

bool same_architecture(const SeparatorConfig& a, const SeparatorConfig& b) {
  return a.num_filters == b.num_filters && a.kernel_len == b.kernel_len &&
         a.stride == b.stride && a.hidden_dim == b.hidden_dim &&
         a.num_hidden_layers == b.num_hidden_layers &&
         a.num_outputs == b.num_outputs &&
         a.mixture_consistency == b.mixture_consistency &&
         a.mask_activation == b.mask_activation;
}

bool same_dimensions(const SeparatorConfig& a, const SeparatorConfig& b) {
  return a.num_filters == b.num_filters && a.kernel_len == b.kernel_len &&
         a.stride == b.stride && a.hidden_dim == b.hidden_dim &&
         a.num_hidden_layers == b.num_hidden_layers;
}

// Cut two equal-length waveforms into aligned segments (zero-padded tails
// kept) and pair them up.
std::vector<MixitExample> segment_mixit(const Waveform& x1, const Waveform& x2,
                                        double seg_seconds) {
  std::vector<Waveform> a = segment(x1, seg_seconds, /*drop_last=*/false);
  std::vector<Waveform> b = segment(x2, seg_seconds, /*drop_last=*/false);
  std::vector<MixitExample> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(MixitExample{std::move(a[i]), std::move(b[i])});
  }
  return out;
}

// Same segmentation applied jointly to a mixture and its references, so the
// channel correspondence survives the cut.
std::vector<PitExample> segment_pit(const Waveform& mixture,
                                    const SourceStack& refs,
                                    double seg_seconds) {
  std::vector<Waveform> mix_segs = segment(mixture, seg_seconds, false);
  std::vector<std::vector<Waveform>> ref_segs;
  ref_segs.reserve(refs.count());
  for (std::size_t c = 0; c < refs.count(); ++c) {
    ref_segs.push_back(segment(refs[c], seg_seconds, false));
  }
  std::vector<PitExample> out;
  out.reserve(mix_segs.size());
  for (std::size_t s = 0; s < mix_segs.size(); ++s) {
    std::vector<Waveform> chans;
    chans.reserve(refs.count());
    for (std::size_t c = 0; c < refs.count(); ++c) {
      chans.push_back(std::move(ref_segs[c][s]));
    }
    out.push_back(PitExample{std::move(mix_segs[s]), SourceStack(std::move(chans))});
  }
  return out;
}

template <typename Example>
std::vector<std::vector<Example>> make_batches(std::vector<Example> examples,
                                               std::uint64_t order_seed,
                                               int batch_size) {
  Rng rng(order_seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<Example>> batches;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Example> batch;
    batch.reserve(stop - start);
    for (std::size_t k = start; k < stop; ++k) {
      batch.push_back(std::move(examples[order[k]]));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

// Moving-average drift check on epoch means; advisory only.
void log_trend(const std::vector<double>& epoch_losses, std::ostream* log,
               const std::string& stage_name) {
  constexpr std::size_t kWindow = 5;
  if (epoch_losses.size() < 2 * kWindow) return;
  auto window_mean = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - kWindow; i < end; ++i) s += epoch_losses[i];
    return s / static_cast<double>(kWindow);
  };
  double prev = window_mean(kWindow);
  for (std::size_t end = kWindow + 1; end <= epoch_losses.size(); ++end) {
    const double cur = window_mean(end);
    if (cur > prev + 1e-9) {
      log_line(log, stage_name + ": note: 5-epoch moving-average loss rose at epoch " +
                        std::to_string(end - 1) + " (" + std::to_string(prev) +
                        " -> " + std::to_string(cur) + " dB)");
    }
    prev = cur;
  }
}

// One optimizer pass over pre-built per-epoch example sets. make_examples(e)
// returns the (already segmented) example list for epoch e.
template <typename Example, typename MakeExamples>
TrainOutput run_training(SeparatorParams params, const StageConfig& cfg,
                         MakeExamples&& make_examples, int num_threads,
                         std::ostream* log) {
  TrainOutput out{std::move(params), cfg.separator, {}};
  AdamState adam = AdamState::init(out.params.values.size(), cfg.lr);
  std::int64_t step = 0;
  std::vector<double> epoch_losses;
  const std::string stage_name = stage_to_string(cfg.stage);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Example> examples = make_examples(epoch);
    if (examples.empty()) {
      raise(ErrorKind::invalid_argument,
            stage_name + ": no training examples at epoch " +
                std::to_string(epoch));
    }
    std::vector<std::vector<Example>> batches = make_batches(
        std::move(examples), epoch_order_seed(cfg.seed, epoch), cfg.batch_size);
    double epoch_sum = 0.0;
    for (std::vector<Example>& batch : batches) {
      ++step;
      LossGrad lg;
      try {
        lg = loss_and_grad(out.params, cfg.separator, batch, cfg.loss,
                           num_threads);
      } catch (const Error& e) {
        raise(e.kind(), stage_name + ": epoch " + std::to_string(epoch) +
                            " step " + std::to_string(step) + ": " + e.what());
      }
      auto [next_params, next_adam] =
          adam_step(out.params, lg.grads, std::move(adam));
      out.params = std::move(next_params);
      adam = std::move(next_adam);
      out.curve.push_back(CurvePoint{step, epoch, lg.loss_db});
      epoch_sum += lg.loss_db;
    }
    epoch_losses.push_back(epoch_sum / static_cast<double>(batches.size()));
    log_line(log, stage_name + ": epoch " + std::to_string(epoch) +
                      " mean loss " + std::to_string(epoch_losses.back()) +
                      " dB (" + std::to_string(batches.size()) + " steps)");
  }
  log_trend(epoch_losses, log, stage_name);
  return out;
}

std::vector<PitExample> to_pit_examples(const std::vector<MixExample>& labeled,
                                        int num_outputs, double seg_seconds,
                                        const char* who) {
  std::vector<PitExample> out;
  for (const MixExample& ex : labeled) {
    if (!ex.references.has_value()) {
      raise(ErrorKind::prerequisite,
            std::string(who) + ": '" + ex.id + "' has no references");
    }
    if (static_cast<int>(ex.references->count()) != num_outputs) {
      raise(ErrorKind::invalid_argument,
            std::string(who) + ": '" + ex.id + "' has " +
                std::to_string(ex.references->count()) +
                " references but the model outputs " +
                std::to_string(num_outputs) + " channels");
    }
    std::vector<PitExample> segs =
        segment_pit(ex.mixture, *ex.references, seg_seconds);
    for (PitExample& s : segs) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

StageKind stage_from_string(const std::string& name) {
  if (name == "teacher") return StageKind::teacher;
  if (name == "student") return StageKind::student;
  if (name == "finetune") return StageKind::finetune;
  if (name == "distill") return StageKind::distill;
  raise(ErrorKind::invalid_argument, "unknown stage '" + name + "'");
}

std::string stage_to_string(StageKind stage) {
  switch (stage) {
    case StageKind::teacher: return "teacher";
    case StageKind::student: return "student";
    case StageKind::finetune: return "finetune";
    case StageKind::distill: return "distill";
  }
  raise(ErrorKind::invalid_argument, "unknown stage value");
}

void StageConfig::validate(int num_sources) const {
  separator.validate();
  if (num_sources < 1) {
    raise(ErrorKind::config, "stage config: num_sources must be >= 1");
  }
  if (epochs < 0) raise(ErrorKind::config, "stage config: negative epochs");
  if (batch_size < 1) raise(ErrorKind::config, "stage config: batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    raise(ErrorKind::config, "stage config: lr must be finite and > 0");
  }
  if (!(segment_seconds > 0.0)) {
    raise(ErrorKind::config, "stage config: segment_seconds must be > 0");
  }
  if (stage == StageKind::teacher) {
    if (separator.num_outputs < 2 * num_sources) {
      raise(ErrorKind::config,
            "teacher: num_outputs " + std::to_string(separator.num_outputs) +
                " must be >= 2 x num_sources (" +
                std::to_string(2 * num_sources) + ")");
    }
    if (!separator.mixture_consistency) {
      raise(ErrorKind::config, "teacher: mixture_consistency must be enabled");
    }
  } else {
    if (separator.num_outputs != num_sources) {
      raise(ErrorKind::config,
            stage_to_string(stage) + ": num_outputs " +
                std::to_string(separator.num_outputs) +
                " must equal num_sources " + std::to_string(num_sources));
    }
  }
}

TrainOutput train_teacher(const std::vector<MixExample>& train_mixtures,
                          const StageConfig& cfg, const DataOptions& data,
                          int num_sources, int num_threads, std::ostream* log) {
  if (cfg.stage != StageKind::teacher) {
    raise(ErrorKind::config, "train_teacher: stage config is not 'teacher'");
  }
  cfg.validate(num_sources);
  if (train_mixtures.size() < 2) {
    raise(ErrorKind::invalid_argument,
          "train_teacher: need at least 2 mixtures");
  }
  SeparatorParams params = init_params(cfg.separator);
  return run_training<MixitExample>(
      std::move(params), cfg,
      [&](int epoch) {
        std::vector<std::string> warnings;
        std::vector<MoMExample> moms =
            dynamic_remix(train_mixtures, data.strategy, data.single_fraction,
                          epoch, data.base_seed, &warnings);
        for (const std::string& w : warnings) log_line(log, "teacher: " + w);
        std::vector<MixitExample> examples;
        for (const MoMExample& mom : moms) {
          std::vector<MixitExample> segs =
              segment_mixit(mom.x1, mom.x2, cfg.segment_seconds);
          for (MixitExample& s : segs) examples.push_back(std::move(s));
        }
        return examples;
      },
      num_threads, log);
}

std::vector<PseudoExample> generate_pseudo_targets(
    const SeparatorParams& teacher_params, const SeparatorConfig& teacher_cfg,
    const std::vector<MixExample>& mixtures, int num_sources,
    std::vector<std::string>* warnings, int num_threads) {
  if (teacher_cfg.num_outputs < num_sources) {
    raise(ErrorKind::invalid_argument,
          "generate_pseudo_targets: teacher outputs " +
              std::to_string(teacher_cfg.num_outputs) +
              " channels but " + std::to_string(num_sources) +
              " targets were requested");
  }
  struct Slot {
    bool keep = false;
    std::vector<Waveform> targets;
    std::vector<int> indices;
    std::string warning;
  };
  std::vector<Slot> slots(mixtures.size());
  parallel_for(mixtures.size(), num_threads, [&](std::size_t i) {
    const MixExample& ex = mixtures[i];
    SourceStack separated = forward(teacher_params, teacher_cfg, ex.mixture);
    std::vector<Waveform> snapped;
    snapped.reserve(separated.count());
    for (std::size_t c = 0; c < separated.count(); ++c) {
      snapped.push_back(quantize_pcm16(separated[c]));
    }
    EnergySelection sel =
        select_top_energy(SourceStack(std::move(snapped)), num_sources);
    const double floor_energy = kMinPseudoEnergyRatio * energy(ex.mixture);
    for (std::size_t c = 0; c < sel.selected.count(); ++c) {
      if (energy(sel.selected[c]) < floor_energy) {
        slots[i].warning = "pseudo: dropped '" + ex.id +
                           "': selected channel " + std::to_string(c) +
                           " energy below 1e-6 x mixture energy";
        return;
      }
    }
    slots[i].keep = true;
    slots[i].targets = sel.selected.sources();
    slots[i].indices = sel.indices;
  });
  std::vector<PseudoExample> out;
  out.reserve(mixtures.size());
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    if (!slots[i].keep) {
      if (warnings != nullptr && !slots[i].warning.empty()) {
        warnings->push_back(slots[i].warning);
      }
      continue;
    }
    out.push_back(PseudoExample{mixtures[i].id, mixtures[i].mixture,
                                SourceStack(std::move(slots[i].targets)),
                                std::move(slots[i].indices)});
  }
  return out;
}

TrainOutput train_student(const std::vector<PseudoExample>& pseudo,
                          const StageConfig& cfg, int num_threads,
                          std::ostream* log) {
  if (cfg.stage != StageKind::student) {
    raise(ErrorKind::config, "train_student: stage config is not 'student'");
  }
  cfg.validate(cfg.separator.num_outputs);
  std::vector<PitExample> examples;
  for (const PseudoExample& ex : pseudo) {
    if (static_cast<int>(ex.targets.count()) != cfg.separator.num_outputs) {
      raise(ErrorKind::invalid_argument,
            "train_student: '" + ex.id + "' has " +
                std::to_string(ex.targets.count()) + " targets but M = " +
                std::to_string(cfg.separator.num_outputs));
    }
    std::vector<PitExample> segs =
        segment_pit(ex.mixture, ex.targets, cfg.segment_seconds);
    for (PitExample& s : segs) examples.push_back(std::move(s));
  }
  return run_training<PitExample>(
      init_params(cfg.separator), cfg,
      [&](int) { return examples; }, num_threads, log);
}

TrainOutput finetune(const SeparatorParams& initial_params,
                     const SeparatorConfig& init_cfg,
                     const std::vector<MixExample>& supervised,
                     const StageConfig& cfg, int num_threads,
                     std::ostream* log) {
  if (cfg.stage != StageKind::finetune) {
    raise(ErrorKind::config, "finetune: stage config is not 'finetune'");
  }
  cfg.validate(cfg.separator.num_outputs);
  if (!same_architecture(init_cfg, cfg.separator)) {
    raise(ErrorKind::config,
          "finetune: checkpoint architecture does not match the stage config");
  }
  if (cfg.epochs == 0) {
    return TrainOutput{initial_params, init_cfg, {}};
  }
  std::vector<PitExample> examples = to_pit_examples(
      supervised, cfg.separator.num_outputs, cfg.segment_seconds, "finetune");
  return run_training<PitExample>(
      initial_params, cfg, [&](int) { return examples; }, num_threads, log);
}

TrainOutput distill(const SeparatorParams& teacher_params,
                    const SeparatorConfig& teacher_cfg,
                    const std::vector<MixExample>& unlabeled,
                    const StageConfig& cfg, int num_threads,
                    std::ostream* log) {
  if (cfg.stage != StageKind::distill) {
    raise(ErrorKind::config, "distill: stage config is not 'distill'");
  }
  cfg.validate(cfg.separator.num_outputs);
  if (teacher_cfg.num_outputs != cfg.separator.num_outputs) {
    raise(ErrorKind::invalid_argument,
          "distill: teacher outputs " + std::to_string(teacher_cfg.num_outputs) +
              " channels, expected " +
              std::to_string(cfg.separator.num_outputs));
  }
  if (same_dimensions(teacher_cfg, cfg.separator)) {
    raise(ErrorKind::config,
          "distill: the distilled architecture must differ in dimensions from "
          "the teacher's");
  }
  // Frozen teacher: targets are its direct outputs, computed once.
  std::vector<std::vector<PitExample>> per_mixture(unlabeled.size());
  parallel_for(unlabeled.size(), num_threads, [&](std::size_t i) {
    SourceStack targets = forward(teacher_params, teacher_cfg, unlabeled[i].mixture);
    per_mixture[i] = segment_pit(unlabeled[i].mixture, targets, cfg.segment_seconds);
  });
  std::vector<PitExample> examples;
  for (std::vector<PitExample>& segs : per_mixture) {
    for (PitExample& s : segs) examples.push_back(std::move(s));
  }
  return run_training<PitExample>(
      init_params(cfg.separator), cfg, [&](int) { return examples; },
      num_threads, log);
}

SelectionMode selection_mode_from_string(const std::string& name) {
  if (name == "direct") return SelectionMode::direct;
  if (name == "energy") return SelectionMode::energy;
  if (name == "oracle") return SelectionMode::oracle;
  raise(ErrorKind::invalid_argument, "unknown selection mode '" + name + "'");
}

std::string selection_mode_to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::direct: return "direct";
    case SelectionMode::energy: return "energy";
    case SelectionMode::oracle: return "oracle";
  }
  raise(ErrorKind::invalid_argument, "unknown selection mode value");
}

namespace {

// Best sum of si_snr(ref_c, est[tuple_c]) over ordered tuples of distinct
// candidate channels; ties keep the lexicographically smallest tuple. The
// enumeration is depth-first in candidate order, so the first maximum found
// is the lexicographic winner.
double best_tuple_si_snr(const SourceStack& refs, const SourceStack& ests,
                         const std::vector<int>& candidates,
                         std::vector<int>* best_tuple) {
  const std::size_t c_count = refs.count();
  std::vector<std::vector<double>> gains(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    gains[c].resize(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      gains[c][j] =
          si_snr(refs[c], ests[static_cast<std::size_t>(candidates[j])]);
    }
  }
  std::vector<int> tuple(c_count, -1);
  std::vector<bool> used(candidates.size(), false);
  std::vector<int> best(c_count, -1);
  double best_sum = -std::numeric_limits<double>::infinity();
  auto recurse = [&](auto&& self, std::size_t depth, double sum) -> void {
    if (depth == c_count) {
      if (sum > best_sum) {
        best_sum = sum;
        best = tuple;
      }
      return;
    }
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      tuple[depth] = candidates[j];
      self(self, depth + 1, sum + gains[depth][j]);
      used[j] = false;
    }
  };
  recurse(recurse, 0, 0.0);
  if (best_tuple != nullptr) *best_tuple = best;
  return best_sum;
}

}  // namespace

EvalReport evaluate(const SeparatorParams& params, const SeparatorConfig& config,
                    const std::vector<MixExample>& test, SelectionMode mode,
                    const std::string& model_id, const std::string& dataset_id,
                    int num_threads) {
  if (test.empty()) {
    raise(ErrorKind::invalid_argument, "evaluate: empty test set");
  }
  const int m_out = config.num_outputs;
  for (const MixExample& ex : test) {
    if (!ex.references.has_value()) {
      raise(ErrorKind::prerequisite,
            "evaluate: '" + ex.id + "' has no references");
    }
    const int c = static_cast<int>(ex.references->count());
    if (mode == SelectionMode::direct && m_out != c) {
      raise(ErrorKind::invalid_argument,
            "evaluate: direct mode needs M == C, got M = " +
                std::to_string(m_out) + ", C = " + std::to_string(c));
    }
    if (mode != SelectionMode::direct && m_out <= c) {
      raise(ErrorKind::invalid_argument,
            "evaluate: " + selection_mode_to_string(mode) +
                " mode needs M > C, got M = " + std::to_string(m_out) +
                ", C = " + std::to_string(c));
    }
  }
  std::vector<double> scores(test.size());
  parallel_for(test.size(), num_threads, [&](std::size_t i) {
    const MixExample& ex = test[i];
    const SourceStack& refs = *ex.references;
    const int c = static_cast<int>(refs.count());
    SourceStack ests = forward(params, config, ex.mixture);
    std::vector<int> candidates;
    if (mode == SelectionMode::energy) {
      candidates = select_top_energy(ests, c).indices;
    } else {
      candidates.resize(static_cast<std::size_t>(m_out));
      for (int j = 0; j < m_out; ++j) candidates[static_cast<std::size_t>(j)] = j;
    }
    std::vector<int> tuple;
    best_tuple_si_snr(refs, ests, candidates, &tuple);
    double sum_improvement = 0.0;
    for (std::size_t k = 0; k < refs.count(); ++k) {
      sum_improvement +=
          si_snr(refs[k], ests[static_cast<std::size_t>(tuple[k])]) -
          si_snr(refs[k], ex.mixture);
    }
    scores[i] = sum_improvement / static_cast<double>(refs.count());
  });
  EvalReport report;
  report.mode = mode;
  report.model_id = model_id;
  report.dataset_id = dataset_id;
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    report.ids.push_back(test[i].id);
    report.per_utterance_si_snri_db.push_back(scores[i]);
    total += scores[i];
  }
  report.mean_si_snri_db = total / static_cast<double>(test.size());
  return report;
}

void write_curve_csv(const std::vector<CurvePoint>& curve,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorKind::io, "write_curve_csv: cannot open " + path);
  out << "step,epoch,loss_db\n";
  char buf[64];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.loss_db);
    out << p.step << "," << p.epoch << "," << buf << "\n";
  }
  if (!out) raise(ErrorKind::io, "write_curve_csv: write failed for " + path);
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorKind::io, "write_eval_csv: cannot open " + path);
  out << "id,si_snri_db\n";
  char buf[64];
  for (std::size_t i = 0; i < report.ids.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", report.per_utterance_si_snri_db[i]);
    out << report.ids[i] << "," << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.17g", report.mean_si_snri_db);
  out << "mean," << buf << "\n";
  if (!out) raise(ErrorKind::io, "write_eval_csv: write failed for " + path);
}

}  // namespace tsmix
