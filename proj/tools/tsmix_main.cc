// tools/tsmix_main.cc

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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsmix/config.h"
#include "tsmix/datagen.h"
#include "tsmix/error.h"
#include "tsmix/pipeline.h"
#include "tsmix/rng.h"
#include "tsmix/separator.h"
#include "tsmix/signal.h"
#include "tsmix/wav.h"

namespace fs = std::filesystem;
using namespace tsmix;

namespace {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) raise(ErrorKind::io, "cannot create directory " + path + ": " + ec.message());
}

void require_file(const std::string& path, const std::string& hint) {
  if (!fs::exists(path)) {
    raise(ErrorKind::prerequisite, "missing " + path + " — " + hint);
  }
}

struct Paths {
  std::string workdir;

  std::string data_dir() const { return workdir + "/data"; }
  std::string data_wav_dir() const { return data_dir() + "/wav"; }
  std::string data_manifest() const { return data_dir() + "/manifest.jsonl"; }
  std::string stage_dir(const std::string& s) const { return workdir + "/" + s; }
  std::string checkpoint(const std::string& s) const {
    return stage_dir(s) + "/checkpoint.bin";
  }
  std::string curve(const std::string& s) const {
    return stage_dir(s) + "/curve.csv";
  }
  std::string pseudo_dir() const { return workdir + "/pseudo"; }
  std::string pseudo_wav_dir() const { return pseudo_dir() + "/wav"; }
  std::string pseudo_manifest() const { return pseudo_dir() + "/manifest.jsonl"; }
  std::string eval_dir() const { return workdir + "/eval"; }
  std::string eval_csv(const std::string& model, const std::string& mode) const {
    return eval_dir() + "/" + model + "_" + mode + ".csv";
  }
  std::string eval_summary() const { return eval_dir() + "/summary.csv"; }
};

ExperimentConfig load_config(const std::string& config_path,
                             const std::optional<std::uint64_t>& seed_override,
                             const std::optional<std::string>& workdir_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override.has_value()) {
    cfg.master_seed = *seed_override;
    cfg.derive_seeds();
  }
  if (workdir_override.has_value()) cfg.workdir = *workdir_override;
  cfg.validate();
  return cfg;
}

std::vector<MixExample> load_split(const ExperimentConfig& cfg,
                                   const std::string& split) {
  const Paths paths{cfg.workdir};
  require_file(paths.data_manifest(), "run 'simulate' first");
  DatasetManifest manifest = load_manifest(paths.data_manifest());
  std::vector<MixExample> out =
      realize_split(manifest, split, paths.data_dir());
  if (out.empty()) {
    raise(ErrorKind::prerequisite,
          "no '" + split + "' records in " + paths.data_manifest());
  }
  return out;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const ExperimentConfig& cfg, std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  DatasetManifest manifest = build_corpus_manifest(cfg.corpus);
  ensure_dir(paths.data_wav_dir());
  int num_train = 0;
  int num_test = 0;
  for (ManifestRecord& rec : manifest.records) {
    MixExample ex = realize_record(rec, paths.data_dir());
    rec.ref_paths.clear();
    std::vector<double> mix_sum(ex.mixture.size(), 0.0);
    for (std::size_t i = 0; i < ex.references->count(); ++i) {
      const std::string rel =
          "wav/" + rec.id + "_ref" + std::to_string(i) + ".wav";
      Waveform snapped = quantize_pcm16((*ex.references)[i]);
      write_wav(paths.data_dir() + "/" + rel, snapped);
      for (std::size_t t = 0; t < mix_sum.size(); ++t) mix_sum[t] += snapped[t];
      rec.ref_paths.push_back(rel);
    }
    rec.mixture_path = "wav/" + rec.id + "_mix.wav";
    write_wav(paths.data_dir() + "/" + rec.mixture_path,
              Waveform(std::move(mix_sum), ex.mixture.sample_rate()));
    (rec.split == "train" ? num_train : num_test) += 1;
  }
  save_manifest(manifest, paths.data_manifest());
  std::cerr << "simulate: wrote " << num_train << " train + " << num_test
            << " test records under " << paths.data_dir() << "\n";
  if (machine_out != nullptr) {
    (*machine_out) << "num_train=" << num_train << "\n"
                   << "num_test=" << num_test << "\n";
  }
}

// ------------------------------------------------------------------ stages

void save_stage(const Paths& paths, const std::string& stage,
                const TrainOutput& out, std::ostream* machine_out) {
  ensure_dir(paths.stage_dir(stage));
  save_checkpoint(out.params, out.config, paths.checkpoint(stage));
  write_curve_csv(out.curve, paths.curve(stage));
  const double final_loss =
      out.curve.empty() ? std::nan("") : out.curve.back().loss_db;
  std::cerr << stage << ": saved " << paths.checkpoint(stage) << " ("
            << out.curve.size() << " steps)\n";
  if (machine_out != nullptr) {
    (*machine_out) << "final_loss_db=" << fmt_g17(final_loss) << "\n";
  }
}

void cmd_train_teacher(const ExperimentConfig& cfg, int threads,
                       std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  std::vector<MixExample> train = load_split(cfg, "train");
  DataOptions data{cfg.strategy, cfg.single_fraction, cfg.remix_seed};
  TrainOutput out = train_teacher(train, cfg.teacher, data, cfg.num_sources,
                                  threads, &std::cerr);
  save_stage(paths, "teacher", out, machine_out);
}

void cmd_pseudo(const ExperimentConfig& cfg, int threads,
                std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  require_file(paths.checkpoint("teacher"), "run 'train-teacher' first");
  auto [params, teacher_cfg] = load_checkpoint(paths.checkpoint("teacher"));
  std::vector<MixExample> train = load_split(cfg, "train");
  std::vector<std::string> warnings;
  std::vector<PseudoExample> pseudo = generate_pseudo_targets(
      params, teacher_cfg, train, cfg.num_sources, &warnings, threads);
  for (const std::string& w : warnings) std::cerr << w << "\n";
  ensure_dir(paths.pseudo_wav_dir());
  std::ofstream manifest(paths.pseudo_manifest(), std::ios::trunc);
  if (!manifest) {
    raise(ErrorKind::io, "cannot open " + paths.pseudo_manifest());
  }
  for (const PseudoExample& ex : pseudo) {
    nlohmann::json line;
    line["id"] = ex.id;
    line["selected_indices"] = ex.selected_indices;
    std::vector<std::string> target_paths;
    for (std::size_t c = 0; c < ex.targets.count(); ++c) {
      const std::string rel =
          "wav/" + ex.id + "_t" + std::to_string(c) + ".wav";
      write_wav(paths.pseudo_dir() + "/" + rel, ex.targets[c]);
      target_paths.push_back(rel);
    }
    line["target_paths"] = target_paths;
    manifest << line.dump() << "\n";
  }
  if (!manifest) {
    raise(ErrorKind::io, "write failed for " + paths.pseudo_manifest());
  }
  std::cerr << "pseudo: kept " << pseudo.size() << " of " << train.size()
            << " mixtures\n";
  if (machine_out != nullptr) {
    (*machine_out) << "pseudo_examples=" << pseudo.size() << "\n"
                   << "dropped=" << (train.size() - pseudo.size()) << "\n";
  }
}

std::vector<PseudoExample> load_pseudo_set(const ExperimentConfig& cfg) {
  const Paths paths{cfg.workdir};
  require_file(paths.pseudo_manifest(), "run 'pseudo' first");
  std::vector<MixExample> train = load_split(cfg, "train");
  std::map<std::string, const MixExample*> by_id;
  for (const MixExample& ex : train) by_id[ex.id] = &ex;
  std::ifstream in(paths.pseudo_manifest());
  if (!in) raise(ErrorKind::io, "cannot open " + paths.pseudo_manifest());
  std::vector<PseudoExample> out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::io, paths.pseudo_manifest() + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
    const std::string id = j.at("id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      raise(ErrorKind::prerequisite,
            "pseudo manifest names unknown mixture '" + id + "'");
    }
    std::vector<Waveform> targets;
    for (const auto& rel : j.at("target_paths")) {
      targets.push_back(
          read_wav(paths.pseudo_dir() + "/" + rel.get<std::string>()));
    }
    out.push_back(PseudoExample{
        id, it->second->mixture, SourceStack(std::move(targets)),
        j.at("selected_indices").get<std::vector<int>>()});
  }
  if (out.empty()) {
    raise(ErrorKind::prerequisite,
          "pseudo manifest " + paths.pseudo_manifest() + " is empty");
  }
  return out;
}

void cmd_train_student(const ExperimentConfig& cfg, int threads,
                       std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  std::vector<PseudoExample> pseudo = load_pseudo_set(cfg);
  TrainOutput out = train_student(pseudo, cfg.student, threads, &std::cerr);
  save_stage(paths, "student", out, machine_out);
}

void cmd_finetune(const ExperimentConfig& cfg, int threads,
                  std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  require_file(paths.checkpoint("student"), "run 'train-student' first");
  auto [params, student_cfg] = load_checkpoint(paths.checkpoint("student"));
  std::vector<MixExample> train = load_split(cfg, "train");
  std::vector<MixExample> supervised =
      supervised_subset(train, cfg.supervised_fraction);
  std::cerr << "finetune: " << supervised.size() << " supervised mixtures\n";
  TrainOutput out = finetune(params, student_cfg, supervised, cfg.finetune,
                             threads, &std::cerr);
  save_stage(paths, "finetune", out, machine_out);
}

void cmd_distill(const ExperimentConfig& cfg, int threads,
                 std::ostream* machine_out) {
  const Paths paths{cfg.workdir};
  require_file(paths.checkpoint("finetune"), "run 'finetune' first");
  auto [params, finetuned_cfg] = load_checkpoint(paths.checkpoint("finetune"));
  std::vector<MixExample> train = load_split(cfg, "train");
  TrainOutput out =
      distill(params, finetuned_cfg, train, cfg.distill, threads, &std::cerr);
  save_stage(paths, "distill", out, machine_out);
}

// -------------------------------------------------------------------- eval

EvalReport run_eval(const ExperimentConfig& cfg, const std::string& model,
                    SelectionMode mode, int threads) {
  const Paths paths{cfg.workdir};
  require_file(paths.checkpoint(model),
               "train the '" + model + "' stage first");
  auto [params, model_cfg] = load_checkpoint(paths.checkpoint(model));
  std::vector<MixExample> test = load_split(cfg, "test");
  EvalReport report =
      evaluate(params, model_cfg, test, mode, model, "test", threads);
  ensure_dir(paths.eval_dir());
  write_eval_csv(report,
                 paths.eval_csv(model, selection_mode_to_string(mode)));
  return report;
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& model,
              const std::string& mode_name, int threads,
              std::ostream* machine_out) {
  EvalReport report =
      run_eval(cfg, model, selection_mode_from_string(mode_name), threads);
  std::cerr << "eval: " << model << "/" << mode_name << " over "
            << report.ids.size() << " utterances\n";
  if (machine_out != nullptr) {
    (*machine_out) << "si_snri_db=" << fmt_g17(report.mean_si_snri_db) << "\n";
  }
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckStats {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
  std::size_t coords_le_1e4 = 0;
};

template <typename Example>
void gradcheck_run(const SeparatorConfig& config,
                   const std::vector<Example>& batch, const LossSpec& spec,
                   std::uint64_t seed, int coords_per_config, int threads,
                   GradcheckStats* stats) {
  SeparatorParams params = init_params(config);
  const LossGrad base = loss_and_grad(params, config, batch, spec, threads);
  std::vector<std::size_t> order(params.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0xFD));
  rng.shuffle(order);
  const std::size_t n_coords =
      std::min<std::size_t>(order.size(),
                            static_cast<std::size_t>(coords_per_config));
  for (std::size_t k = 0; k < n_coords; ++k) {
    const std::size_t p = order[k];
    const double v = params.values[p];
    const double h = 1e-5 * std::max(1.0, std::abs(v));
    params.values[p] = v + h;
    const double f_plus =
        loss_and_grad(params, config, batch, spec, threads).loss_db;
    params.values[p] = v - h;
    const double f_minus =
        loss_and_grad(params, config, batch, spec, threads).loss_db;
    params.values[p] = v;
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double g = base.grads[p];
    const double rel =
        std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
    stats->max_rel_err = std::max(stats->max_rel_err, rel);
    stats->coords += 1;
    if (rel <= 1e-4) stats->coords_le_1e4 += 1;
  }
}

Waveform random_wave(Rng& rng, std::size_t n, int rate) {
  std::vector<double> s(n);
  for (double& x : s) x = 0.1 * rng.normal();
  return Waveform(std::move(s), rate);
}

int cmd_gradcheck(std::uint64_t seed, int coords_per_config, int threads) {
  GradcheckStats stats;

  // Config 1: unsupervised assignment loss, sigmoid masks, consistency on.
  {
    SeparatorConfig c;
    c.num_filters = 6;
    c.kernel_len = 8;
    c.stride = 4;
    c.hidden_dim = 10;
    c.num_hidden_layers = 1;
    c.num_outputs = 4;
    c.mixture_consistency = true;
    c.mask_activation = MaskActivation::sigmoid;
    c.seed = mix_seed(seed, 1);
    Rng rng(mix_seed(seed, 11));
    std::vector<MixitExample> batch;
    for (int i = 0; i < 2; ++i) {
      batch.push_back(MixitExample{random_wave(rng, 100, 8000),
                                   random_wave(rng, 100, 8000)});
    }
    LossSpec spec;
    spec.kind = LossKind::thresholded_snr;
    gradcheck_run(c, batch, spec, mix_seed(seed, 21), coords_per_config,
                  threads, &stats);
  }

  // Config 2: permutation loss, relu masks, consistency on, deeper masker.
  {
    SeparatorConfig c;
    c.num_filters = 5;
    c.kernel_len = 6;
    c.stride = 3;
    c.hidden_dim = 8;
    c.num_hidden_layers = 2;
    c.num_outputs = 2;
    c.mixture_consistency = true;
    c.mask_activation = MaskActivation::relu;
    c.seed = mix_seed(seed, 2);
    Rng rng(mix_seed(seed, 12));
    std::vector<PitExample> batch;
    for (int i = 0; i < 2; ++i) {
      std::vector<Waveform> refs{random_wave(rng, 90, 8000),
                                 random_wave(rng, 90, 8000)};
      std::vector<double> m(90);
      for (std::size_t t = 0; t < m.size(); ++t) {
        m[t] = refs[0][t] + refs[1][t];
      }
      batch.push_back(PitExample{Waveform(std::move(m), 8000),
                                 SourceStack(std::move(refs))});
    }
    LossSpec spec;
    spec.kind = LossKind::thresholded_snr;
    gradcheck_run(c, batch, spec, mix_seed(seed, 22), coords_per_config,
                  threads, &stats);
  }

  // Config 3: permutation loss, scale-invariant kind, consistency off.
  {
    SeparatorConfig c;
    c.num_filters = 8;
    c.kernel_len = 16;
    c.stride = 8;
    c.hidden_dim = 12;
    c.num_hidden_layers = 2;
    c.num_outputs = 2;
    c.mixture_consistency = false;
    c.mask_activation = MaskActivation::sigmoid;
    c.seed = mix_seed(seed, 3);
    Rng rng(mix_seed(seed, 13));
    std::vector<PitExample> batch;
    for (int i = 0; i < 2; ++i) {
      std::vector<Waveform> refs{random_wave(rng, 120, 8000),
                                 random_wave(rng, 120, 8000)};
      std::vector<double> m(120);
      for (std::size_t t = 0; t < m.size(); ++t) {
        m[t] = refs[0][t] + refs[1][t];
      }
      batch.push_back(PitExample{Waveform(std::move(m), 8000),
                                 SourceStack(std::move(refs))});
    }
    LossSpec spec;
    spec.kind = LossKind::si_snr_negative;
    gradcheck_run(c, batch, spec, mix_seed(seed, 23), coords_per_config,
                  threads, &stats);
  }

  const double frac =
      stats.coords == 0
          ? 0.0
          : static_cast<double>(stats.coords_le_1e4) /
                static_cast<double>(stats.coords);
  std::cout << "max_rel_err=" << fmt_g17(stats.max_rel_err) << "\n";
  std::cout << "frac_le_1e-4=" << fmt_g17(frac) << "\n";
  std::cout << "coords=" << stats.coords << "\n";
  std::cerr << "gradcheck: " << stats.coords << " coordinates across 3 configs\n";
  if (!(stats.max_rel_err <= 1e-3)) {
    std::cerr << "gradcheck: FAILED, max relative error "
              << fmt_g17(stats.max_rel_err) << " > 1e-3\n";
    return 4;
  }
  return 0;
}

// ------------------------------------------------------------------ run-all

void cmd_run_all(const ExperimentConfig& cfg, int threads) {
  const Paths paths{cfg.workdir};
  cmd_simulate(cfg, nullptr);
  cmd_train_teacher(cfg, threads, nullptr);
  cmd_pseudo(cfg, threads, nullptr);
  cmd_train_student(cfg, threads, nullptr);
  cmd_finetune(cfg, threads, nullptr);
  cmd_distill(cfg, threads, nullptr);

  struct Row {
    std::string model;
    std::string mode;
    double mean;
  };
  std::vector<Row> rows;
  for (SelectionMode mode : cfg.teacher_eval_modes) {
    EvalReport r = run_eval(cfg, "teacher", mode, threads);
    rows.push_back(Row{"teacher", selection_mode_to_string(mode), r.mean_si_snri_db});
  }
  for (const char* model : {"student", "finetune", "distill"}) {
    EvalReport r = run_eval(cfg, model, SelectionMode::direct, threads);
    rows.push_back(Row{model, "direct", r.mean_si_snri_db});
  }

  std::ofstream summary(paths.eval_summary(), std::ios::trunc);
  if (!summary) raise(ErrorKind::io, "cannot open " + paths.eval_summary());
  summary << "model,mode,mean_si_snri_db\n";
  for (const Row& row : rows) {
    summary << row.model << "," << row.mode << "," << fmt_g17(row.mean) << "\n";
  }
  if (!summary) raise(ErrorKind::io, "write failed for " + paths.eval_summary());

  std::printf("%-10s %-10s %s\n", "model", "selection", "mean_si_snri_db");
  for (const Row& row : rows) {
    std::printf("%-10s %-10s %s\n", row.model.c_str(), row.mode.c_str(),
                fmt_g17(row.mean).c_str());
  }
  for (const Row& row : rows) {
    std::cout << "si_snri_db." << row.model << "." << row.mode << "="
              << fmt_g17(row.mean) << "\n";
  }
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::prerequisite: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teacher-student source-separation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> workdir_override;
  int threads = 1;
  std::string eval_model;
  std::string eval_mode;
  int gradcheck_coords = 40;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    CLI::Option* opt = sub->add_option("--config", config_path,
                                       "experiment config JSON file");
    if (config_required) opt->required();
    sub->add_option("--seed", seed_override,
                    "override the master seed from the config");
    sub->add_option("--workdir", workdir_override,
                    "override the workdir from the config");
    sub->add_option("--threads", threads,
                    "worker threads (1 = bitwise reference mode)")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "generate the synthetic corpus, WAVs, and manifest");
  add_common(sim, true);
  CLI::App* tt = app.add_subcommand(
      "train-teacher", "unsupervised training on mixtures of mixtures");
  add_common(tt, true);
  CLI::App* ps = app.add_subcommand(
      "pseudo", "generate energy-selected pseudo-targets from the teacher");
  add_common(ps, true);
  CLI::App* ts = app.add_subcommand(
      "train-student", "train the student against the pseudo-targets");
  add_common(ts, true);
  CLI::App* ft = app.add_subcommand(
      "finetune", "fine-tune the student on the supervised subset");
  add_common(ft, true);
  CLI::App* di = app.add_subcommand(
      "distill", "distill the fine-tuned model into a new architecture");
  add_common(di, true);
  CLI::App* ev =
      app.add_subcommand("eval", "mean SI-SNR improvement on the test split");
  add_common(ev, true);
  ev->add_option("--model", eval_model, "which stage checkpoint to evaluate")
      ->required()
      ->check(CLI::IsMember({"teacher", "student", "finetune", "distill"}));
  ev->add_option("--mode", eval_mode, "channel selection mode")
      ->required()
      ->check(CLI::IsMember({"direct", "energy", "oracle"}));
  CLI::App* gc = app.add_subcommand(
      "gradcheck",
      "compare analytic gradients against central finite differences");
  add_common(gc, false);
  gc->add_option("--coords", gradcheck_coords,
                 "sampled coordinates per config")
      ->check(CLI::PositiveNumber);
  CLI::App* ra = app.add_subcommand(
      "run-all", "simulate, train all stages, and evaluate");
  add_common(ra, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cout << "error_kind=usage\n";
    return code == 0 ? 0 : 1;
  }

  try {
    if (gc->parsed()) {
      std::uint64_t seed = 0;
      if (!config_path.empty()) {
        seed = load_config(config_path, seed_override, workdir_override)
                   .master_seed;
      }
      if (seed_override.has_value()) seed = *seed_override;
      return cmd_gradcheck(seed, gradcheck_coords, threads);
    }
    ExperimentConfig cfg =
        load_config(config_path, seed_override, workdir_override);
    if (sim->parsed()) {
      cmd_simulate(cfg, &std::cout);
    } else if (tt->parsed()) {
      cmd_train_teacher(cfg, threads, &std::cout);
    } else if (ps->parsed()) {
      cmd_pseudo(cfg, threads, &std::cout);
    } else if (ts->parsed()) {
      cmd_train_student(cfg, threads, &std::cout);
    } else if (ft->parsed()) {
      cmd_finetune(cfg, threads, &std::cout);
    } else if (di->parsed()) {
      cmd_distill(cfg, threads, &std::cout);
    } else if (ev->parsed()) {
      cmd_eval(cfg, eval_model, eval_mode, threads, &std::cout);
    } else if (ra->parsed()) {
      cmd_run_all(cfg, threads);
    }
    return 0;
  } catch (const Error& e) {
    std::cout << "error_kind=" << error_kind_name(e.kind()) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cout << "error_kind=internal\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
