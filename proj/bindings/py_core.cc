// bindings/py_core.cc

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

// Python module over the core operations. Signals cross the boundary as
// plain float sequences (one list per channel); conversion is by copy, which
// is fine at the scales this module targets.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "tsmix/assign.h"
#include "tsmix/datagen.h"
#include "tsmix/error.h"
#include "tsmix/losses.h"
#include "tsmix/separator.h"
#include "tsmix/signal.h"
#include "tsmix/wav.h"

namespace py = pybind11;
using namespace tsmix;

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

Waveform to_wave(const Vec& v, int rate) { return Waveform(v, rate); }

SourceStack to_stack(const Mat& rows, int rate) {
  std::vector<Waveform> waves;
  waves.reserve(rows.size());
  for (const Vec& row : rows) waves.emplace_back(row, rate);
  return SourceStack(std::move(waves));
}

Mat from_stack(const SourceStack& stack) {
  Mat rows;
  rows.reserve(stack.count());
  for (const Waveform& w : stack.sources()) rows.push_back(w.samples());
  return rows;
}

LossSpec make_spec(const std::string& kind, double snr_max_db) {
  LossSpec spec;
  if (kind == "thresholded_snr") {
    spec.kind = LossKind::thresholded_snr;
  } else if (kind == "si_snr") {
    spec.kind = LossKind::si_snr_negative;
  } else {
    raise(ErrorKind::config, "unknown loss kind '" + kind + "'");
  }
  spec.snr_max_db = snr_max_db;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "core signal, loss, assignment, and separator operations";

  py::register_exception<Error>(m, "TsmixError");

  m.def(
      "mix",
      [](const Mat& channels, int sample_rate) {
        return mix(to_stack(channels, sample_rate)).samples();
      },
      py::arg("channels"), py::arg("sample_rate") = kDefaultSampleRate,
      "Sample-wise sum of the channels, accumulated left to right.");

  m.def(
      "energy", [](const Vec& samples) { return energy_raw(samples); },
      py::arg("samples"), "Sum of squared samples.");

  m.def(
      "quantize_pcm16",
      [](const Vec& samples) {
        return quantize_pcm16(Waveform(samples)).samples();
      },
      py::arg("samples"),
      "Round each sample to the nearest 16-bit PCM grid point.");

  m.def(
      "write_wav",
      [](const std::string& path, const Vec& samples, int sample_rate) {
        write_wav(path, Waveform(samples, sample_rate));
      },
      py::arg("path"), py::arg("samples"),
      py::arg("sample_rate") = kDefaultSampleRate);

  m.def(
      "read_wav",
      [](const std::string& path) {
        Waveform w = read_wav(path);
        return py::make_tuple(w.samples(), w.sample_rate());
      },
      py::arg("path"), "Returns (samples, sample_rate).");

  m.def(
      "neg_thresh_snr",
      [](const Vec& y, const Vec& yhat, double snr_max_db) {
        return neg_thresh_snr(Waveform(y), Waveform(yhat),
                              make_spec("thresholded_snr", snr_max_db));
      },
      py::arg("reference"), py::arg("estimate"), py::arg("snr_max_db") = 30.0,
      "Negative thresholded SNR in dB (lower is better).");

  m.def(
      "si_snr",
      [](const Vec& y, const Vec& yhat, bool remove_mean) {
        return si_snr(Waveform(y), Waveform(yhat), 1e-12, remove_mean);
      },
      py::arg("reference"), py::arg("estimate"),
      py::arg("remove_mean") = false, "Scale-invariant SNR in dB.");

  m.def(
      "si_snr_improvement",
      [](const Vec& mixture, const Vec& estimate, const Vec& reference,
         bool remove_mean) {
        return si_snr_improvement(Waveform(mixture), Waveform(estimate),
                                  Waveform(reference), 1e-12, remove_mean);
      },
      py::arg("mixture"), py::arg("estimate"), py::arg("reference"),
      py::arg("remove_mean") = false,
      "si_snr(reference, estimate) - si_snr(reference, mixture).");

  m.def(
      "mixit_loss",
      [](const Vec& x1, const Vec& x2, const Mat& estimates,
         const std::string& loss_kind, double snr_max_db, int sample_rate) {
        MixitResult r =
            mixit_loss(Waveform(x1, sample_rate), Waveform(x2, sample_rate),
                       to_stack(estimates, sample_rate),
                       make_spec(loss_kind, snr_max_db));
        return py::make_tuple(r.total_loss_db, r.assignment.assignment,
                              from_stack(r.remixed));
      },
      py::arg("x1"), py::arg("x2"), py::arg("estimates"),
      py::arg("loss_kind") = "thresholded_snr", py::arg("snr_max_db") = 30.0,
      py::arg("sample_rate") = kDefaultSampleRate,
      "Best mixing over 2xM one-hot-column matrices. Returns (total_db, "
      "assignment, remixed).");

  m.def(
      "pit_loss",
      [](const Mat& refs, const Mat& ests, const std::string& loss_kind,
         double snr_max_db, int sample_rate) {
        PitResult r =
            pit_loss(to_stack(refs, sample_rate), to_stack(ests, sample_rate),
                     make_spec(loss_kind, snr_max_db));
        return py::make_tuple(r.total_loss_db, r.assignment.perm);
      },
      py::arg("references"), py::arg("estimates"),
      py::arg("loss_kind") = "thresholded_snr", py::arg("snr_max_db") = 30.0,
      py::arg("sample_rate") = kDefaultSampleRate,
      "Best reference-to-estimate permutation. Returns (total_db, perm).");

  m.def(
      "select_top_energy",
      [](const Mat& estimates, int count, int sample_rate) {
        EnergySelection sel =
            select_top_energy(to_stack(estimates, sample_rate), count);
        return py::make_tuple(from_stack(sel.selected), sel.indices);
      },
      py::arg("estimates"), py::arg("count"),
      py::arg("sample_rate") = kDefaultSampleRate,
      "Keep the `count` highest-energy channels, in energy order. Returns "
      "(selected, indices).");

  m.def(
      "mixture_consistency_project",
      [](const Mat& sources, const Vec& mixture, int sample_rate) {
        return from_stack(mixture_consistency_project(
            to_stack(sources, sample_rate), Waveform(mixture, sample_rate)));
      },
      py::arg("sources"), py::arg("mixture"),
      py::arg("sample_rate") = kDefaultSampleRate,
      "Project the sources so they sum exactly to the mixture.");

  m.def(
      "gen_synthetic_source",
      [](const std::string& family, double duration_s, std::uint64_t seed,
         int sample_rate) {
        return gen_synthetic_source(family_from_string(family), duration_s,
                                    seed, sample_rate)
            .samples();
      },
      py::arg("family"), py::arg("duration_s"), py::arg("seed"),
      py::arg("sample_rate") = kDefaultSampleRate,
      "Deterministic synthetic source; family is one of "
      "'low_band_tone_complex', 'high_band_tone_complex', 'am_noise_band'.");

  py::class_<SeparatorConfig>(m, "SeparatorConfig")
      .def(py::init<>())
      .def_readwrite("num_filters", &SeparatorConfig::num_filters)
      .def_readwrite("kernel_len", &SeparatorConfig::kernel_len)
      .def_readwrite("stride", &SeparatorConfig::stride)
      .def_readwrite("hidden_dim", &SeparatorConfig::hidden_dim)
      .def_readwrite("num_hidden_layers", &SeparatorConfig::num_hidden_layers)
      .def_readwrite("num_outputs", &SeparatorConfig::num_outputs)
      .def_readwrite("mixture_consistency",
                     &SeparatorConfig::mixture_consistency)
      .def_property(
          "mask_activation",
          [](const SeparatorConfig& c) {
            return c.mask_activation == MaskActivation::sigmoid
                       ? std::string("sigmoid")
                       : std::string("relu");
          },
          [](SeparatorConfig& c, const std::string& name) {
            if (name == "sigmoid") {
              c.mask_activation = MaskActivation::sigmoid;
            } else if (name == "relu") {
              c.mask_activation = MaskActivation::relu;
            } else {
              raise(ErrorKind::config,
                    "unknown mask activation '" + name + "'");
            }
          })
      .def_readwrite("seed", &SeparatorConfig::seed)
      .def("validate", &SeparatorConfig::validate);

  m.def(
      "init_params",
      [](const SeparatorConfig& config) {
        return init_params(config).values;
      },
      py::arg("config"), "Deterministic initial parameter vector.");

  m.def(
      "separate",
      [](const Vec& params, const SeparatorConfig& config, const Vec& mixture,
         int sample_rate) {
        SeparatorParams p{params};
        return from_stack(
            forward(p, config, Waveform(mixture, sample_rate)));
      },
      py::arg("params"), py::arg("config"), py::arg("mixture"),
      py::arg("sample_rate") = kDefaultSampleRate,
      "Run the separator; returns num_outputs channels of input length.");

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        auto [params, config] = load_checkpoint(path);
        return py::make_tuple(params.values, config);
      },
      py::arg("path"), "Returns (params, SeparatorConfig).");
}
