// src/datagen.cc

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

#include "tsmix/datagen.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsmix/error.h"
#include "tsmix/rng.h"
#include "tsmix/wav.h"

namespace tsmix {

namespace {

using nlohmann::json;

constexpr double kTargetRms = 0.1;

std::string format_id(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, index);
  return buf;
}

std::string join_path(const std::string& root, const std::string& rel) {
  if (root.empty()) return rel;
  if (!rel.empty() && rel.front() == '/') return rel;
  return root.back() == '/' ? root + rel : root + "/" + rel;
}

// Sum of sinusoids: one draw triple (relative amplitude, phase) per partial,
// in partial order.
std::vector<double> tone_complex(Rng& rng, std::size_t n, int sample_rate,
                                 double f0_lo, double f0_hi, double band_hi) {
  const double f0 = rng.uniform(f0_lo, f0_hi);
  std::vector<double> amps, phases, freqs;
  for (int k = 1; k * f0 <= band_hi; ++k) {
    freqs.push_back(k * f0);
    amps.push_back(rng.uniform(0.5, 1.0) / static_cast<double>(k));
    phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  std::vector<double> out(n, 0.0);
  const double dt = 1.0 / static_cast<double>(sample_rate);
  for (std::size_t p = 0; p < freqs.size(); ++p) {
    const double w = 2.0 * M_PI * freqs[p];
    for (std::size_t t = 0; t < n; ++t) {
      out[t] += amps[p] * std::sin(w * static_cast<double>(t) * dt + phases[p]);
    }
  }
  return out;
}

// Band-limited noise built as 64 random partials in [2, 3] kHz, amplitude
// modulated at a few hertz. The AM sidebands stay well inside the band gap
// above the high tone-complex family.
std::vector<double> am_noise(Rng& rng, std::size_t n, int sample_rate) {
  constexpr int kPartials = 64;
  std::vector<double> freqs(kPartials), amps(kPartials), phases(kPartials);
  for (int p = 0; p < kPartials; ++p) {
    freqs[p] = rng.uniform(2000.0, 3000.0);
    amps[p] = rng.uniform(0.5, 1.0);
    phases[p] = rng.uniform(0.0, 2.0 * M_PI);
  }
  const double mod_freq = rng.uniform(2.0, 8.0);
  const double mod_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double mod_depth = rng.uniform(0.5, 0.9);
  std::vector<double> out(n, 0.0);
  const double dt = 1.0 / static_cast<double>(sample_rate);
  for (int p = 0; p < kPartials; ++p) {
    const double w = 2.0 * M_PI * freqs[p];
    for (std::size_t t = 0; t < n; ++t) {
      out[t] += amps[p] * std::sin(w * static_cast<double>(t) * dt + phases[p]);
    }
  }
  const double wm = 2.0 * M_PI * mod_freq;
  for (std::size_t t = 0; t < n; ++t) {
    out[t] *= 1.0 + mod_depth * std::sin(wm * static_cast<double>(t) * dt + mod_phase);
  }
  return out;
}

json record_to_json(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  j["split"] = r.split;
  j["num_sources"] = r.num_sources;
  j["duration_s"] = r.duration_s;
  j["sample_rate"] = r.sample_rate;
  if (!r.families.empty()) {
    json fam = json::array();
    for (SourceFamily f : r.families) fam.push_back(family_to_string(f));
    j["families"] = fam;
    j["seeds"] = r.seeds;
    j["gains_db"] = r.gains_db;
  }
  if (!r.ref_paths.empty()) j["ref_paths"] = r.ref_paths;
  if (!r.mixture_path.empty()) j["mixture_path"] = r.mixture_path;
  return j;
}

ManifestRecord record_from_json(const json& j, const std::string& path,
                                std::size_t line_no) {
  auto fail = [&](const std::string& msg) {
    raise(ErrorKind::io, path + ":" + std::to_string(line_no) + ": " + msg);
  };
  ManifestRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.num_sources = j.at("num_sources").get<int>();
    r.duration_s = j.value("duration_s", 0.0);
    r.sample_rate = j.value("sample_rate", kDefaultSampleRate);
    if (j.contains("families")) {
      for (const auto& f : j.at("families")) {
        r.families.push_back(family_from_string(f.get<std::string>()));
      }
      r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      r.gains_db = j.at("gains_db").get<std::vector<double>>();
    }
    if (j.contains("ref_paths")) {
      r.ref_paths = j.at("ref_paths").get<std::vector<std::string>>();
    }
    r.mixture_path = j.value("mixture_path", std::string());
  } catch (const json::exception& e) {
    fail(std::string("bad manifest record: ") + e.what());
  }
  if (r.split != "train" && r.split != "test") {
    fail("split must be train or test, got '" + r.split + "'");
  }
  if (r.num_sources < 1 || r.num_sources > 2) {
    fail("num_sources must be 1 or 2, got " + std::to_string(r.num_sources));
  }
  if (!r.families.empty()) {
    const std::size_t n = static_cast<std::size_t>(r.num_sources);
    if (r.families.size() != n || r.seeds.size() != n || r.gains_db.size() != n) {
      fail("families/seeds/gains_db must each have num_sources entries");
    }
    if (r.duration_s <= 0.0) fail("synthesis records need duration_s > 0");
  }
  if (r.families.empty() && r.ref_paths.empty()) {
    fail("record has neither a synthesis spec nor ref_paths");
  }
  if (!r.ref_paths.empty() &&
      r.ref_paths.size() != static_cast<std::size_t>(r.num_sources)) {
    fail("ref_paths must have num_sources entries");
  }
  return r;
}

}  // namespace

SourceFamily family_from_string(const std::string& name) {
  if (name == "low_band_tone_complex") return SourceFamily::low_band_tone_complex;
  if (name == "high_band_tone_complex") return SourceFamily::high_band_tone_complex;
  if (name == "am_noise_band") return SourceFamily::am_noise_band;
  raise(ErrorKind::invalid_argument, "unknown source family '" + name + "'");
}

std::string family_to_string(SourceFamily family) {
  switch (family) {
    case SourceFamily::low_band_tone_complex: return "low_band_tone_complex";
    case SourceFamily::high_band_tone_complex: return "high_band_tone_complex";
    case SourceFamily::am_noise_band: return "am_noise_band";
  }
  raise(ErrorKind::invalid_argument, "unknown source family value");
}

PairStrategy strategy_from_string(const std::string& name) {
  if (name == "two_src") return PairStrategy::two_src;
  if (name == "one_or_two_src") return PairStrategy::one_or_two_src;
  raise(ErrorKind::invalid_argument, "unknown pairing strategy '" + name + "'");
}

std::string strategy_to_string(PairStrategy strategy) {
  return strategy == PairStrategy::two_src ? "two_src" : "one_or_two_src";
}

Waveform gen_synthetic_source(SourceFamily family, double duration_s,
                              std::uint64_t seed, int sample_rate) {
  if (!(duration_s > 0.0)) {
    raise(ErrorKind::invalid_argument,
          "gen_synthetic_source: duration must be > 0, got " +
              std::to_string(duration_s));
  }
  if (sample_rate <= 0) {
    raise(ErrorKind::invalid_argument,
          "gen_synthetic_source: sample_rate must be > 0");
  }
  const std::size_t n = static_cast<std::size_t>(
      std::llround(duration_s * static_cast<double>(sample_rate)));
  if (n == 0) {
    raise(ErrorKind::invalid_argument,
          "gen_synthetic_source: duration rounds to zero samples");
  }
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(family) + 1));
  std::vector<double> samples;
  switch (family) {
    case SourceFamily::low_band_tone_complex:
      samples = tone_complex(rng, n, sample_rate, 200.0, 600.0, 850.0);
      break;
    case SourceFamily::high_band_tone_complex:
      samples = tone_complex(rng, n, sample_rate, 900.0, 1800.0, 1900.0);
      break;
    case SourceFamily::am_noise_band:
      samples = am_noise(rng, n, sample_rate);
      break;
  }
  const double rms =
      std::sqrt(energy_raw(samples) / static_cast<double>(samples.size()));
  if (!(rms > 1e-30)) {
    raise(ErrorKind::numeric, "gen_synthetic_source: degenerate zero signal");
  }
  const double scale = kTargetRms / rms;
  for (double& s : samples) s *= scale;
  return Waveform(std::move(samples), sample_rate);
}

MixExample make_mixture(const SourceStack& sources,
                        const std::vector<double>& gains_db,
                        const std::string& id) {
  if (sources.count() < 1 || sources.count() > 2) {
    raise(ErrorKind::invalid_argument,
          "make_mixture: expected 1 or 2 sources, got " +
              std::to_string(sources.count()));
  }
  if (gains_db.size() != sources.count()) {
    raise(ErrorKind::invalid_argument,
          "make_mixture: " + std::to_string(gains_db.size()) + " gains for " +
              std::to_string(sources.count()) + " sources");
  }
  for (double g : gains_db) {
    if (!std::isfinite(g)) {
      raise(ErrorKind::invalid_argument, "make_mixture: non-finite gain");
    }
  }
  std::vector<Waveform> refs;
  refs.reserve(sources.count());
  for (std::size_t i = 0; i < sources.count(); ++i) {
    const double gain = std::pow(10.0, gains_db[i] / 20.0);
    std::vector<double> scaled(sources[i].samples());
    for (double& s : scaled) s *= gain;
    refs.emplace_back(std::move(scaled), sources[i].sample_rate());
  }
  SourceStack stack(std::move(refs));
  Waveform mixture = mix(stack);
  const int num_sources = static_cast<int>(stack.count());
  return MixExample{id, std::move(mixture), std::move(stack), num_sources,
                    "synthetic", 0};
}

DatasetManifest build_corpus_manifest(const CorpusSpec& spec) {
  if (spec.num_train < 0 || spec.num_test < 0) {
    raise(ErrorKind::config, "corpus: negative corpus sizes");
  }
  if (!(spec.duration_s > 0.0)) {
    raise(ErrorKind::config, "corpus: duration_s must be > 0");
  }
  if (!(spec.gain_range_db >= 0.0) || !std::isfinite(spec.gain_range_db)) {
    raise(ErrorKind::config, "corpus: gain_range_db must be finite and >= 0");
  }
  Rng rng(mix_seed(spec.seed, 0xC0A9));
  DatasetManifest manifest;
  auto add_records = [&](const char* prefix, int count, const std::string& split) {
    for (int i = 0; i < count; ++i) {
      ManifestRecord r;
      r.id = format_id(prefix, i);
      r.split = split;
      r.num_sources = 2;
      r.duration_s = spec.duration_s;
      r.sample_rate = spec.sample_rate;
      // Two distinct families, so the mixture is separable by construction.
      const int f1 = static_cast<int>(rng.below(3));
      int f2 = static_cast<int>(rng.below(2));
      if (f2 >= f1) ++f2;
      r.families = {static_cast<SourceFamily>(f1), static_cast<SourceFamily>(f2)};
      r.seeds = {rng.next_u64(), rng.next_u64()};
      r.gains_db = {rng.uniform(-spec.gain_range_db, spec.gain_range_db),
                    rng.uniform(-spec.gain_range_db, spec.gain_range_db)};
      manifest.records.push_back(std::move(r));
    }
  };
  add_records("train", spec.num_train, "train");
  add_records("test", spec.num_test, "test");
  return manifest;
}

MixExample realize_record(const ManifestRecord& record,
                          const std::string& root_dir) {
  if (!record.ref_paths.empty()) {
    std::vector<Waveform> refs;
    refs.reserve(record.ref_paths.size());
    for (const std::string& rel : record.ref_paths) {
      refs.push_back(read_wav(join_path(root_dir, rel)));
    }
    SourceStack stack(std::move(refs));
    Waveform mixture = mix(stack);
    return MixExample{record.id,
                      std::move(mixture),
                      std::move(stack),
                      record.num_sources,
                      record.families.empty() ? "corpus" : "synthetic",
                      record.seeds.empty() ? 0 : record.seeds.front()};
  }
  std::vector<Waveform> sources;
  sources.reserve(record.families.size());
  for (std::size_t i = 0; i < record.families.size(); ++i) {
    sources.push_back(gen_synthetic_source(record.families[i], record.duration_s,
                                           record.seeds[i], record.sample_rate));
  }
  MixExample ex = make_mixture(SourceStack(std::move(sources)), record.gains_db,
                               record.id);
  ex.seed = record.seeds.front();
  return ex;
}

std::vector<MixExample> realize_split(const DatasetManifest& manifest,
                                      const std::string& split,
                                      const std::string& root_dir) {
  std::vector<MixExample> out;
  for (const ManifestRecord& r : manifest.records) {
    if (r.split == split) out.push_back(realize_record(r, root_dir));
  }
  return out;
}

std::vector<MoMExample> build_unsupervised_set(
    const std::vector<MixExample>& mixtures, PairStrategy strategy,
    double single_fraction, std::uint64_t seed,
    std::vector<std::string>* warnings) {
  if (mixtures.size() < 2) {
    raise(ErrorKind::invalid_argument,
          "build_unsupervised_set: need at least 2 mixtures, got " +
              std::to_string(mixtures.size()));
  }
  if (!(single_fraction >= 0.0 && single_fraction <= 1.0)) {
    raise(ErrorKind::invalid_argument,
          "build_unsupervised_set: single_fraction must be in [0, 1]");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(mixtures.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  if (order.size() % 2 != 0) {
    if (warnings != nullptr) {
      warnings->push_back("odd mixture count: dropped '" +
                          mixtures[order.back()].id + "' from this pairing");
    }
    order.pop_back();
  }
  const std::size_t num_pairs = order.size() / 2;
  std::size_t num_single = 0;
  if (strategy == PairStrategy::one_or_two_src) {
    num_single = static_cast<std::size_t>(
        std::lround(single_fraction * static_cast<double>(num_pairs)));
  }

  std::vector<MoMExample> moms;
  moms.reserve(num_pairs);
  for (std::size_t p = 0; p < num_pairs; ++p) {
    const MixExample& a = mixtures[order[2 * p]];
    const MixExample& b = mixtures[order[2 * p + 1]];
    Waveform x1 = a.mixture;
    Waveform x2 = b.mixture;
    int sources_in_x2 = b.num_sources;
    std::string id = a.id + "+" + b.id;
    if (p < num_single) {
      if (!b.references.has_value()) {
        raise(ErrorKind::prerequisite,
              "build_unsupervised_set: '" + b.id +
                  "' has no references to draw a single source from");
      }
      const std::size_t pick = static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(b.references->count())));
      x2 = (*b.references)[pick];
      sources_in_x2 = 1;
      id += ".s" + std::to_string(pick);
    }
    std::vector<double> sum(x1.samples());
    const std::vector<double>& s2 = x2.samples();
    if (s2.size() != sum.size()) {
      raise(ErrorKind::invalid_argument,
            "build_unsupervised_set: member lengths differ in pair '" + id +
                "'");
    }
    for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += s2[t];
    Waveform xbar(std::move(sum), x1.sample_rate());
    moms.push_back(MoMExample{std::move(id), std::move(x1), std::move(x2),
                              std::move(xbar), a.num_sources, sources_in_x2});
  }
  return moms;
}

std::vector<MoMExample> dynamic_remix(const std::vector<MixExample>& mixtures,
                                      PairStrategy strategy,
                                      double single_fraction, int epoch,
                                      std::uint64_t base_seed,
                                      std::vector<std::string>* warnings) {
  if (epoch < 0) {
    raise(ErrorKind::invalid_argument, "dynamic_remix: negative epoch");
  }
  return build_unsupervised_set(mixtures, strategy, single_fraction,
                                mix_seed(base_seed, static_cast<std::uint64_t>(epoch)),
                                warnings);
}

std::vector<MixExample> supervised_subset(const std::vector<MixExample>& mixtures,
                                          double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    raise(ErrorKind::invalid_argument,
          "supervised_subset: fraction must be in [0, 1]");
  }
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(mixtures.size())));
  std::vector<MixExample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!mixtures[i].references.has_value()) {
      raise(ErrorKind::prerequisite,
            "supervised_subset: '" + mixtures[i].id + "' has no references");
    }
    out.push_back(mixtures[i]);
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::set<std::string> ids;
  for (const ManifestRecord& r : manifest.records) {
    if (!ids.insert(r.id).second) {
      raise(ErrorKind::invalid_argument,
            "save_manifest: duplicate record id '" + r.id + "'");
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorKind::io, "save_manifest: cannot open " + path);
  for (const ManifestRecord& r : manifest.records) {
    out << record_to_json(r).dump() << "\n";
  }
  if (!out) raise(ErrorKind::io, "save_manifest: write failed for " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::io, "load_manifest: cannot open " + path);
  DatasetManifest manifest;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorKind::io, path + ":" + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    ManifestRecord r = record_from_json(j, path, line_no);
    if (!ids.insert(r.id).second) {
      raise(ErrorKind::io, path + ":" + std::to_string(line_no) +
                               ": duplicate record id '" + r.id + "'");
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

}  // namespace tsmix
