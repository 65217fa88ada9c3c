// include/tsmix/datagen.h

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

#ifndef TSMIX_DATAGEN_H_
#define TSMIX_DATAGEN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsmix/signal.h"

namespace tsmix {

// Synthetic source families. The three families occupy disjoint frequency
// bands (roughly 200-850 Hz, 900-1900 Hz, and 2-3 kHz) so that a micro model
// can actually separate them.
enum class SourceFamily {
  low_band_tone_complex,
  high_band_tone_complex,
  am_noise_band,
};

SourceFamily family_from_string(const std::string& name);
std::string family_to_string(SourceFamily family);

// How mixtures pair into mixtures-of-mixtures: both members two-source, or a
// fixed fraction of pairs with one single-source member.
enum class PairStrategy { two_src, one_or_two_src };

PairStrategy strategy_from_string(const std::string& name);
std::string strategy_to_string(PairStrategy strategy);

// One mixture, optionally with its constituent references (post-gain, so
// mix(references) reproduces the mixture sample-for-sample).
struct MixExample {
  std::string id;
  Waveform mixture;
  std::optional<SourceStack> references;
  int num_sources = 0;
  std::string provenance;  // "synthetic" or "corpus"
  std::uint64_t seed = 0;
};

// One mixture of mixtures; xbar is the exact sample-wise sum x1 + x2.
struct MoMExample {
  std::string id;
  Waveform x1;
  Waveform x2;
  Waveform xbar;
  int sources_in_x1 = 0;
  int sources_in_x2 = 0;
};

// One dataset record: either an inline synthesis spec (families/seeds/gains,
// one entry per source) or materialized WAV paths relative to the manifest's
// directory — or both, in which case the files win at load time.
struct ManifestRecord {
  std::string id;
  std::string split;  // "train" or "test"
  int num_sources = 0;
  double duration_s = 0.0;
  int sample_rate = kDefaultSampleRate;
  std::vector<SourceFamily> families;
  std::vector<std::uint64_t> seeds;
  std::vector<double> gains_db;
  std::vector<std::string> ref_paths;
  std::string mixture_path;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
};

// Deterministic per (family, seed). RMS is normalized to 0.1. All randomness
// (fundamentals, partial frequencies, phases, amplitudes) comes from a stream
// seeded with mix_seed(seed, family tag), so the same seed gives unrelated
// draws across families.
Waveform gen_synthetic_source(SourceFamily family, double duration_s,
                              std::uint64_t seed,
                              int sample_rate = kDefaultSampleRate);

// Scale each source by 10^(gain_db/20), store the scaled sources as
// references, and sum them (left to right) into the mixture. 1 or 2 sources.
MixExample make_mixture(const SourceStack& sources,
                        const std::vector<double>& gains_db,
                        const std::string& id = "");

// Toy corpus description: every record is a two-source mixture of two
// distinct families with gains drawn uniform in [-gain_range_db,
// +gain_range_db].
struct CorpusSpec {
  int num_train = 64;
  int num_test = 16;
  double duration_s = 4.0;
  int sample_rate = kDefaultSampleRate;
  double gain_range_db = 3.0;
  std::uint64_t seed = 0;
};

DatasetManifest build_corpus_manifest(const CorpusSpec& spec);

// Materialize one record. Records with ref_paths load the reference WAVs and
// rebuild the mixture as their exact sample-wise sum (the mixture WAV, when
// present, is informational); records with only a synthesis spec generate the
// sources. root_dir resolves relative paths.
MixExample realize_record(const ManifestRecord& record,
                          const std::string& root_dir);

std::vector<MixExample> realize_split(const DatasetManifest& manifest,
                                      const std::string& split,
                                      const std::string& root_dir);

// Pair mixtures at random without replacement. Draw order, frozen for
// reproducibility: shuffle indices; drop the last shuffled element when the
// count is odd (warning recorded); with one_or_two_src, the first
// round(single_fraction * num_pairs) pairs in shuffled order get their second
// member replaced by one reference of that member (chosen by one rng draw per
// pair, in pair order), so the single-source member is always x2.
std::vector<MoMExample> build_unsupervised_set(
    const std::vector<MixExample>& mixtures, PairStrategy strategy,
    double single_fraction, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr);

// Fresh pairing per epoch: build_unsupervised_set with seed =
// mix_seed(base_seed, epoch). The underlying mixture set never changes.
std::vector<MoMExample> dynamic_remix(const std::vector<MixExample>& mixtures,
                                      PairStrategy strategy,
                                      double single_fraction, int epoch,
                                      std::uint64_t base_seed,
                                      std::vector<std::string>* warnings = nullptr);

// The first ceil(fraction * N) examples in order, unchanged (no remixing).
// Every selected example must carry references.
std::vector<MixExample> supervised_subset(const std::vector<MixExample>& mixtures,
                                          double fraction = 0.10);

// JSON-lines manifest, one record per line.
void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace tsmix

#endif  // TSMIX_DATAGEN_H_
