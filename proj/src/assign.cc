// src/assign.cc

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

#include "tsmix/assign.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "tsmix/error.h"

namespace tsmix {

namespace {

constexpr int kMaxMixitSources = 20;
constexpr int kMaxPitSources = 8;

// Row sums for one assignment, sources accumulated left to right in index
// order. Both this solver and any independent re-enumeration must follow the
// same summation order for tie-breaking to be well defined.
void remix_rows(const SourceStack& ests, const std::vector<std::uint8_t>& a,
                std::vector<double>& row0, std::vector<double>& row1) {
  const std::size_t len = ests.length();
  row0.assign(len, 0.0);
  row1.assign(len, 0.0);
  for (std::size_t j = 0; j < ests.count(); ++j) {
    const std::vector<double>& s = ests[j].samples();
    std::vector<double>& row = a[j] == 0 ? row0 : row1;
    for (std::size_t t = 0; t < len; ++t) row[t] += s[t];
  }
}

MixitResult best_assignment(const Waveform& ref0, const Waveform& ref1,
                            const SourceStack& ests, const LossSpec& spec,
                            const char* who) {
  const int m = static_cast<int>(ests.count());
  if (m < 2) {
    raise(ErrorKind::invalid_argument,
          std::string(who) + ": need at least 2 estimated sources, got " +
              std::to_string(m));
  }
  if (m > kMaxMixitSources) {
    raise(ErrorKind::invalid_argument,
          std::string(who) + ": M = " + std::to_string(m) +
              " exceeds the enumeration guard of " +
              std::to_string(kMaxMixitSources));
  }
  if (ref0.size() != ests.length() || ref1.size() != ests.length()) {
    raise(ErrorKind::invalid_argument,
          std::string(who) + ": mixture/estimate length mismatch");
  }

  std::vector<std::uint8_t> a(static_cast<std::size_t>(m), 0);
  std::vector<std::uint8_t> best_a;
  std::vector<double> row0, row1, best_row0, best_row1;
  double best = 0.0;
  bool have_best = false;
  const std::uint64_t total = 1ULL << m;
  for (std::uint64_t code = 0; code < total; ++code) {
    // Lexicographic order: source 0 is the most significant position.
    for (int j = 0; j < m; ++j) {
      a[static_cast<std::size_t>(j)] =
          static_cast<std::uint8_t>((code >> (m - 1 - j)) & 1ULL);
    }
    remix_rows(ests, a, row0, row1);
    double loss = loss_value(ref0.samples(), row0, spec) +
                  loss_value(ref1.samples(), row1, spec);
    if (!have_best || loss < best) {
      have_best = true;
      best = loss;
      best_a = a;
      best_row0 = row0;
      best_row1 = row1;
    }
  }
  std::vector<Waveform> remixed;
  remixed.emplace_back(std::move(best_row0), ests.sample_rate());
  remixed.emplace_back(std::move(best_row1), ests.sample_rate());
  return MixitResult{best, MixingMatrix{std::move(best_a)},
                     SourceStack(std::move(remixed))};
}

}  // namespace

std::vector<MixingMatrix> enumerate_mixing_matrices(int num_sources) {
  if (num_sources < 1 || num_sources > kMaxMixitSources) {
    raise(ErrorKind::invalid_argument,
          "enumerate_mixing_matrices: M must be in [1, " +
              std::to_string(kMaxMixitSources) + "], got " +
              std::to_string(num_sources));
  }
  const std::uint64_t total = 1ULL << num_sources;
  std::vector<MixingMatrix> out;
  out.reserve(total);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::vector<std::uint8_t> a(static_cast<std::size_t>(num_sources));
    for (int j = 0; j < num_sources; ++j) {
      a[static_cast<std::size_t>(j)] =
          static_cast<std::uint8_t>((code >> (num_sources - 1 - j)) & 1ULL);
    }
    out.push_back(MixingMatrix{std::move(a)});
  }
  return out;
}

MixitResult mixit_loss(const Waveform& x1, const Waveform& x2,
                       const SourceStack& ests, const LossSpec& spec) {
  return best_assignment(x1, x2, ests, spec, "mixit_loss");
}

MixitResult oracle_remix_select(const SourceStack& refs,
                                const SourceStack& ests,
                                const LossSpec& spec) {
  if (refs.count() != 2) {
    raise(ErrorKind::invalid_argument,
          "oracle_remix_select: expected 2 references, got " +
              std::to_string(refs.count()));
  }
  return best_assignment(refs[0], refs[1], ests, spec, "oracle_remix_select");
}

PitResult pit_loss(const SourceStack& refs, const SourceStack& ests,
                   const LossSpec& spec) {
  const int c = static_cast<int>(refs.count());
  if (static_cast<int>(ests.count()) != c) {
    raise(ErrorKind::invalid_argument,
          "pit_loss: reference count " + std::to_string(c) +
              " != estimate count " + std::to_string(ests.count()));
  }
  if (c > kMaxPitSources) {
    raise(ErrorKind::invalid_argument,
          "pit_loss: C = " + std::to_string(c) +
              " exceeds the enumeration guard of " +
              std::to_string(kMaxPitSources));
  }
  const std::vector<std::vector<double>> matrix = loss_matrix(refs, ests, spec);
  std::vector<int> perm(static_cast<std::size_t>(c));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm;
  double best = 0.0;
  bool have_best = false;
  // std::next_permutation walks lexicographically from the identity, so a
  // strict < keeps the lexicographically smallest of any tied optima.
  do {
    double loss = 0.0;
    for (int i = 0; i < c; ++i) {
      loss += matrix[static_cast<std::size_t>(i)]
                    [static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    if (!have_best || loss < best) {
      have_best = true;
      best = loss;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return PitResult{best, Permutation{std::move(best_perm)}};
}

EnergySelection select_top_energy(const SourceStack& ests, int count) {
  const int m = static_cast<int>(ests.count());
  if (count < 1 || count > m) {
    raise(ErrorKind::invalid_argument,
          "select_top_energy: count " + std::to_string(count) +
              " out of range for M = " + std::to_string(m));
  }
  std::vector<double> energies(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    energies[static_cast<std::size_t>(j)] =
        energy(ests[static_cast<std::size_t>(j)]);
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return energies[static_cast<std::size_t>(a)] >
           energies[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(count));
  std::vector<Waveform> picked;
  picked.reserve(order.size());
  for (int idx : order) picked.push_back(ests[static_cast<std::size_t>(idx)]);
  return EnergySelection{SourceStack(std::move(picked)), std::move(order)};
}

}  // namespace tsmix
