// include/tsmix/assign.h

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

#ifndef TSMIX_ASSIGN_H_
#define TSMIX_ASSIGN_H_

#include <cstdint>
#include <vector>

#include "tsmix/losses.h"
#include "tsmix/signal.h"

namespace tsmix {

// Binary 2xM mixing matrix with one-hot columns, stored as one row index per
// source: assignment[j] is the row that receives source j.
struct MixingMatrix {
  std::vector<std::uint8_t> assignment;
};

// Bijection on {0..C-1}; perm[i] is the estimate paired with reference i.
struct Permutation {
  std::vector<int> perm;
};

struct MixitResult {
  double total_loss_db;
  MixingMatrix assignment;
  SourceStack remixed;  // the two row sums [A s]_1, [A s]_2 of the winner
};

struct PitResult {
  double total_loss_db;
  Permutation assignment;
};

struct EnergySelection {
  SourceStack selected;      // descending energy order
  std::vector<int> indices;  // original positions of the selected sources
};

// All 2^M one-hot-column matrices in lexicographic order of the assignment
// array. Guarded to M <= 20.
std::vector<MixingMatrix> enumerate_mixing_matrices(int num_sources);

// Exact minimizer of sum_i loss(x_i, [A s]_i) over all 2^M mixing matrices.
// Row sums accumulate sources left to right in index order; ties resolve to
// the lexicographically smallest assignment. The loss couples sources within
// a row, so the search is not separable per source and is done by full
// enumeration.
MixitResult mixit_loss(const Waveform& x1, const Waveform& x2,
                       const SourceStack& ests, const LossSpec& spec);

// Exact minimizer of sum_i loss(refs[i], ests[perm[i]]) over all C!
// permutations (C <= 8). Ties resolve to the lexicographically smallest
// permutation.
PitResult pit_loss(const SourceStack& refs, const SourceStack& ests,
                   const LossSpec& spec);

// Same sweep as mixit_loss but scored against ground-truth references; the
// oracle-selection evaluation baseline.
MixitResult oracle_remix_select(const SourceStack& refs,
                                const SourceStack& ests, const LossSpec& spec);

// The `count` highest-energy sources in descending energy order; equal
// energies resolve to the lower original index.
EnergySelection select_top_energy(const SourceStack& ests, int count);

}  // namespace tsmix

#endif  // TSMIX_ASSIGN_H_
