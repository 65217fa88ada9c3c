// include/tsmix/losses.h

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

#ifndef TSMIX_LOSSES_H_
#define TSMIX_LOSSES_H_

#include <span>
#include <vector>

#include "tsmix/signal.h"

namespace tsmix {

enum class LossKind { thresholded_snr, si_snr_negative };

// Signal-level training loss selector. tau is always derived from snr_max_db,
// never stored separately.
struct LossSpec {
  LossKind kind = LossKind::thresholded_snr;
  double snr_max_db = 30.0;
  double epsilon = 1e-12;

  double tau() const;
};

// Negative thresholded SNR in dB:
//   10*log10(||y - yhat||^2 + tau*||y||^2 + eps) - 10*log10(||y||^2 + eps)
// with tau = 10^(-snr_max_db/10). Lower is better; the clamp floor is
// -snr_max_db for a perfect reconstruction.
double neg_thresh_snr(const Waveform& y, const Waveform& yhat,
                      const LossSpec& spec);

// Scale-invariant SNR in dB using the projection definition:
//   alpha = <yhat, y> / (||y||^2 + eps)
//   10*log10((||alpha*y||^2 + eps) / (||alpha*y - yhat||^2 + eps))
// remove_mean subtracts each signal's mean first (evaluation variant; off by
// default and never used for training).
double si_snr(const Waveform& y, const Waveform& yhat, double epsilon = 1e-12,
              bool remove_mean = false);

// si_snr(reference, estimate) - si_snr(reference, mixture).
double si_snr_improvement(const Waveform& mixture, const Waveform& estimate,
                          const Waveform& reference, double epsilon = 1e-12,
                          bool remove_mean = false);

// Entry (i, j) = loss(refs[i], ests[j], spec). Shared kernel for the
// assignment solvers.
std::vector<std::vector<double>> loss_matrix(const SourceStack& refs,
                                             const SourceStack& ests,
                                             const LossSpec& spec);

// Raw-buffer kernels used by the solvers and the training loop.
double loss_value(std::span<const double> y, std::span<const double> yhat,
                  const LossSpec& spec);

// Loss plus dL/dyhat (assigned, not accumulated). The reference y is treated
// as constant.
double loss_value_grad(std::span<const double> y, std::span<const double> yhat,
                       const LossSpec& spec, std::span<double> grad_yhat);

}  // namespace tsmix

#endif  // TSMIX_LOSSES_H_
