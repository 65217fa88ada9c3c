// src/losses.cc

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

#include "tsmix/losses.h"

#include <cmath>
#include <string>

#include "tsmix/error.h"

namespace tsmix {

namespace {

constexpr double kDbScale = 10.0 / M_LN10;  // 10/ln(10), d(10*log10(u))/du = kDbScale/u

void check_equal_length(std::size_t a, std::size_t b, const char* who) {
  if (a != b) {
    raise(ErrorKind::invalid_argument,
          std::string(who) + ": length mismatch, " + std::to_string(a) +
              " vs " + std::to_string(b));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_norm(std::span<const double> a) { return dot(a, a); }

double mean_of(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s / static_cast<double>(a.size());
}

double thresh_snr_value(std::span<const double> y, std::span<const double> yhat,
                        const LossSpec& spec) {
  double ey = sq_norm(y);
  double diff = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double d = y[t] - yhat[t];
    diff += d * d;
  }
  return 10.0 * std::log10(diff + spec.tau() * ey + spec.epsilon) -
         10.0 * std::log10(ey + spec.epsilon);
}

double si_snr_raw(std::span<const double> y, std::span<const double> yhat,
                  double epsilon) {
  double ey = sq_norm(y);
  double alpha = dot(yhat, y) / (ey + epsilon);
  double target = alpha * alpha * ey;
  double resid = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double r = alpha * y[t] - yhat[t];
    resid += r * r;
  }
  return 10.0 * std::log10((target + epsilon) / (resid + epsilon));
}

}  // namespace

double LossSpec::tau() const { return std::pow(10.0, -snr_max_db / 10.0); }

double neg_thresh_snr(const Waveform& y, const Waveform& yhat,
                      const LossSpec& spec) {
  check_equal_length(y.size(), yhat.size(), "neg_thresh_snr");
  return thresh_snr_value(y.samples(), yhat.samples(), spec);
}

double si_snr(const Waveform& y, const Waveform& yhat, double epsilon,
              bool remove_mean) {
  check_equal_length(y.size(), yhat.size(), "si_snr");
  if (energy(y) <= 0.0) {
    raise(ErrorKind::invalid_argument, "si_snr: zero-energy reference");
  }
  if (!remove_mean) return si_snr_raw(y.samples(), yhat.samples(), epsilon);
  std::vector<double> yc(y.samples()), ec(yhat.samples());
  double my = mean_of(yc), me = mean_of(ec);
  for (double& v : yc) v -= my;
  for (double& v : ec) v -= me;
  return si_snr_raw(yc, ec, epsilon);
}

double si_snr_improvement(const Waveform& mixture, const Waveform& estimate,
                          const Waveform& reference, double epsilon,
                          bool remove_mean) {
  return si_snr(reference, estimate, epsilon, remove_mean) -
         si_snr(reference, mixture, epsilon, remove_mean);
}

std::vector<std::vector<double>> loss_matrix(const SourceStack& refs,
                                             const SourceStack& ests,
                                             const LossSpec& spec) {
  check_equal_length(refs.length(), ests.length(), "loss_matrix");
  std::vector<std::vector<double>> out(refs.count(),
                                       std::vector<double>(ests.count()));
  for (std::size_t i = 0; i < refs.count(); ++i) {
    for (std::size_t j = 0; j < ests.count(); ++j) {
      out[i][j] = loss_value(refs[i].samples(), ests[j].samples(), spec);
    }
  }
  return out;
}

double loss_value(std::span<const double> y, std::span<const double> yhat,
                  const LossSpec& spec) {
  check_equal_length(y.size(), yhat.size(), "loss_value");
  switch (spec.kind) {
    case LossKind::thresholded_snr:
      return thresh_snr_value(y, yhat, spec);
    case LossKind::si_snr_negative:
      return -si_snr_raw(y, yhat, spec.epsilon);
  }
  raise(ErrorKind::invalid_argument, "loss_value: unknown loss kind");
}

double loss_value_grad(std::span<const double> y, std::span<const double> yhat,
                       const LossSpec& spec, std::span<double> grad_yhat) {
  check_equal_length(y.size(), yhat.size(), "loss_value_grad");
  check_equal_length(grad_yhat.size(), yhat.size(), "loss_value_grad(grad)");
  const std::size_t n = y.size();
  if (spec.kind == LossKind::thresholded_snr) {
    double ey = sq_norm(y);
    double diff = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double d = y[t] - yhat[t];
      diff += d * d;
    }
    double denom = diff + spec.tau() * ey + spec.epsilon;
    for (std::size_t t = 0; t < n; ++t) {
      grad_yhat[t] = kDbScale * 2.0 * (yhat[t] - y[t]) / denom;
    }
    return 10.0 * std::log10(denom) - 10.0 * std::log10(ey + spec.epsilon);
  }

  // Negative SI-SNR. alpha depends on yhat, so the chain runs through both
  // the projected target and the residual.
  const double eps = spec.epsilon;
  double ey = sq_norm(y);
  double s = dot(yhat, y);
  double alpha = s / (ey + eps);
  double target = alpha * alpha * ey;
  double resid = 0.0;
  double resid_dot_y = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double r = alpha * y[t] - yhat[t];
    resid += r * r;
    resid_dot_y += r * y[t];
  }
  double value = -10.0 * std::log10((target + eps) / (resid + eps));
  double dalpha_scale = 1.0 / (ey + eps);  // d alpha / d yhat_t = y_t * this
  double c_target = -kDbScale / (target + eps);
  double c_resid = kDbScale / (resid + eps);
  // d target / d yhat_t = 2*alpha*ey * y_t/(ey+eps)
  // d resid  / d yhat_t = 2*<r, y> * y_t/(ey+eps) - 2*r_t
  for (std::size_t t = 0; t < n; ++t) {
    double da = y[t] * dalpha_scale;
    double dtarget = 2.0 * alpha * ey * da;
    double rt = alpha * y[t] - yhat[t];
    double dresid = 2.0 * resid_dot_y * da - 2.0 * rt;
    grad_yhat[t] = c_target * dtarget + c_resid * dresid;
  }
  return value;
}

}  // namespace tsmix
