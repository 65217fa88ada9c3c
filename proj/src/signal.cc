// src/signal.cc

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

#include "tsmix/signal.h"

#include <cmath>
#include <string>

#include "tsmix/error.h"

namespace tsmix {

Waveform::Waveform(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.empty()) {
    raise(ErrorKind::invalid_argument, "Waveform: empty sample buffer");
  }
  if (sample_rate_ <= 0) {
    raise(ErrorKind::invalid_argument,
          "Waveform: sample_rate must be positive, got " +
              std::to_string(sample_rate_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      raise(ErrorKind::numeric,
            "Waveform: non-finite sample at index " + std::to_string(i));
    }
  }
}

SourceStack::SourceStack(std::vector<Waveform> sources)
    : sources_(std::move(sources)) {
  if (sources_.empty()) {
    raise(ErrorKind::invalid_argument, "SourceStack: no sources");
  }
  const std::size_t len = sources_.front().size();
  const int rate = sources_.front().sample_rate();
  for (std::size_t m = 1; m < sources_.size(); ++m) {
    if (sources_[m].size() != len) {
      raise(ErrorKind::invalid_argument,
            "SourceStack: source " + std::to_string(m) + " has length " +
                std::to_string(sources_[m].size()) + ", expected " +
                std::to_string(len));
    }
    if (sources_[m].sample_rate() != rate) {
      raise(ErrorKind::invalid_argument,
            "SourceStack: source " + std::to_string(m) + " has sample_rate " +
                std::to_string(sources_[m].sample_rate()) + ", expected " +
                std::to_string(rate));
    }
  }
}

Waveform mix(const SourceStack& stack) {
  const std::size_t len = stack.length();
  std::vector<double> sum(len, 0.0);
  for (std::size_t m = 0; m < stack.count(); ++m) {
    const std::vector<double>& s = stack[m].samples();
    for (std::size_t t = 0; t < len; ++t) sum[t] += s[t];
  }
  return Waveform(std::move(sum), stack.sample_rate());
}

double energy_raw(const std::vector<double>& samples) {
  double e = 0.0;
  for (double v : samples) e += v * v;
  return e;
}

double energy(const Waveform& w) { return energy_raw(w.samples()); }

std::vector<Waveform> segment(const Waveform& w, double seg_seconds,
                              bool drop_last) {
  if (!(seg_seconds > 0.0)) {
    raise(ErrorKind::invalid_argument, "segment: seg_seconds must be > 0");
  }
  const std::size_t seg_len = static_cast<std::size_t>(
      std::floor(seg_seconds * static_cast<double>(w.sample_rate())));
  if (seg_len == 0) {
    raise(ErrorKind::invalid_argument,
          "segment: segment length is 0 samples at rate " +
              std::to_string(w.sample_rate()));
  }
  const std::vector<double>& s = w.samples();
  std::vector<Waveform> out;
  std::size_t full = s.size() / seg_len;
  for (std::size_t k = 0; k < full; ++k) {
    out.emplace_back(
        std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(k * seg_len),
                            s.begin() + static_cast<std::ptrdiff_t>((k + 1) * seg_len)),
        w.sample_rate());
  }
  const std::size_t rem = s.size() - full * seg_len;
  if (rem > 0 && !drop_last) {
    std::vector<double> tail(seg_len, 0.0);
    for (std::size_t t = 0; t < rem; ++t) tail[t] = s[full * seg_len + t];
    out.emplace_back(std::move(tail), w.sample_rate());
  }
  return out;
}

double quantize_pcm16(double x) {
  double q = std::nearbyint(x * 32768.0);
  if (q < -32768.0) q = -32768.0;
  if (q > 32767.0) q = 32767.0;
  return q / 32768.0;
}

Waveform quantize_pcm16(const Waveform& w) {
  std::vector<double> out(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) out[t] = quantize_pcm16(w[t]);
  return Waveform(std::move(out), w.sample_rate());
}

}  // namespace tsmix
