// include/tsmix/signal.h

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

#ifndef TSMIX_SIGNAL_H_
#define TSMIX_SIGNAL_H_

#include <cstddef>
#include <vector>

namespace tsmix {

constexpr int kDefaultSampleRate = 8000;

// Mono sample sequence. Immutable after construction; construction rejects
// empty buffers, non-finite samples and non-positive rates.
class Waveform {
 public:
  Waveform(std::vector<double> samples, int sample_rate = kDefaultSampleRate);

  const std::vector<double>& samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

// Ordered set of equal-length, equal-rate waveforms.
class SourceStack {
 public:
  explicit SourceStack(std::vector<Waveform> sources);

  const std::vector<Waveform>& sources() const { return sources_; }
  const Waveform& operator[](std::size_t i) const { return sources_[i]; }
  std::size_t count() const { return sources_.size(); }
  std::size_t length() const { return sources_.front().size(); }
  int sample_rate() const { return sources_.front().sample_rate(); }

 private:
  std::vector<Waveform> sources_;
};

// Element-wise sum over sources, accumulated left to right in source order.
Waveform mix(const SourceStack& stack);

// Sum of squared samples over the whole waveform (not RMS, not per segment).
double energy(const Waveform& w);
double energy_raw(const std::vector<double>& samples);

// Non-overlapping contiguous segments of floor(seg_seconds * sample_rate)
// samples. The trailing partial segment is dropped when drop_last, otherwise
// zero-padded to full length.
std::vector<Waveform> segment(const Waveform& w, double seg_seconds,
                              bool drop_last);

// Snap a sample to the 16-bit PCM grid used by the WAV layer: round to the
// nearest multiple of 1/32768, clamped to [-1, 32767/32768]. Applying it
// twice is a no-op, and writing an already-snapped waveform to WAV and
// reading it back reproduces the samples bit-exactly.
double quantize_pcm16(double x);
Waveform quantize_pcm16(const Waveform& w);

}  // namespace tsmix

#endif  // TSMIX_SIGNAL_H_
