// include/tsmix/wav.h

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

#ifndef TSMIX_WAV_H_
#define TSMIX_WAV_H_

#include <string>

#include "tsmix/signal.h"

namespace tsmix {

// RIFF/WAVE, PCM 16-bit little-endian, mono only. Multi-channel files and
// non-PCM encodings are rejected with an error naming the offending field.
Waveform read_wav(const std::string& path);

// Samples are clamped to [-1, 32767/32768] and rounded to the 16-bit grid
// (see quantize_pcm16). Write-then-read reproduces samples to within one
// quantization step; pre-quantized samples round-trip bit-exactly.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace tsmix

#endif  // TSMIX_WAV_H_
