// src/wav.cc

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

#include "tsmix/wav.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "tsmix/error.h"

namespace tsmix {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::vector<char>& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    raise(ErrorKind::io, "read_wav: " + path + " is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_size = get_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      raise(ErrorKind::io, "read_wav: truncated chunk in " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) raise(ErrorKind::io, "read_wav: short fmt chunk");
      format = get_u16(bytes.data() + body);
      channels = get_u16(bytes.data() + body + 2);
      rate = get_u32(bytes.data() + body + 4);
      bits = get_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    // Chunks are word-aligned; odd sizes carry a pad byte.
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt || data == nullptr) {
    raise(ErrorKind::io, "read_wav: missing fmt or data chunk in " + path);
  }
  if (format != kFormatPcm) {
    raise(ErrorKind::io, "read_wav: unsupported encoding tag " +
                             std::to_string(format) + " in " + path +
                             " (only PCM is supported)");
  }
  if (channels != 1) {
    raise(ErrorKind::io, "read_wav: " + path + " has " +
                             std::to_string(channels) +
                             " channels; only mono input is supported");
  }
  if (bits != 16) {
    raise(ErrorKind::io, "read_wav: unsupported bit depth " +
                             std::to_string(bits) + " in " + path);
  }

  std::size_t num_samples = data_size / 2;
  if (num_samples == 0) raise(ErrorKind::io, "read_wav: empty data chunk");
  std::vector<double> samples(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    std::int16_t v = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(data[2 * i] | (data[2 * i + 1] << 8)));
    samples[i] = static_cast<double>(v) / 32768.0;
  }
  return Waveform(std::move(samples), static_cast<int>(rate));
}

void write_wav(const std::string& path, const Waveform& w) {
  const std::vector<double>& s = w.samples();
  std::uint32_t data_size = static_cast<std::uint32_t>(s.size() * 2);
  std::vector<char> buf;
  buf.reserve(44 + data_size);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  put_u32(buf, 36 + data_size);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
  buf.insert(buf.end(), {'f', 'm', 't', ' '});
  put_u32(buf, 16);
  put_u16(buf, kFormatPcm);
  put_u16(buf, 1);  // mono
  put_u32(buf, static_cast<std::uint32_t>(w.sample_rate()));
  put_u32(buf, static_cast<std::uint32_t>(w.sample_rate()) * 2);
  put_u16(buf, 2);   // block align
  put_u16(buf, 16);  // bits per sample
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  put_u32(buf, data_size);
  for (double x : s) {
    // quantize_pcm16 is the single source of truth for the rounding rule.
    std::int16_t v =
        static_cast<std::int16_t>(quantize_pcm16(x) * 32768.0);
    put_u16(buf, static_cast<std::uint16_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "write_wav: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) raise(ErrorKind::io, "write_wav: write failed for " + path);
}

}  // namespace tsmix
