// kws/wav.hpp

// Copyright 2026  kws-e2e authors

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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kws/binio.hpp"
#include "kws/error.hpp"

namespace kws {

struct AudioBuffer {
  std::vector<int16_t> samples;
  int sample_rate = 16000;
};

// Reads a RIFF/WAVE file. Accepts PCM, 16-bit, mono only; files at any rate
// other than required_rate are rejected (there is no resampler).
inline AudioBuffer read_wav(const std::string& path, int required_rate = 16000) {
  std::ifstream is = open_in(path);

  check_magic(is, "RIFF", "wav file " + path);
  read_u32(is, "riff size");
  check_magic(is, "WAVE", "wav file " + path);

  AudioBuffer audio;
  bool have_fmt = false, have_data = false;
  while (!have_data) {
    char id[4];
    is.read(id, 4);
    if (!is) throw FormatError("wav file " + path + " has no data chunk");
    uint32_t size = read_u32(is, "chunk size");
    std::string chunk(id, 4);
    if (chunk == "fmt ") {
      if (size < 16) throw FormatError("wav fmt chunk too small in " + path);
      uint16_t format = read_u16(is, "audio format");
      uint16_t channels = read_u16(is, "channel count");
      uint32_t rate = read_u32(is, "sample rate");
      read_u32(is, "byte rate");
      read_u16(is, "block align");
      uint16_t bits = read_u16(is, "bits per sample");
      is.ignore(size - 16);
      if (format != 1) throw FormatError("wav file " + path + " is not PCM");
      if (channels != 1) throw FormatError("wav file " + path + " is not mono");
      if (bits != 16) throw FormatError("wav file " + path + " is not 16-bit");
      if (static_cast<int>(rate) != required_rate)
        throw FormatError("wav file " + path + " has sample rate " +
                          std::to_string(rate) + ", expected " +
                          std::to_string(required_rate));
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw FormatError("wav data chunk precedes fmt in " + path);
      uint32_t n = size / 2;
      audio.samples.resize(n);
      for (uint32_t i = 0; i < n; ++i)
        audio.samples[i] = static_cast<int16_t>(read_u16(is, "sample"));
      have_data = true;
    } else {
      // skip unknown chunk (word-aligned)
      is.ignore(size + (size & 1));
      if (!is) throw FormatError("truncated chunk in " + path);
    }
  }
  return audio;
}

inline void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::ofstream os = open_out(path);
  uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  os.write("RIFF", 4);
  write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32(os, 16);
  write_u16(os, 1);  // PCM
  write_u16(os, 1);  // mono
  write_u32(os, static_cast<uint32_t>(audio.sample_rate));
  write_u32(os, static_cast<uint32_t>(audio.sample_rate * 2));
  write_u16(os, 2);
  write_u16(os, 16);
  os.write("data", 4);
  write_u32(os, data_bytes);
  for (int16_t s : audio.samples) write_u16(os, static_cast<uint16_t>(s));
  if (!os) throw ValidationError("failed writing wav: " + path);
}

}  // namespace kws
