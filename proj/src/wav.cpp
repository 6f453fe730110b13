#include "gagnet/wav.hpp"

#include "gagnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gagnet {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void wr_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

WaveBuffer read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open '" + path + "'");
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 || std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw DataError("wav: '" + path + "' is not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const unsigned char* hdr = raw.data() + pos;
    std::uint32_t chunk_len = rd_u32(hdr + 4);
    pos += 8;
    if (pos + chunk_len > raw.size()) throw DataError("wav: truncated chunk in '" + path + "'");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("wav: fmt chunk too short in '" + path + "'");
      const unsigned char* p = raw.data() + pos;
      format = rd_u16(p);
      channels = rd_u16(p + 2);
      rate = rd_u32(p + 4);
      bits = rd_u16(p + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = raw.data() + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) throw DataError("wav: missing fmt or data chunk in '" + path + "'");
  if (format != 1) throw DataError("wav: '" + path + "' has format tag " + std::to_string(format) + ", expected PCM (1)");
  if (channels != 1) throw DataError("wav: '" + path + "' has " + std::to_string(channels) + " channels, expected mono");
  if (bits != 16) throw DataError("wav: '" + path + "' has " + std::to_string(bits) + " bits per sample, expected 16");

  WaveBuffer wave;
  wave.sample_rate = static_cast<int>(rate);
  const Index n = data_len / 2;
  wave.samples.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(rd_u16(data + 2 * i));
    wave.samples[static_cast<size_t>(i)] = static_cast<Real>(s) / 32767.0;
  }
  return wave;
}

void write_wav(const std::string& path, const WaveBuffer& wave) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write '" + path + "'");
  const std::uint32_t n = static_cast<std::uint32_t>(wave.samples.size());
  const std::uint32_t data_len = n * 2;
  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, 1);  // PCM
  wr_u16(f, 1);  // mono
  wr_u32(f, static_cast<std::uint32_t>(wave.sample_rate));
  wr_u32(f, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  wr_u16(f, 2);
  wr_u16(f, 16);
  f.write("data", 4);
  wr_u32(f, data_len);
  for (std::uint32_t i = 0; i < n; ++i) {
    const Real x = std::clamp(wave.samples[i], -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lrint(x * 32767.0));
    wr_u16(f, static_cast<std::uint16_t>(q));
  }
  if (!f) throw DataError("wav: write failed for '" + path + "'");
}

}  // namespace gagnet
