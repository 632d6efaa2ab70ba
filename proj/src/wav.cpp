#include "hse/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "hse/error.h"

namespace hse {

namespace {

std::uint32_t u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>(v >> 8));
}
void tag(std::vector<unsigned char>& b, const char* t) { b.insert(b.end(), t, t + 4); }

}  // namespace

AudioClip wav_read(const std::string& path, int resample_to) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw IoError(path + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* h = buf.data() + pos;
    const std::size_t len = u32(h + 4);
    const std::size_t body = pos + 8;
    if (len > buf.size() - body) {
      // Tolerate a truncated final data chunk; anything else is malformed.
      if (std::memcmp(h, "data", 4) != 0) throw IoError(path + ": truncated chunk");
    }
    const std::size_t avail = std::min(len, buf.size() - body);
    if (std::memcmp(h, "fmt ", 4) == 0) {
      if (avail < 16) throw IoError(path + ": short fmt chunk");
      format = u16(h + 8);
      channels = u16(h + 10);
      rate = u32(h + 12);
      bits = u16(h + 22);
      if (format == 0xFFFE && avail >= 26) format = u16(h + 32);
    } else if (std::memcmp(h, "data", 4) == 0) {
      data = h + 8;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!format || !channels || !rate) throw IoError(path + ": missing fmt chunk");
  if (!data) throw IoError(path + ": missing data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) {
    throw IoError(path + ": unsupported codec (format " + std::to_string(format) +
                  ", " + std::to_string(bits) + " bits); need PCM16 or float32");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  if (frames == 0) throw IoError(path + ": no samples");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(u16(p)) / 32768.0;
      } else {
        float f;
        std::uint32_t bitsv = u32(p);
        std::memcpy(&f, &bitsv, 4);
        if (!std::isfinite(f)) throw IoError(path + ": non-finite sample");
        acc += f;
      }
    }
    clip.samples[i] = acc / channels;
  }
  if (resample_to > 0 && clip.sample_rate != resample_to) {
    clip = resample(clip, resample_to);
  }
  return clip;
}

void wav_write(const std::string& path, const AudioClip& clip,
               WavFormat format) {
  const bool pcm16 = format == WavFormat::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));
  std::vector<unsigned char> b;
  tag(b, "RIFF");
  put32(b, 36 + data_len);
  tag(b, "WAVE");
  tag(b, "fmt ");
  put32(b, 16);
  put16(b, pcm16 ? 1 : 3);
  put16(b, 1);
  put32(b, static_cast<std::uint32_t>(clip.sample_rate));
  put32(b, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  put16(b, bits / 8);
  put16(b, bits);
  tag(b, "data");
  put32(b, data_len);
  for (double x : clip.samples) {
    if (pcm16) {
      const double v = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    } else {
      const float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put32(b, u);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace hse
