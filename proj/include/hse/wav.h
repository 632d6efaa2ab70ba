#pragma once

#include <string>

#include "hse/dsp.h"

namespace hse {

enum class WavFormat { kPcm16, kFloat32 };

// RIFF/WAVE with 16-bit PCM or 32-bit float samples. Multichannel input is
// averaged to mono; other rates are resampled to 16 kHz unless `resample_to`
// is 0.
AudioClip wav_read(const std::string& path, int resample_to = kSampleRate);
void wav_write(const std::string& path, const AudioClip& clip,
               WavFormat format = WavFormat::kPcm16);

}  // namespace hse
