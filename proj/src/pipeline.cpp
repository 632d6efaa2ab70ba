#include "hse/pipeline.h"

#include "hse/error.h"
#include "hse/ops.h"

namespace hse {

AudioClip enhance(const Model& model, const AudioClip& noisy) {
  const Spectrogram y = stft(noisy);
  const MaskOutput out = model.forward(model_input(y.bins, model.spec().input_mode));
  const Tensor est = istft_interior(apply_output(out, y.bins));
  AudioClip clip;
  clip.sample_rate = noisy.sample_rate;
  clip.samples = est.vec();
  return clip;
}

BatchTensors run_batch(const Model& model, const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw ConfigError("empty batch");
  const std::size_t n = pairs[0].noisy.size();
  std::vector<Tensor> re, im, refs;
  for (const TrainingPair& p : pairs) {
    if (p.noisy.size() != n || p.clean.size() != n) {
      throw ShapeError("batch pairs differ in length");
    }
    const Spectrogram y = stft(p.noisy);
    re.push_back(y.bins.re);
    im.push_back(y.bins.im);
    const AudioClip c = interior(p.clean, y.frames());
    refs.push_back(Tensor(Shape(1, 1, 1, c.size()), c.samples));
  }
  const ComplexTensor y{concat(re, kBatch), concat(im, kBatch)};
  const MaskOutput out = model.forward(model_input(y, model.spec().input_mode));
  return {istft_interior(apply_output(out, y)), concat(refs, kBatch)};
}

}  // namespace hse
