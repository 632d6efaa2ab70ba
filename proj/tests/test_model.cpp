#include <gtest/gtest.h>

#include <set>

#include "hse/dsp.h"
#include "hse/error.h"
#include "hse/model.h"
#include "hse/ops.h"
#include "hse/shipped.h"
#include "test_util.h"

using namespace hse;
using hse::testing::random_complex;

TEST(Model, OutputShapesMatchInputForAllShipped) {
  std::mt19937_64 rng(1);
  for (const std::string& n : shipped_names()) {
    Model m(shipped_spec(n));
    m.init(7);
    const ComplexTensor z = random_complex(Shape(2, 1, 129, 3), rng, 0.0, 1.0);
    const MaskOutput out = m.forward(z);
    if (out.hybrid) {
      EXPECT_EQ(out.mag_mask.shape(), z.shape()) << n;
      EXPECT_EQ(out.correction.shape(), z.shape()) << n;
    } else {
      EXPECT_EQ(out.mask.shape(), z.shape()) << n;
    }
    EXPECT_EQ(apply_output(out, z).shape(), z.shape()) << n;
  }
}

TEST(Model, WrongBinsIsGeometryError) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(1);
  EXPECT_THROW(m.forward(ComplexTensor::zeros(Shape(1, 1, 128, 2))), GeometryError);
  EXPECT_THROW(m.forward(ComplexTensor::zeros(Shape(1, 2, 129, 2))), GeometryError);
}

TEST(Model, ParameterNamesUniqueAndCountsAgree) {
  for (const std::string& n : shipped_names()) {
    Model m(shipped_spec(n));
    std::set<std::string> names;
    std::size_t scalars = 0;
    for (const NamedTensor& t : m.parameters()) {
      names.insert(t.name);
      scalars += t.tensor->numel();
    }
    EXPECT_EQ(names.size(), m.parameters().size()) << n;
    EXPECT_EQ(scalars, m.stored_scalars()) << n;
    EXPECT_EQ(m.param_count(), total_params(shipped_spec(n))) << n;
  }
}

TEST(Model, InitIsDeterministic) {
  Model a(shipped_spec("toy_hCDAE")), b(shipped_spec("toy_hCDAE")), c(shipped_spec("toy_hCDAE"));
  a.init(5);
  b.init(5);
  c.init(6);
  const auto va = a.parameter_values(), vb = b.parameter_values(), vc = c.parameter_values();
  bool differs = false;
  for (std::size_t i = 0; i < va.size(); ++i) {
    EXPECT_EQ(va[i].vec(), vb[i].vec());
    differs = differs || va[i].vec() != vc[i].vec();
  }
  EXPECT_TRUE(differs);
}

TEST(Model, HybridZeroFinalWeightsGiveHalfMask) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(3);
  auto params = m.parameters();
  for (NamedTensor& t : params) {
    if (t.name.rfind("real.dec.convT1", 0) == 0 || t.name.rfind("complex.dec.convT1", 0) == 0) {
      *t.tensor = Tensor::zeros(t.tensor->shape());
    }
  }
  std::mt19937_64 rng(2);
  const MaskOutput out = m.forward(random_complex(Shape(1, 1, 129, 4), rng));
  for (double v : out.mag_mask.vec()) EXPECT_EQ(v, 0.5);
  for (double v : out.correction.re.vec()) EXPECT_EQ(v, 0.0);
  for (double v : out.correction.im.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Model, RealModelZeroInputZeroBiasGivesZeroMask) {
  Model m(shipped_spec("toy_rCDAE"));
  m.init(3);
  for (NamedTensor& t : m.parameters()) {
    if (t.name.find("bias") != std::string::npos) *t.tensor = Tensor::zeros(t.tensor->shape());
  }
  const MaskOutput out = m.forward(ComplexTensor::zeros(Shape(1, 1, 129, 2)));
  for (double v : out.mask.re.vec()) EXPECT_EQ(v, 0.0);
  for (double v : out.mask.im.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Model, DebugInits) {
  std::mt19937_64 rng(4);
  const ComplexTensor y = random_complex(Shape(1, 1, 129, 3), rng);
  for (const char* n : {"toy_hCDAE", "cCDAE", "hCRN"}) {
    Model m(shipped_spec(n));
    m.init_debug(DebugInit::kIdentity);
    const ComplexTensor s = apply_output(m.forward(y), y);
    EXPECT_EQ(s.re.vec(), y.re.vec()) << n;
    EXPECT_EQ(s.im.vec(), y.im.vec()) << n;
    m.init_debug(DebugInit::kZero);
    const ComplexTensor z = apply_output(m.forward(y), y);
    for (double v : z.re.vec()) EXPECT_EQ(v, 0.0);
    for (double v : z.im.vec()) EXPECT_EQ(v, 0.0);
  }
  Model r(shipped_spec("toy_rCDAE"));
  EXPECT_THROW(r.init_debug(DebugInit::kIdentity), ConfigError);
}

TEST(ApplyOutput, MaskAndHybridLaws) {
  std::mt19937_64 rng(5);
  const Shape s(1, 1, 4, 2);
  const ComplexTensor y = random_complex(s, rng);
  const ComplexTensor z = random_complex(s, rng);

  MaskOutput unit;
  unit.mask = {Tensor::ones(s), Tensor::zeros(s)};
  EXPECT_EQ(apply_output(unit, y).re.vec(), y.re.vec());

  MaskOutput corr;
  corr.hybrid = true;
  corr.mag_mask = Tensor::zeros(s);
  corr.correction = z;
  EXPECT_EQ(apply_output(corr, y).im.vec(), z.im.vec());

  MaskOutput cancel;
  cancel.hybrid = true;
  cancel.mag_mask = Tensor::ones(s);
  cancel.correction = {neg(y.re), neg(y.im)};
  const ComplexTensor out = apply_output(cancel, y);
  for (double v : out.re.vec()) EXPECT_EQ(v, 0.0);
  for (double v : out.im.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Model, GradientsReachEveryParameter) {
  for (const char* n : {"toy_hCDAE", "toy_rCDAE"}) {
    Model m(shipped_spec(n));
    m.init(9);
    std::mt19937_64 rng(6);
    const ComplexTensor y = random_complex(Shape(1, 1, 129, 2), rng);
    Tape tape;
    m.bind(tape);
    const Tensor loss = hse::testing::project(apply_output(m.forward(y), y), 3);
    const Gradients g = tape.backward(loss, GradRetention::kLeaves);
    for (NamedTensor& t : m.parameters()) EXPECT_TRUE(g.contains(*t.tensor)) << t.name;
    m.unbind();
    for (NamedTensor& t : m.parameters()) EXPECT_FALSE(t.tensor->tracked());
  }
}

TEST(Model, ParameterGradientMatchesFiniteDifferences) {
  Model m(shipped_spec("toy_hCDAE"));
  m.init(10);
  std::mt19937_64 rng(7);
  const ComplexTensor y = random_complex(Shape(1, 1, 129, 2), rng, 0.0, 1.0);
  const std::size_t idx = 0;
  const Tensor w0 = m.parameter_values()[idx];
  auto f = [&](const Tensor& w) {
    Model copy = m;
    *copy.parameters()[idx].tensor = w;
    return hse::testing::project(apply_output(copy.forward(y), y), 5);
  };
  EXPECT_LT(hse::testing::grad_check(f, w0), 1e-5);
}
