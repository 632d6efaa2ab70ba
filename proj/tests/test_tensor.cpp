#include <gtest/gtest.h>

#include "hse/error.h"
#include "hse/mac_counter.h"
#include "hse/layers.h"
#include "hse/ops.h"
#include "test_util.h"

using namespace hse;
using hse::testing::grad_check;
using hse::testing::random_tensor;

namespace {

Tensor row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape(1, 1, 1, n), std::move(v));
}

Tensor mat(std::size_t m, std::size_t k, std::vector<double> v) {
  return Tensor(Shape(1, 1, m, k), std::move(v));
}

}  // namespace

TEST(Shape, StridesAreRowMajor) {
  Shape s(2, 3, 4, 5);
  EXPECT_EQ(s.numel(), 120u);
  EXPECT_EQ(s.stride(kTime), 1u);
  EXPECT_EQ(s.stride(kFreq), 5u);
  EXPECT_EQ(s.stride(kChannel), 20u);
  EXPECT_EQ(s.stride(kBatch), 60u);
}

TEST(Tensor, ConstructorChecksSize) {
  EXPECT_THROW(Tensor(Shape(1, 1, 1, 3), {1.0, 2.0}), ShapeError);
}

TEST(Ops, AddElementwise) {
  const Tensor y = add(row({1, 2}), row({3, 4}));
  EXPECT_EQ(y.vec(), (std::vector<double>{4, 6}));
}

TEST(Ops, AddShapeMismatchThrows) {
  EXPECT_THROW(add(row({1, 2}), row({1, 2, 3})), ShapeError);
}

TEST(Ops, MulByZeroGivesZeroGradient) {
  Tape tape;
  const Tensor x = tape.watch(row({1.5, -2.0, 3.0}));
  const Tensor y = mul(x, Tensor::zeros(x.shape()));
  for (double v : y.vec()) EXPECT_EQ(v, 0.0);
  const Gradients g = tape.backward(sum(y));
  for (double v : g.of(x).vec()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, SquareDerivativeAtThree) {
  Tape tape;
  const Tensor x = tape.watch(Tensor::scalar(3.0));
  const Gradients g = tape.backward(mul(x, x));
  EXPECT_DOUBLE_EQ(g.of(x).item(), 6.0);
}

TEST(Ops, DivisionByZeroThrows) {
  EXPECT_THROW(div(row({1.0}), row({0.0})), NumericError);
}

TEST(Ops, Log10OfNonPositiveThrows) {
  EXPECT_THROW(log10(row({0.0})), NumericError);
}

TEST(Ops, Broadcast) {
  const Tensor a = Tensor(Shape(1, 2, 1, 1), {1.0, 2.0});
  const Tensor b = broadcast_to(a, Shape(1, 2, 1, 3));
  EXPECT_EQ(b.vec(), (std::vector<double>{1, 1, 1, 2, 2, 2}));
}

TEST(Matmul, IdentityTimesMatrix) {
  const Tensor y = matmul(mat(2, 2, {1, 0, 0, 1}), mat(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(y.vec(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, RowTimesColumn) {
  const Tensor y = matmul(mat(1, 2, {1, 0}), mat(2, 1, {2, 3}));
  EXPECT_EQ(y.shape(), Shape(1, 1, 1, 1));
  EXPECT_EQ(y.item(), 2.0);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(mat(2, 3, std::vector<double>(6)), mat(2, 2, std::vector<double>(4))),
               ShapeError);
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(Shape(1, 1, 3, 4), rng);
  const Tensor b = random_tensor(Shape(1, 1, 4, 2), rng);
  Tape tape;
  const Tensor wa = tape.watch(a);
  const Gradients g = tape.backward(sum(matmul(wa, b)));
  const Tensor ga = g.of(wa);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(ga.at(0, 0, i, k), b.at(0, 0, k, 0) + b.at(0, 0, k, 1), 1e-14);
    }
  }
  EXPECT_LT(grad_check([&](const Tensor& x) { return sum(matmul(x, b)); }, a), 1e-8);
}

TEST(Backward, SumGivesOnes) {
  Tape tape;
  const Tensor x = tape.watch(Tensor::full(Shape(2, 3, 4, 5), 0.3));
  const Gradients g = tape.backward(sum(x));
  EXPECT_EQ(g.of(x).shape(), x.shape());
  for (double v : g.of(x).vec()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, UntrackedRootGivesEmptyMap) {
  EXPECT_EQ(backward(Tensor::scalar(4.0)).size(), 0u);
}

TEST(Backward, NonScalarRootThrows) {
  Tape tape;
  const Tensor x = tape.watch(row({1, 2}));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Backward, ReusedInputAccumulates) {
  Tape tape;
  const Tensor x = tape.watch(Tensor::scalar(2.0));
  const Tensor y = add(mul(x, x), mul(x, Tensor::scalar(3.0)));
  EXPECT_DOUBLE_EQ(tape.backward(y).of(x).item(), 7.0);
}

TEST(FiniteDifference, SquareAtThree) {
  const Tensor g = finite_difference_grad(
      [](const Tensor& x) { return x.item() * x.item(); }, Tensor::scalar(3.0), 1e-4);
  EXPECT_NEAR(g.item(), 6.0, 1e-6);
}

TEST(FiniteDifference, ConstantGivesZeros) {
  const Tensor g = finite_difference_grad([](const Tensor&) { return 1.5; },
                                          Tensor::ones(Shape(1, 1, 2, 2)), 1e-4);
  for (double v : g.vec()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifference, ComplexTanhMatchesTape) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor re = random_tensor(Shape(1, 2, 3, 2), rng, -2.0, 2.0);
    const Tensor im = random_tensor(Shape(1, 2, 3, 2), rng, -2.0, 2.0);
    auto f = [&](const Tensor& x) {
      const ComplexTensor z = ctanh({x, im});
      return add(sum(z.re), sum(z.im));
    };
    EXPECT_LT(grad_check(f, re), 1e-4);
  }
}

class UnaryGrad : public ::testing::TestWithParam<int> {};

TEST_P(UnaryGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(100 + GetParam());
  const Tensor x = random_tensor(Shape(1, 2, 3, 2), rng, 0.1, 2.0);
  std::function<Tensor(const Tensor&)> f;
  switch (GetParam()) {
    case 0: f = [](const Tensor& v) { return hse::testing::project(sqrt(v), 1); }; break;
    case 1: f = [](const Tensor& v) { return hse::testing::project(log10(v), 1); }; break;
    case 2: f = [](const Tensor& v) { return hse::testing::project(exp(v), 1); }; break;
    case 3: f = [](const Tensor& v) { return hse::testing::project(tanh(v), 1); }; break;
    case 4: f = [](const Tensor& v) { return hse::testing::project(sigmoid(v), 1); }; break;
    case 5: f = [](const Tensor& v) { return hse::testing::project(div(Tensor::ones(v.shape()), v), 1); }; break;
    case 6: f = [](const Tensor& v) { return hse::testing::project(square(v), 1); }; break;
    case 7: f = [](const Tensor& v) { return mean(v); }; break;
  }
  EXPECT_LT(grad_check(f, x), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Ops, UnaryGrad, ::testing::Range(0, 8));

TEST(Ops, ReluAndClampGradientsAwayFromKinks) {
  const Tensor x = row({-1.5, -0.3, 0.4, 2.0});
  EXPECT_LT(grad_check([](const Tensor& v) { return hse::testing::project(relu(v), 2); }, x), 1e-8);
  EXPECT_LT(grad_check([](const Tensor& v) { return hse::testing::project(clamp(v, -1.0, 1.0), 2); }, x), 1e-8);
  EXPECT_LT(grad_check([](const Tensor& v) { return hse::testing::project(abs(v), 2); }, x), 1e-8);
}

TEST(Ops, ConcatAndSliceRoundTrip) {
  std::mt19937_64 rng(9);
  const Tensor a = random_tensor(Shape(2, 3, 4, 5), rng);
  for (int axis = 0; axis < 4; ++axis) {
    const std::size_t n = a.shape()[axis];
    const Tensor lo = slice(a, static_cast<Axis>(axis), 0, 1);
    const Tensor hi = slice(a, static_cast<Axis>(axis), 1, n);
    EXPECT_EQ(concat({lo, hi}, static_cast<Axis>(axis)).vec(), a.vec());
  }
  EXPECT_LT(grad_check([](const Tensor& v) {
              return hse::testing::project(concat({slice(v, kFreq, 2, 4), slice(v, kFreq, 0, 2)}, kChannel), 4);
            }, a), 1e-8);
}

TEST(Conv, HandConvolution) {
  const Tensor x(Shape(1, 1, 4, 1), {1, 2, 3, 4});
  const Tensor w(Shape(1, 1, 3, 1), {1, 1, 1});
  EXPECT_EQ(conv_f(x, w, std::nullopt, 1, 0).vec(), (std::vector<double>{6, 9}));
}

TEST(Conv, UnitKernelIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(Shape(2, 1, 7, 3), rng);
  const Tensor w = Tensor::ones(Shape(1, 1, 1, 1));
  EXPECT_EQ(conv_f(x, w, std::nullopt, 1, 0).vec(), x.vec());
  EXPECT_EQ(conv_transpose_f(x, w, std::nullopt, 1, 0, 0).vec(), x.vec());
}

TEST(Conv, OutputExtents) {
  for (std::size_t f = 4; f <= 260; ++f) {
    for (std::size_t k : {3u, 5u, 8u}) {
      for (std::size_t p = 0; p < k; ++p) {
        if (f + 2 * p < k) continue;
        std::size_t expect = 0;
        for (std::size_t start = 0; start + k <= f + 2 * p; start += 2) ++expect;
        EXPECT_EQ(conv_output_extent(f, k, 2, p), expect);
      }
    }
  }
}

TEST(Conv, AdjointProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t cin = 1 + trial % 3, cout = 1 + trial % 4, k = 2 + trial % 5;
    const std::size_t s = 1 + trial % 3, p = trial % k;
    const std::size_t f = 9 + trial;
    const Tensor w = random_tensor(Shape(cout, cin, k, 1), rng);
    const Tensor x = random_tensor(Shape(2, cin, f, 3), rng);
    const Tensor cx = conv_f(x, w, std::nullopt, s, p);
    const std::size_t op = f - conv_transpose_output_extent(cx.shape()[kFreq], k, s, p, 0);
    if (op >= s) continue;
    const Tensor y = random_tensor(cx.shape(), rng);
    const Tensor ty = conv_transpose_f(y, w, std::nullopt, s, p, op);
    ASSERT_EQ(ty.shape(), x.shape());
    EXPECT_NEAR(dot(cx, y).item(), dot(x, ty).item(), 1e-10);
  }
}

TEST(Conv, BadOutputPadThrows) {
  const Tensor x = Tensor::ones(Shape(1, 1, 4, 1));
  const Tensor w = Tensor::ones(Shape(1, 1, 3, 1));
  EXPECT_THROW(conv_transpose_f(x, w, std::nullopt, 2, 1, 2), ShapeError);
}

TEST(Macs, MatmulBooksMKN) {
  MacCounter c;
  {
    ScopedMacCounter scope(c);
    matmul(Tensor::ones(Shape(1, 1, 2, 3)), Tensor::ones(Shape(1, 1, 3, 4)));
  }
  EXPECT_EQ(c.real, 24u);
  EXPECT_EQ(c.complex, 0u);
}

TEST(Macs, ComplexBucketRoutesBookings) {
  MacCounter c;
  {
    ScopedMacCounter scope(c);
    ScopedComplexBucket bucket;
    matmul(Tensor::ones(Shape(1, 1, 2, 2)), Tensor::ones(Shape(1, 1, 2, 2)));
  }
  EXPECT_EQ(c.real, 0u);
  EXPECT_EQ(c.complex, 8u);
}

TEST(FiniteChecks, NonFiniteResultThrows) {
  EXPECT_THROW(exp(row({1000.0})), NumericError);
}
