// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "manet/gradcheck.hpp"
#include "manet/ops.hpp"
#include "manet/optim.hpp"
#include "manet/serialize.hpp"
#include "oracles.hpp"

namespace nn = manet::nn;
using nn::Shape;
using nn::Tensor;

namespace {

nn::Var<double> c(const Tensor<double>& t) { return nn::constant(t); }

}  // namespace

TEST(Conv2d, AllOnesCountsTaps) {
  Tensor<double> x(Shape{1, 1, 3, 3}, 1.0);
  Tensor<double> w(Shape{1, 1, 3, 3}, 1.0);
  const auto y = nn::conv2d(c(x), c(w), nn::Var<double>(), 1, 1).value();
  EXPECT_EQ(y.at(0, 0, 1, 1), 9.0);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0);
  EXPECT_EQ(y.at(0, 0, 2, 2), 4.0);
  EXPECT_EQ(y.at(0, 0, 0, 1), 6.0);
}

TEST(Conv2d, IdentityKernelIsBitExact) {
  for (int k : {1, 3, 5}) {
    const auto x = oracle::random_tensor({2, 3, 7, 6}, 11);
    Tensor<double> w(Shape{3, 3, k, k});
    for (int ch = 0; ch < 3; ++ch) w.at(ch, ch, k / 2, k / 2) = 1.0;
    const auto y = nn::conv2d(c(x), c(w), nn::Var<double>(), 1, (k - 1) / 2).value();
    ASSERT_EQ(y.shape(), x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(y[i], x[i]);
  }
}

TEST(Conv2d, MatchesNestedLoops) {
  const auto x = oracle::random_tensor({1, 2, 5, 5}, 1);
  const auto w = oracle::random_tensor({3, 2, 3, 3}, 2);
  const auto y = nn::conv2d(c(x), c(w), nn::Var<double>(), 2, 0).value();
  EXPECT_EQ(y.shape(), (Shape{1, 3, 2, 2}));
  const auto ref = oracle::conv2d(x, w, {}, 2, 0);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(Conv2d, MatchesNestedLoopsWithBiasAndPadding) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::random_tensor({2, 3, 9, 8}, 100 + trial);
    const auto w = oracle::random_tensor({4, 3, 3, 3}, 200 + trial);
    const auto b = oracle::random_tensor({1, 4, 1, 1}, 300 + trial);
    const int stride = 1 + trial % 2;
    const auto y = nn::conv2d(c(x), c(w), c(b), stride, 1).value();
    std::vector<double> bias(b.data().begin(), b.data().end());
    const auto ref = oracle::conv2d(x, w, bias, stride, 1);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, Errors) {
  Tensor<double> x(Shape{1, 2, 4, 4});
  Tensor<double> w(Shape{1, 3, 3, 3});
  EXPECT_THROW(nn::conv2d(c(x), c(w), nn::Var<double>(), 1, 1), manet::DimensionError);
  Tensor<double> bad(Shape{1, 1, 2, 2});
  bad[0] = std::nan("");
  Tensor<double> one(Shape{1, 1, 1, 1}, 1.0);
  EXPECT_THROW(nn::conv2d(c(bad), c(one), nn::Var<double>(), 1, 0), manet::NumericError);
}

TEST(ConvTranspose2d, SingleSiteExpansion) {
  Tensor<double> x(Shape{1, 1, 1, 1}, 2.5);
  Tensor<double> w(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const auto y = nn::conv_transpose2d(c(x), c(w), nn::Var<double>(), 2).value();
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(y[static_cast<std::size_t>(i)], 2.5 * (i + 1));
}

TEST(ConvTranspose2d, ZerosMapToZeros) {
  Tensor<double> x(Shape{1, 3, 4, 4});
  const auto w = oracle::random_tensor({3, 2, 2, 2}, 5);
  const auto y = nn::conv_transpose2d(c(x), c(w), nn::Var<double>(), 2).value();
  EXPECT_EQ(y.shape(), (Shape{1, 2, 8, 8}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(ConvTranspose2d, MatchesScatterOracle) {
  const auto x = oracle::random_tensor({2, 3, 4, 5}, 7);
  const auto w = oracle::random_tensor({3, 2, 3, 3}, 8);
  const auto y = nn::conv_transpose2d(c(x), c(w), nn::Var<double>(), 2).value();
  const auto ref = oracle::conv_transpose2d(x, w, 2);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(ConvTranspose2d, AdjointOfConv2d) {
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_tensor({1, 3, 8, 8}, 1000 + trial);
    const auto w = oracle::random_tensor({4, 3, 2, 2}, 2000 + trial);
    const auto conv = nn::conv2d(c(a), c(w), nn::Var<double>(), 2, 0).value();
    const auto b = oracle::random_tensor(conv.shape(), 3000 + trial);
    const auto adj = nn::conv_transpose2d(c(b), c(w), nn::Var<double>(), 2).value();
    EXPECT_NEAR(oracle::inner(conv, b), oracle::inner(a, adj), 1e-10);
  }
}

TEST(Relu, Values) {
  Tensor<double> x(Shape{1, 1, 1, 3}, std::vector<double>{-1, 0, 2});
  const auto y = nn::relu(c(x)).value();
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 2.0);
  const auto pos = oracle::random_tensor({1, 2, 3, 3}, 3, 0.0, 1.0);
  const auto id = nn::relu(c(pos)).value();
  for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_EQ(id[i], pos[i]);
}

TEST(Relu, GradientIsIndicator) {
  nn::Tape<double> tape;
  auto x = nn::leaf(Tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{-1, 2}), tape);
  tape.backward(nn::sum(nn::relu(x)));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 1.0);
}

TEST(Softmax, UniformAndShiftInvariant) {
  Tensor<double> x(Shape{1, 441, 2, 2}, 0.3);
  const auto y = nn::softmax_channels(c(x)).value();
  for (double v : y.data()) EXPECT_NEAR(v, 1.0 / 441.0, 1e-15);

  const auto r = oracle::random_tensor({2, 5, 3, 3}, 9, -5, 5);
  Tensor<double> shifted = r;
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int ch = 0; ch < 5; ++ch) shifted.at(n, ch, i, j) += 10.0 * (i + 3 * j + n);
  const auto a = nn::softmax_channels(c(r)).value();
  const auto b = nn::softmax_channels(c(shifted)).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Softmax, ClosedFormTwoChannels) {
  Tensor<double> x(Shape{1, 2, 1, 1}, std::vector<double>{0.0, std::log(3.0)});
  const auto y = nn::softmax_channels(c(x)).value();
  EXPECT_NEAR(y[0], 0.25, 1e-15);
  EXPECT_NEAR(y[1], 0.75, 1e-15);
}

TEST(Softmax, SitesArePositiveAndSumToOne) {
  const auto x = oracle::random_tensor({2, 441, 4, 4}, 10, -30, 30);
  const auto y = nn::softmax_channels(c(x)).value();
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int ch = 0; ch < 441; ++ch) {
          EXPECT_GT(y.at(n, ch, i, j), 0.0);
          s += y.at(n, ch, i, j);
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
  Tensor<double> bad(Shape{1, 2, 1, 1});
  bad[0] = INFINITY;
  EXPECT_THROW(nn::softmax_channels(c(bad)), manet::NumericError);
}

TEST(NearestUpsample, Replicates) {
  Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const auto same = nn::nearest_upsample(c(x), 1).value();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(same[i], x[i]);
  const auto y = nn::nearest_upsample(c(x), 2).value();
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  const double expect[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(y[i], expect[i]);
  EXPECT_THROW(nn::nearest_upsample(c(x), 0), manet::ArgumentError);
}

TEST(NearestUpsample, SumScalesBySquare) {
  const auto x = oracle::random_tensor({2, 3, 5, 4}, 12);
  for (int s : {2, 3, 4}) {
    const auto y = nn::nearest_upsample(c(x), s).value();
    double sx = 0, sy = 0;
    for (double v : x.data()) sx += v;
    for (double v : y.data()) sy += v;
    EXPECT_NEAR(sy, s * s * sx, 1e-10);
  }
}

TEST(SplitConcat, ChannelGroups) {
  const auto x = oracle::random_tensor({2, 4, 3, 3}, 13);
  const auto parts = nn::split_channels(c(x), 2);
  ASSERT_EQ(parts.size(), 2u);
  for (int p = 0; p < 2; ++p) {
    for (int n = 0; n < 2; ++n)
      for (int ch = 0; ch < 2; ++ch)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) EXPECT_EQ(parts[static_cast<std::size_t>(p)].value().at(n, ch, i, j), x.at(n, 2 * p + ch, i, j));
  }
  EXPECT_THROW(nn::split_channels(c(x), 3), manet::ArgumentError);
}

TEST(SplitConcat, RoundTripAndComplement) {
  const auto x = oracle::random_tensor({1, 12, 4, 5}, 14);
  for (int s : {2, 3, 4, 6}) {
    const auto parts = nn::split_channels(c(x), s);
    const auto back = nn::concat_channels(parts).value();
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(back[i], x[i]);
    std::vector<nn::Var<double>> others(parts.begin() + 1, parts.end());
    EXPECT_EQ(nn::concat_channels(others).shape().c, 12 * (s - 1) / s);
  }
}

TEST(GradCheck, Quadratic) {
  const auto x = oracle::random_tensor({1, 2, 3, 3}, 15);
  const auto r = nn::grad_check([](const nn::Var<double>& v) { return nn::sum(nn::mul(v, v)); }, x);
  EXPECT_LT(r.max_rel_error, 1e-7);
  EXPECT_EQ(r.checked, x.size());
}

TEST(GradCheck, ConvReluSum) {
  const auto x = oracle::random_tensor({1, 2, 6, 6}, 16);
  const auto w = oracle::random_tensor({3, 2, 3, 3}, 17);
  const auto r = nn::grad_check(
      [&](const nn::Var<double>& v) {
        return nn::sum(nn::relu(nn::conv2d(v, nn::constant(w, v.tape()), nn::Var<double>(), 1, 1)));
      },
      x);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(GradCheck, ParametersOfConvolutions) {
  nn::Parameter<double> w("w", oracle::random_tensor({3, 2, 3, 3}, 18));
  nn::Parameter<double> b("b", oracle::random_tensor({1, 3, 1, 1}, 19));
  nn::Parameter<double> wt("wt", oracle::random_tensor({3, 2, 2, 2}, 20));
  const auto x = oracle::random_tensor({2, 2, 6, 6}, 21);
  std::vector<nn::Parameter<double>*> params{&w, &b, &wt};
  const auto r = nn::grad_check_params(
      [&](nn::Tape<double>* tape) {
        auto y = nn::conv2d(nn::constant(x), nn::parameter(w, tape), nn::parameter(b, tape), 2, 1);
        auto z = nn::conv_transpose2d(y, nn::parameter(wt, tape), nn::Var<double>(), 2);
        return nn::sum(nn::mul(z, z));
      },
      params);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Backward, RejectsNonScalarLoss) {
  nn::Tape<double> tape;
  auto x = nn::leaf(Tensor<double>(Shape{1, 1, 2, 2}, 1.0), tape);
  EXPECT_THROW(tape.backward(nn::relu(x)), manet::ArgumentError);
}

TEST(Backward, DetachedParameterGetsZeroGradient) {
  nn::Parameter<double> used("used", Tensor<double>(Shape{1, 1, 1, 1}, 2.0));
  nn::Parameter<double> unused("unused", Tensor<double>(Shape{1, 1, 1, 1}, 3.0));
  nn::Tape<double> tape;
  auto u = nn::parameter(used, &tape);
  nn::parameter(unused, &tape);
  tape.backward(nn::sum(nn::mul(u, u)));
  EXPECT_EQ(used.grad[0], 4.0);
  EXPECT_EQ(unused.grad[0], 0.0);
}

TEST(Backward, VisitsEveryRecordedNodeOnce) {
  nn::Tape<double> tape;
  auto x = nn::leaf(oracle::random_tensor({1, 2, 3, 3}, 22), tape);
  auto y = nn::relu(nn::add(x, x));
  auto loss = nn::sum(nn::mul(y, x));
  tape.backward(loss);
  EXPECT_EQ(tape.last_visits(), tape.size());
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  nn::Parameter<double> p("p", oracle::random_tensor({1, 2, 2, 2}, 23));
  const auto before = p.value;
  nn::AdamState<double> state(nn::AdamOptions{0.1});
  std::vector<nn::Parameter<double>*> ps{&p};
  for (int i = 0; i < 3; ++i) nn::adam_step<double>(ps, state);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(p.value[i], before[i]);
  EXPECT_EQ(state.step(), 3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {0.5, -3.0, 1e-3}) {
    nn::Parameter<double> p("p", Tensor<double>(Shape{1, 1, 1, 1}, 1.0));
    p.grad[0] = g;
    nn::AdamState<double> state(nn::AdamOptions{0.1});
    std::vector<nn::Parameter<double>*> ps{&p};
    nn::adam_step<double>(ps, state);
    // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
    const double expect = 1.0 - 0.1 * g / (std::abs(g) + 1e-8);
    EXPECT_NEAR(p.value[0], expect, 1e-15);
    EXPECT_NEAR(std::abs(p.value[0] - 1.0), 0.1, 1e-6);
  }
}

TEST(Adam, DeterministicRuns) {
  auto run = [] {
    nn::Parameter<double> p("p", oracle::random_tensor({1, 3, 2, 2}, 24));
    nn::AdamState<double> state(nn::AdamOptions{0.01});
    std::vector<nn::Parameter<double>*> ps{&p};
    for (int i = 0; i < 20; ++i) {
      nn::Tape<double> tape;
      auto v = nn::parameter(p, &tape);
      tape.backward(nn::sum(nn::mul(v, nn::mul(v, v))));
      nn::adam_step<double>(ps, state);
      nn::zero_grads(ps);
    }
    return p.value;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Adam, ShapeMismatch) {
  nn::Parameter<double> p("p", Tensor<double>(Shape{1, 1, 2, 2}));
  p.grad = Tensor<double>(Shape{1, 1, 1, 1});
  nn::AdamState<double> state;
  std::vector<nn::Parameter<double>*> ps{&p};
  EXPECT_THROW(nn::adam_step<double>(ps, state), manet::DimensionError);
}

TEST(Serialize, TensorRoundTripBothPrecisions) {
  const auto t = oracle::random_tensor({2, 3, 4, 5}, 25);
  std::stringstream ss;
  nn::write_tensor(ss, t);
  const auto back = nn::read_tensor<double>(ss);
  ASSERT_EQ(back.shape(), t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back[i], t[i]);

  std::stringstream sf;
  nn::write_tensor(sf, oracle::random_tensor({1, 3, 4, 5}, 27).cast<float>(), 3);
  std::stringstream bad;
  EXPECT_THROW(nn::write_tensor(bad, t, 3), manet::ArgumentError);
  EXPECT_EQ(nn::peek_dtype(sf), nn::DType::f32);
  const auto f = nn::read_tensor<float>(sf);
  EXPECT_EQ(f.shape(), (Shape{1, 3, 4, 5}));
}

TEST(Serialize, HeaderLayout) {
  Tensor<float> t(Shape{1, 1, 2, 3}, 1.5f);
  std::stringstream ss;
  nn::write_tensor(ss, t, 2);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 4 + 1 + 1 + 2 * 4 + 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "MANT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 0u);   // f32
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 2u);   // ndim
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 2u);  // h
  EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 3u);  // w
}

TEST(Serialize, CheckpointRoundTripAndErrors) {
  nn::TensorList<double> recs{{"a", oracle::random_tensor({1, 2, 2, 2}, 26)}, {"bb", Tensor<double>(Shape{1, 1, 1, 1}, 7)}};
  std::stringstream ss;
  nn::write_checkpoint(ss, recs);
  EXPECT_EQ(ss.str().substr(0, 4), "MANC");
  const auto back = nn::read_checkpoint<double>(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].first, "bb");
  EXPECT_EQ(back[1].second[0], 7.0);
  std::stringstream junk("NOPE");
  EXPECT_THROW(nn::read_checkpoint<double>(junk), manet::FormatError);
}

TEST(Serialize, KeyValues) {
  std::stringstream ss("# comment\n a = 1 \n\nb=two # trailing\n");
  const auto kv = nn::parse_key_values(ss);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two");
}
