#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "handeye/lstm.hpp"

using namespace handeye;

namespace {

SequenceBatch random_batch(int input, int batch, int steps, Rng& rng) {
  std::normal_distribution<double> n;
  SequenceBatch b;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd x(input, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    b.push_back(x);
  }
  return b;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("zero parameters give a zero hidden state") {
  const LstmParams p = LstmParams::zeros(16, kHiddenUnits, 8);
  Rng rng(1);
  const auto cache = lstm_forward(random_batch(16, 3, 5, rng), p);
  CHECK(cache.final_hidden().cwiseAbs().maxCoeff() == 0.0);
  CHECK(cache.output.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single cell, single step matches a hand computation") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  const double b_i = 4.0;
  const double b_g = std::atanh(0.6);
  const double b_o = 0.3;
  p.bias << b_i, 0.0, b_g, b_o;
  p.w_dense(0, 0) = 1.0;
  Eigen::MatrixXd seq(1, 1);
  seq << 2.5;  // ignored: all input weights are zero
  const auto cache = lstm_forward(seq, p);
  const double expected = sigmoid(b_o) * std::tanh(sigmoid(b_i) * 0.6);
  CHECK(cache.final_hidden()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(cache.output(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hidden state stays inside the unit box") {
  Rng rng(2);
  LstmParams p = LstmParams::initialized(4, 6, 2, rng);
  p.w_input *= 50.0;
  auto b = random_batch(4, 7, 12, rng);
  for (auto& x : b) x *= 100.0;
  const auto cache = lstm_forward(b, p);
  for (const auto& h : cache.hidden) CHECK(h.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("lstm_forward rejects empty or non-finite input") {
  const LstmParams p = LstmParams::zeros(2, 3, 1);
  CHECK_THROWS_AS(lstm_forward(SequenceBatch{}, p), NumericInput);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, std::nan(""), 0, 0;
  CHECK_THROWS_AS(lstm_forward(bad, p), NumericInput);
}

TEST_CASE("dense head") {
  Rng rng(3);
  LstmParams p = LstmParams::initialized(2, 4, 3, rng);
  const Eigen::MatrixXd h = random_matrix(4, 5, rng);

  LstmParams zero = p;
  zero.w_dense.setZero();
  zero.b_dense << 1, 2, 3;
  const Eigen::MatrixXd out = predict_head(h, zero);
  for (int c = 0; c < 5; ++c) CHECK(out.col(c) == zero.b_dense);

  LstmParams copy = p;
  copy.w_dense.setZero();
  copy.b_dense.setZero();
  for (int i = 0; i < 3; ++i) copy.w_dense(i, i) = 1.0;
  CHECK(predict_head(h, copy) == h.topRows(3));

  p.b_dense.setZero();
  CHECK((predict_head(2.5 * h, p) - 2.5 * predict_head(h, p)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mse_loss") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(mse_loss(a, a) == 0.0);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(1, 1, 2.0);
  CHECK(mse_loss(p, t) == doctest::Approx(4.0));
  Eigen::MatrixXd b = a;
  b(0, 1) += 0.5;
  b(1, 0) -= 1.5;
  const Eigen::MatrixXd doubled = a + 2.0 * (b - a);
  CHECK(mse_loss(doubled, a) == doctest::Approx(4.0 * mse_loss(b, a)));
  CHECK_THROWS_AS(mse_loss(a, p), InvalidArgument);
}

TEST_CASE("backward: zero error gives zero gradient") {
  Rng rng(4);
  const LstmParams p = LstmParams::initialized(3, 4, 2, rng);
  const auto batch = random_batch(3, 5, 4, rng);
  const auto cache = lstm_forward(batch, p);
  const LstmParams g = backward(cache, cache.output, p);
  CHECK(g.flatten().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: dense bias gradient") {
  Rng rng(5);
  const LstmParams p = LstmParams::initialized(3, 4, 2, rng);
  const auto cache = lstm_forward(random_batch(3, 6, 3, rng), p);
  const Eigen::MatrixXd targets = random_matrix(2, 6, rng);
  const LstmParams g = backward(cache, targets, p);
  const Eigen::VectorXd expected =
      (2.0 * (cache.output - targets)).rowwise().mean() / static_cast<double>(targets.rows());
  CHECK((g.b_dense - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward agrees with central finite differences") {
  Rng rng(6);
  const LstmParams p = LstmParams::initialized(2, 3, 2, rng);
  const auto batch = random_batch(2, 5, 4, rng);
  const Eigen::MatrixXd targets = random_matrix(2, 5, rng);
  CHECK(gradient_check(p, batch, targets, 1e-5) < 1e-4);
}

TEST_CASE("clip_gradient_norm") {
  Rng rng(7);
  LstmParams g = LstmParams::initialized(2, 3, 1, rng);
  const double before = g.flatten().norm();
  CHECK(clip_gradient_norm(g, before * 2.0) == doctest::Approx(before));
  CHECK(g.flatten().norm() == doctest::Approx(before));
  clip_gradient_norm(g, 0.5);
  CHECK(g.flatten().norm() == doctest::Approx(0.5));
}

TEST_CASE("adam: first step is bounded by the learning rate") {
  Rng rng(8);
  LstmParams p = LstmParams::initialized(2, 3, 2, rng);
  const LstmParams start = p;
  LstmParams g = LstmParams::initialized(2, 3, 2, rng);
  g.assign(g.flatten() * 1e3);
  AdamState s = AdamState::for_params(p, 0.01);
  adam_step(p, g, s);
  const Eigen::VectorXd delta = p.flatten() - start.flatten();
  const Eigen::VectorXd grad = g.flatten();
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    CHECK(std::abs(delta[i]) <= 0.01 * (1.0 + 1e-8));
    if (grad[i] != 0.0) CHECK(delta[i] * grad[i] < 0.0);
  }
  CHECK(s.step_count == 1);
}

TEST_CASE("adam: zero gradient leaves parameters alone") {
  Rng rng(9);
  LstmParams p = LstmParams::initialized(2, 3, 2, rng);
  const Eigen::VectorXd start = p.flatten();
  const LstmParams zero = LstmParams::zeros(2, 3, 2);
  AdamState s = AdamState::for_params(p, 0.1);
  for (int i = 0; i < 100; ++i) adam_step(p, zero, s);
  CHECK(p.flatten() == start);
}

TEST_CASE("adam: converges on a quadratic bowl") {
  // f(w) = w^2 in the dense bias slot; every other parameter has zero gradient.
  LstmParams p = LstmParams::zeros(1, 1, 1);
  p.b_dense[0] = 1.0;
  AdamState s = AdamState::for_params(p, 0.01);
  for (int i = 0; i < 2000; ++i) {
    LstmParams g = LstmParams::zeros(1, 1, 1);
    g.b_dense[0] = 2.0 * p.b_dense[0];
    adam_step(p, g, s);
  }
  CHECK(std::abs(p.b_dense[0]) < 0.01);
}

TEST_CASE("loss decreases over the first Adam steps") {
  Rng rng(10);
  LstmParams p = LstmParams::initialized(4, 8, 2, rng);
  const auto batch = random_batch(4, 16, 5, rng);
  const Eigen::MatrixXd targets = random_matrix(2, 16, rng) * 0.5;
  AdamState s = AdamState::for_params(p, 1e-2);
  const double first = mse_loss(lstm_forward(batch, p).output, targets);
  for (int i = 0; i < 10; ++i) {
    const auto cache = lstm_forward(batch, p);
    adam_step(p, backward(cache, targets, p), s);
  }
  CHECK(mse_loss(lstm_forward(batch, p).output, targets) < first);
}

TEST_CASE("initialization") {
  Rng a(11);
  Rng b(11);
  const LstmParams x = LstmParams::initialized(16, kHiddenUnits, 8, a);
  const LstmParams y = LstmParams::initialized(16, kHiddenUnits, 8, b);
  CHECK(x.flatten() == y.flatten());
  CHECK(x.w_input.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(16.0));
  CHECK(x.w_recurrent.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(25.0));
  CHECK(x.bias.segment(kHiddenUnits, kHiddenUnits).isConstant(1.0));
  CHECK(x.bias.head(kHiddenUnits).isZero());
  CHECK(x.parameter_count() == 4 * 25 * (16 + 25 + 1) + 8 * 25 + 8);
}

TEST_CASE("parameter file round trip and header checks") {
  Rng rng(12);
  const LstmParams p = LstmParams::initialized(16, kHiddenUnits, 8, rng);
  const std::string path = "params_roundtrip.bin";
  p.write(path);
  const LstmParams back = LstmParams::read(path);
  CHECK(back.flatten() == p.flatten());
  CHECK(back.w_input.rows() == 100);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMAGIC";
  }
  CHECK_THROWS_AS(LstmParams::read(path), DataError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(LstmParams::read("does_not_exist.bin"), IoError);
}

TEST_CASE("forward pass is deterministic") {
  Rng rng(13);
  const LstmParams p = LstmParams::initialized(3, 5, 2, rng);
  const auto batch = random_batch(3, 9, 6, rng);
  CHECK(lstm_forward(batch, p).output == lstm_forward(batch, p).output);
}
