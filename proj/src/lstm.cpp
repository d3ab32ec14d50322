#include "handeye/lstm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

namespace handeye {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'Y', 'E', 'L', 'S', 'T', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "parameter files are little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError("truncated parameter file: " + path);
  }
  return value;
}

void put_row_major(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
  }
}

void take_row_major(std::ifstream& in, Eigen::MatrixXd& m, const std::string& path) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = take<double>(in, path);
  }
}

}  // namespace

Eigen::Index LstmParams::parameter_count() const {
  return w_input.size() + w_recurrent.size() + bias.size() + w_dense.size() +
         b_dense.size();
}

LstmParams LstmParams::zeros(int input, int hidden, int output) {
  if (input < 1 || hidden < 1 || output < 1) {
    throw InvalidArgument("LSTM dimensions must be positive");
  }
  LstmParams p;
  p.w_input = Eigen::MatrixXd::Zero(4 * hidden, input);
  p.w_recurrent = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  p.bias = Eigen::VectorXd::Zero(4 * hidden);
  p.w_dense = Eigen::MatrixXd::Zero(output, hidden);
  p.b_dense = Eigen::VectorXd::Zero(output);
  return p;
}

LstmParams LstmParams::initialized(int input, int hidden, int output, Rng& rng) {
  LstmParams p = zeros(input, hidden, output);
  fill_uniform(p.w_input, 1.0 / std::sqrt(static_cast<double>(input)), rng);
  fill_uniform(p.w_recurrent, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  fill_uniform(p.w_dense, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  p.bias.segment(hidden, hidden).setOnes();
  return p;
}

std::array<Eigen::Map<Eigen::VectorXd>, 5> LstmParams::blocks() {
  return {Eigen::Map<Eigen::VectorXd>(w_input.data(), w_input.size()),
          Eigen::Map<Eigen::VectorXd>(w_recurrent.data(), w_recurrent.size()),
          Eigen::Map<Eigen::VectorXd>(bias.data(), bias.size()),
          Eigen::Map<Eigen::VectorXd>(w_dense.data(), w_dense.size()),
          Eigen::Map<Eigen::VectorXd>(b_dense.data(), b_dense.size())};
}

std::array<Eigen::Map<const Eigen::VectorXd>, 5> LstmParams::blocks() const {
  return {Eigen::Map<const Eigen::VectorXd>(w_input.data(), w_input.size()),
          Eigen::Map<const Eigen::VectorXd>(w_recurrent.data(), w_recurrent.size()),
          Eigen::Map<const Eigen::VectorXd>(bias.data(), bias.size()),
          Eigen::Map<const Eigen::VectorXd>(w_dense.data(), w_dense.size()),
          Eigen::Map<const Eigen::VectorXd>(b_dense.data(), b_dense.size())};
}

Eigen::VectorXd LstmParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index offset = 0;
  for (const auto& b : blocks()) {
    flat.segment(offset, b.size()) = b;
    offset += b.size();
  }
  return flat;
}

void LstmParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw InvalidArgument("flat parameter vector has wrong length");
  }
  Eigen::Index offset = 0;
  for (auto b : blocks()) {
    b = flat.segment(offset, b.size());
    offset += b.size();
  }
}

bool LstmParams::all_finite() const {
  for (const auto& b : blocks()) {
    if (!b.allFinite()) return false;
  }
  return true;
}

void LstmParams::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot write parameter file");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(input_size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(hidden_size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(output_size()));
  put_row_major(out, w_input);
  put_row_major(out, w_recurrent);
  for (Eigen::Index i = 0; i < bias.size(); ++i) put(out, bias[i]);
  put_row_major(out, w_dense);
  for (Eigen::Index i = 0; i < b_dense.size(); ++i) put(out, b_dense[i]);
  if (!out) throw IoError(path, "write failed");
}

LstmParams LstmParams::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot read parameter file");
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an LSTM parameter file: " + path);
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kFormatVersion) {
    throw DataError("unsupported parameter file version " + std::to_string(version));
  }
  const auto input = static_cast<int>(take<std::uint32_t>(in, path));
  const auto hidden = static_cast<int>(take<std::uint32_t>(in, path));
  const auto output = static_cast<int>(take<std::uint32_t>(in, path));
  LstmParams p = zeros(input, hidden, output);
  take_row_major(in, p.w_input, path);
  take_row_major(in, p.w_recurrent, path);
  for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = take<double>(in, path);
  take_row_major(in, p.w_dense, path);
  for (Eigen::Index i = 0; i < p.b_dense.size(); ++i) p.b_dense[i] = take<double>(in, path);
  return p;
}

ForwardCache lstm_forward(const SequenceBatch& steps, const LstmParams& params) {
  if (steps.empty()) throw NumericInput("LSTM input sequence is empty");
  const Eigen::Index hidden = params.hidden_size();
  const Eigen::Index batch = steps.front().cols();

  ForwardCache cache;
  cache.inputs = steps;
  cache.gates.reserve(steps.size());
  cache.cells.reserve(steps.size());
  cache.tanh_cells.reserve(steps.size());
  cache.hidden.reserve(steps.size());

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd z(4 * hidden, batch);
  for (const auto& x : steps) {
    if (x.rows() != params.input_size() || x.cols() != batch) {
      throw InvalidArgument("LSTM step has wrong shape");
    }
    if (!x.allFinite()) throw NumericInput("non-finite value in LSTM input");
    z.noalias() = params.w_input * x;
    z.noalias() += params.w_recurrent * h;
    z.colwise() += params.bias;

    Eigen::MatrixXd gates(4 * hidden, batch);
    gates.topRows(2 * hidden) = sigmoid(z.topRows(2 * hidden).array()).matrix();
    gates.middleRows(2 * hidden, hidden) = z.middleRows(2 * hidden, hidden).array().tanh().matrix();
    gates.bottomRows(hidden) = sigmoid(z.bottomRows(hidden).array()).matrix();

    const auto in_gate = gates.topRows(hidden).array();
    const auto forget = gates.middleRows(hidden, hidden).array();
    const auto candidate = gates.middleRows(2 * hidden, hidden).array();
    const auto out_gate = gates.bottomRows(hidden).array();

    c = (forget * c.array() + in_gate * candidate).matrix();
    Eigen::MatrixXd tc = c.array().tanh().matrix();
    h = (out_gate * tc.array()).matrix();

    cache.gates.push_back(std::move(gates));
    cache.cells.push_back(c);
    cache.tanh_cells.push_back(std::move(tc));
    cache.hidden.push_back(h);
  }
  cache.output = predict_head(h, params);
  return cache;
}

ForwardCache lstm_forward(const Eigen::MatrixXd& sequence, const LstmParams& params) {
  SequenceBatch steps;
  steps.reserve(static_cast<std::size_t>(sequence.rows()));
  for (Eigen::Index t = 0; t < sequence.rows(); ++t) {
    steps.emplace_back(sequence.row(t).transpose());
  }
  return lstm_forward(steps, params);
}

Eigen::MatrixXd predict_head(const Eigen::MatrixXd& hidden, const LstmParams& params) {
  if (hidden.rows() != params.hidden_size()) {
    throw InvalidArgument("hidden state has wrong size for the dense head");
  }
  Eigen::MatrixXd y = params.w_dense * hidden;
  y.colwise() += params.b_dense;
  return y;
}

double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw InvalidArgument("mse_loss shape mismatch: " + std::to_string(predictions.rows()) +
                          "x" + std::to_string(predictions.cols()) + " vs " +
                          std::to_string(targets.rows()) + "x" +
                          std::to_string(targets.cols()));
  }
  if (predictions.size() == 0) throw InvalidArgument("mse_loss of empty matrices");
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

LstmParams backward(const ForwardCache& cache, const Eigen::MatrixXd& targets,
                    const LstmParams& params) {
  if (targets.rows() != cache.output.rows() || targets.cols() != cache.output.cols()) {
    throw InvalidArgument("backward: target shape does not match network output");
  }
  const Eigen::Index hidden = params.hidden_size();
  const Eigen::Index batch = cache.output.cols();
  LstmParams grads = LstmParams::zeros(params.input_size(), params.hidden_size(),
                                       params.output_size());

  const Eigen::MatrixXd d_out =
      (2.0 / static_cast<double>(cache.output.size())) * (cache.output - targets);
  grads.w_dense.noalias() = d_out * cache.final_hidden().transpose();
  grads.b_dense = d_out.rowwise().sum();

  Eigen::MatrixXd dh = params.w_dense.transpose() * d_out;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(hidden, batch);
  Eigen::MatrixXd dz(4 * hidden, batch);
  const Eigen::MatrixXd zero_state = Eigen::MatrixXd::Zero(hidden, batch);

  for (std::size_t step = cache.inputs.size(); step-- > 0;) {
    const auto& gates = cache.gates[step];
    const auto in_gate = gates.topRows(hidden).array();
    const auto forget = gates.middleRows(hidden, hidden).array();
    const auto candidate = gates.middleRows(2 * hidden, hidden).array();
    const auto out_gate = gates.bottomRows(hidden).array();
    const auto tc = cache.tanh_cells[step].array();
    const Eigen::MatrixXd& c_prev = step > 0 ? cache.cells[step - 1] : zero_state;
    const Eigen::MatrixXd& h_prev = step > 0 ? cache.hidden[step - 1] : zero_state;

    dc.array() += dh.array() * out_gate * (1.0 - tc.square());
    dz.topRows(hidden) = (dc.array() * candidate * in_gate * (1.0 - in_gate)).matrix();
    dz.middleRows(hidden, hidden) =
        (dc.array() * c_prev.array() * forget * (1.0 - forget)).matrix();
    dz.middleRows(2 * hidden, hidden) =
        (dc.array() * in_gate * (1.0 - candidate.square())).matrix();
    dz.bottomRows(hidden) = (dh.array() * tc * out_gate * (1.0 - out_gate)).matrix();

    grads.w_input.noalias() += dz * cache.inputs[step].transpose();
    grads.w_recurrent.noalias() += dz * h_prev.transpose();
    grads.bias += dz.rowwise().sum();

    dh.noalias() = params.w_recurrent.transpose() * dz;
    dc = (dc.array() * forget).matrix();
  }
  return grads;
}

double clip_gradient_norm(LstmParams& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& b : std::as_const(grads).blocks()) sq += b.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto b : grads.blocks()) b *= scale;
  }
  return norm;
}

AdamState AdamState::for_params(const LstmParams& params, double learning_rate) {
  AdamState s;
  s.first_moment = LstmParams::zeros(params.input_size(), params.hidden_size(),
                                     params.output_size());
  s.second_moment = s.first_moment;
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state) {
  if (grads.parameter_count() != params.parameter_count() ||
      state.first_moment.parameter_count() != params.parameter_count()) {
    throw InvalidArgument("adam_step: parameter/gradient shape mismatch");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  auto p = params.blocks();
  const auto g = grads.blocks();
  auto m = state.first_moment.blocks();
  auto v = state.second_moment.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    m[b] = state.beta1 * m[b] + (1.0 - state.beta1) * g[b];
    v[b] = state.beta2 * v[b] + (1.0 - state.beta2) * g[b].cwiseAbs2();
    p[b].array() -= state.learning_rate * (m[b].array() / correction1) /
                    ((v[b].array() / correction2).sqrt() + state.epsilon);
  }
}

double gradient_check(const LstmParams& params, const SequenceBatch& steps,
                      const Eigen::MatrixXd& targets, double epsilon) {
  const LstmParams analytic = backward(lstm_forward(steps, params), targets, params);
  const Eigen::VectorXd grad = analytic.flatten();
  const Eigen::VectorXd base = params.flatten();

  LstmParams probe = params;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd shifted = base;
    shifted[i] = base[i] + epsilon;
    probe.assign(shifted);
    const double up = mse_loss(lstm_forward(steps, probe).output, targets);
    shifted[i] = base[i] - epsilon;
    probe.assign(shifted);
    const double down = mse_loss(lstm_forward(steps, probe).output, targets);
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace handeye
