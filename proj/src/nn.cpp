#include "interedit/nn.hpp"

#include <cmath>

namespace interedit::nn {

Mat init_matrix(Eigen::Index rows, Eigen::Index cols, Init init, Rng& rng) {
  Mat m = Mat::Zero(rows, cols);
  if (init == Init::Xavier) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  } else if (init == Init::Small) {
    std::normal_distribution<double> n(0.0, 0.02);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  }
  return m;
}

Linear Linear::create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng, Init init,
                      bool with_bias) {
  Linear l;
  l.weight = &store.add(name + ".w", init_matrix(in, out, init, rng));
  if (with_bias) l.bias = &store.add(name + ".b", Mat::Zero(1, out));
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  return linear(x, tape.param(*weight), bias ? tape.param(*bias) : Var());
}

Conv1d Conv1d::create(ParameterStore& store, const std::string& name, int in, int out, int kernel, Rng& rng,
                      Init init) {
  Conv1d c;
  c.kernel = kernel;
  Mat w = init_matrix(static_cast<Eigen::Index>(kernel) * in, out, init, rng);
  if (init == Init::Xavier) w *= std::sqrt(static_cast<double>(in + out) / (kernel * in + out));
  c.weight = &store.add(name + ".w", std::move(w));
  c.bias = &store.add(name + ".b", Mat::Zero(1, out));
  return c;
}

Var Conv1d::operator()(Tape& tape, Var x) const {
  return temporal_conv(x, tape.param(*weight), tape.param(*bias), kernel);
}

Var modulate(Var x, Var shift, Var scale) {
  Tape& t = *x.tape();
  Var one_plus = add(scale, t.constant(Mat::Ones(1, scale.cols())));
  return add_row(mul_row(x, one_plus), shift);
}

Mat sinusoidal(const std::vector<double>& positions, int dim) {
  require(dim >= 2 && dim % 2 == 0, "sinusoidal: dim must be even");
  Mat out(static_cast<Eigen::Index>(positions.size()), dim);
  const int half = dim / 2;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(10000.0) * j / half);
      out(static_cast<Eigen::Index>(i), 2 * j) = std::sin(positions[i] * freq);
      out(static_cast<Eigen::Index>(i), 2 * j + 1) = std::cos(positions[i] * freq);
    }
  }
  return out;
}

Mat sinusoidal(int count, int dim) {
  std::vector<double> pos(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pos[static_cast<std::size_t>(i)] = i;
  return sinusoidal(pos, dim);
}

}  // namespace interedit::nn
