#pragma once

#include "interedit/autograd.hpp"

#include <random>
#include <string>
#include <vector>

namespace interedit::nn {

using Rng = std::mt19937_64;

enum class Init { Xavier, Zero, Small };

/// Xavier-uniform, all-zero, or N(0, 0.02^2).
Mat init_matrix(Eigen::Index rows, Eigen::Index cols, Init init, Rng& rng);

/// y = x W + b with W stored (in x out).
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
                       Init init = Init::Xavier, bool with_bias = true);
  Var operator()(Tape& tape, Var x) const;
  int in() const { return static_cast<int>(weight->value.rows()); }
  int out() const { return static_cast<int>(weight->value.cols()); }
};

/// Temporal convolution with weight (kernel*in x out).
struct Conv1d {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  int kernel = 1;

  static Conv1d create(ParameterStore& store, const std::string& name, int in, int out, int kernel,
                       Rng& rng, Init init = Init::Xavier);
  Var operator()(Tape& tape, Var x) const;
};

/// x * (1 + scale) + shift with 1 x C rows broadcast over x.
Var modulate(Var x, Var shift, Var scale);

/// Standard transformer sinusoidal table; row i encodes positions[i].
Mat sinusoidal(const std::vector<double>& positions, int dim);
Mat sinusoidal(int count, int dim);

}  // namespace interedit::nn
