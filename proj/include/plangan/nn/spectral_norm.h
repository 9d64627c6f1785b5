#pragma once

#include "plangan/core/rng.h"
#include "plangan/nn/matrix.h"

namespace plangan::nn {

// Power-iteration estimates of the leading singular pair of a weight matrix
// (out x in). u has `out` entries, v has `in` entries; both unit-norm.
struct SpectralNormState {
  Vector u;
  Vector v;
};

// Random unit u, then `iterations` power iterations.
SpectralNormState InitSpectralNorm(const DenseMatrix& weight, Rng& rng,
                                   int iterations = 30);

// One power-iteration update of `state` against `weight`. Throws
// NumericError for a zero matrix.
void PowerIterate(const DenseMatrix& weight, SpectralNormState& state);

// sigma_hat = u^T W v for the current (u, v).
double EstimatedSigma(const DenseMatrix& weight, const SpectralNormState& state);

// One power-iteration update, then returns weight / sigma_hat.
DenseMatrix SpectralNormalize(const DenseMatrix& weight, SpectralNormState& state);

}  // namespace plangan::nn
