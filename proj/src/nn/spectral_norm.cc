#include "plangan/nn/spectral_norm.h"

#include "plangan/core/errors.h"

namespace plangan::nn {
namespace {

constexpr double kNormFloor = 1e-300;

void NormalizeInPlace(Vector& x) {
  const double n = x.norm();
  if (!(n > kNormFloor)) throw NumericError("power iteration collapsed to zero vector");
  x /= n;
}

}  // namespace

SpectralNormState InitSpectralNorm(const DenseMatrix& weight, Rng& rng,
                                   int iterations) {
  SpectralNormState state;
  state.u = Vector(weight.rows());
  for (Eigen::Index i = 0; i < state.u.size(); ++i) state.u[i] = rng.Normal();
  NormalizeInPlace(state.u);
  state.v = Vector::Zero(weight.cols());
  for (int i = 0; i < iterations; ++i) PowerIterate(weight, state);
  return state;
}

void PowerIterate(const DenseMatrix& weight, SpectralNormState& state) {
  if (!weight.allFinite()) throw NumericError("spectral norm of non-finite matrix");
  if (weight.cwiseAbs().maxCoeff() == 0.0)
    throw NumericError("spectral norm of zero matrix");
  if (state.u.size() != weight.rows() || state.v.size() != weight.cols())
    throw ConfigError("spectral norm state does not match weight shape");
  Vector v = weight.transpose() * state.u;
  NormalizeInPlace(v);
  Vector u = weight * v;
  NormalizeInPlace(u);
  state.u = std::move(u);
  state.v = std::move(v);
}

double EstimatedSigma(const DenseMatrix& weight, const SpectralNormState& state) {
  return state.u.dot(weight * state.v);
}

DenseMatrix SpectralNormalize(const DenseMatrix& weight, SpectralNormState& state) {
  PowerIterate(weight, state);
  return weight / EstimatedSigma(weight, state);
}

}  // namespace plangan::nn
