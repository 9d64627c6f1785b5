#include "plangan/nn/mlp.h"

#include <algorithm>
#include <cmath>

#include "plangan/core/errors.h"

namespace plangan::nn {

DenseMatrix ConcatCols(std::initializer_list<const DenseMatrix*> blocks) {
  Eigen::Index rows = -1;
  Eigen::Index cols = 0;
  for (const DenseMatrix* b : blocks) {
    if (rows >= 0 && b->rows() != rows) throw ConfigError("ConcatCols: row mismatch");
    rows = b->rows();
    cols += b->cols();
  }
  DenseMatrix out(rows < 0 ? 0 : rows, cols);
  Eigen::Index at = 0;
  for (const DenseMatrix* b : blocks) {
    out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

namespace {

void ApplyActivation(Activation act, DenseMatrix& m) {
  switch (act) {
    case Activation::kIdentity:
      break;
    case Activation::kReLU:
      m = m.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      m = m.array().tanh().matrix();
      break;
  }
}

// Multiplies `grad` in place by the activation derivative, given the
// activation output.
void ActivationBackward(Activation act, const DenseMatrix& output, DenseMatrix& grad) {
  switch (act) {
    case Activation::kIdentity:
      break;
    case Activation::kReLU:
      grad = (output.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kTanh:
      grad.array() *= 1.0 - output.array().square();
      break;
  }
}

void CheckInput(const MlpParams& params, const DenseMatrix& input) {
  if (params.layers.empty()) throw ConfigError("MLP has no layers");
  if (input.cols() != params.input_size())
    throw ConfigError("MLP input width " + std::to_string(input.cols()) +
                      " != expected " + std::to_string(params.input_size()));
  if (input.rows() == 0) throw ConfigError("MLP input batch is empty");
  if (!input.allFinite()) throw NumericError("MLP input contains non-finite values");
}

}  // namespace

DenseMatrix EffectiveWeight(const DenseLayer& layer) {
  if (!layer.spectral_norm) return layer.weight;
  return layer.weight / EstimatedSigma(layer.weight, layer.sn);
}

MlpParams MakeMlp(const MlpSpec& spec, Rng& rng) {
  if (spec.input_size <= 0 || spec.output_size <= 0)
    throw ConfigError("MLP sizes must be positive");
  MlpParams params;
  params.output_activation = spec.output_activation;
  std::vector<int> widths;
  widths.push_back(spec.input_size);
  for (int h : spec.hidden_sizes) {
    if (h <= 0) throw ConfigError("hidden width must be positive");
    widths.push_back(h);
  }
  widths.push_back(spec.output_size);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight = DenseMatrix(out, in);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
      layer.weight.data()[i] = rng.Uniform(-bound, bound);
    layer.bias = Vector(out);
    for (Eigen::Index i = 0; i < out; ++i) layer.bias[i] = rng.Uniform(-bound, bound);
    layer.spectral_norm = spec.spectral_norm;
    if (layer.spectral_norm) layer.sn = InitSpectralNorm(layer.weight, rng, 30);
    params.layers.push_back(std::move(layer));
  }
  for (std::size_t h = 0; h < spec.hidden_sizes.size(); ++h) {
    if (!spec.batch_norm) {
      params.batch_norms.emplace_back();
      continue;
    }
    const int width = spec.hidden_sizes[h];
    BatchNormState bn;
    bn.scale = Vector::Ones(width);
    bn.shift = Vector::Zero(width);
    bn.running_mean = Vector::Zero(width);
    bn.running_var = Vector::Ones(width);
    params.batch_norms.emplace_back(std::move(bn));
  }
  return params;
}

void ValidateMlp(const MlpParams& params) {
  if (params.layers.empty()) throw ConfigError("MLP has no layers");
  if (params.batch_norms.size() + 1 != params.layers.size())
    throw ConfigError("MLP batchnorm list does not match hidden layer count");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    if (layer.bias.size() != layer.weight.rows())
      throw ConfigError("layer " + std::to_string(l) + " bias size mismatch");
    if (l + 1 < params.layers.size() &&
        params.layers[l + 1].weight.cols() != layer.weight.rows())
      throw ConfigError("layer " + std::to_string(l) + " output does not chain");
    if (layer.spectral_norm &&
        (layer.sn.u.size() != layer.weight.rows() || layer.sn.v.size() != layer.weight.cols()))
      throw ConfigError("layer " + std::to_string(l) + " spectral state mismatch");
  }
  for (std::size_t h = 0; h < params.batch_norms.size(); ++h) {
    const auto& bn = params.batch_norms[h];
    if (!bn) continue;
    const Eigen::Index w = params.layers[h].weight.rows();
    if (bn->scale.size() != w || bn->shift.size() != w || bn->running_mean.size() != w ||
        bn->running_var.size() != w)
      throw ConfigError("batchnorm " + std::to_string(h) + " width mismatch");
    if ((bn->running_var.array() <= 0.0).any())
      throw ConfigError("batchnorm running variance must be positive");
  }
}

ForwardResult MlpForward(const MlpParams& params, const DenseMatrix& input, Mode mode) {
  CheckInput(params, input);
  const bool any_bn = std::any_of(params.batch_norms.begin(), params.batch_norms.end(),
                                  [](const auto& bn) { return bn.has_value(); });
  if (mode == Mode::kTrain && any_bn && input.rows() == 1)
    throw ConfigError("train-mode BatchNorm requires batch size > 1");

  ForwardResult result;
  result.cache.mode = mode;
  result.cache.layers.resize(params.layers.size());
  const double batch = static_cast<double>(input.rows());

  const DenseMatrix* h = &input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    LayerCache& c = result.cache.layers[l];
    c.input = *h;
    if (layer.spectral_norm) {
      c.sigma = EstimatedSigma(layer.weight, layer.sn);
      c.effective_weight = layer.weight / c.sigma;
    } else {
      c.sigma = 1.0;
      c.effective_weight = layer.weight;
    }
    c.pre_activation.noalias() = c.input * c.effective_weight.transpose();
    c.pre_activation.rowwise() += layer.bias.transpose();

    const bool hidden = l + 1 < params.layers.size();
    if (hidden) {
      DenseMatrix y;
      const auto& bn = params.batch_norms[l];
      if (bn) {
        if (mode == Mode::kTrain) {
          c.batch_mean = c.pre_activation.colwise().mean().transpose();
          DenseMatrix centered = c.pre_activation.rowwise() - c.batch_mean.transpose();
          c.batch_var = centered.array().square().colwise().sum().transpose() / batch;
          c.inv_std = (c.batch_var.array() + bn->epsilon).rsqrt().matrix();
          c.normalized = centered.array().rowwise() * c.inv_std.transpose().array();
        } else {
          c.inv_std = (bn->running_var.array() + bn->epsilon).rsqrt().matrix();
          c.normalized = (c.pre_activation.rowwise() - bn->running_mean.transpose()).array()
                             .rowwise() *
                         c.inv_std.transpose().array();
        }
        y = c.normalized.array().rowwise() * bn->scale.transpose().array();
        y.rowwise() += bn->shift.transpose();
      } else {
        y = c.pre_activation;
      }
      ApplyActivation(params.hidden_activation, y);
      c.output = std::move(y);
    } else {
      c.output = c.pre_activation;
      ApplyActivation(params.output_activation, c.output);
    }
    h = &c.output;
  }
  result.output = result.cache.layers.back().output;
  if (!result.output.allFinite()) throw NumericError("MLP forward produced non-finite output");
  return result;
}

DenseMatrix MlpInfer(const MlpParams& params, const DenseMatrix& input) {
  CheckInput(params, input);
  DenseMatrix h = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    DenseMatrix z;
    if (layer.spectral_norm) {
      z.noalias() = (h * layer.weight.transpose()) / EstimatedSigma(layer.weight, layer.sn);
    } else {
      z.noalias() = h * layer.weight.transpose();
    }
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < params.layers.size()) {
      if (const auto& bn = params.batch_norms[l]) {
        const Vector gain =
            bn->scale.array() * (bn->running_var.array() + bn->epsilon).rsqrt();
        const Vector offset = bn->shift.array() - bn->running_mean.array() * gain.array();
        z = z.array().rowwise() * gain.transpose().array();
        z.rowwise() += offset.transpose();
      }
      ApplyActivation(params.hidden_activation, z);
    } else {
      ApplyActivation(params.output_activation, z);
    }
    h = std::move(z);
  }
  if (!h.allFinite()) throw NumericError("MLP forward produced non-finite output");
  return h;
}

void CommitBatchNormStats(MlpParams& params, const ForwardCache& cache) {
  if (cache.mode != Mode::kTrain) return;
  for (std::size_t l = 0; l < params.batch_norms.size(); ++l) {
    auto& bn = params.batch_norms[l];
    if (!bn) continue;
    const LayerCache& c = cache.layers[l];
    const double n = static_cast<double>(c.input.rows());
    const Vector unbiased = c.batch_var * (n / (n - 1.0));
    bn->running_mean = bn->momentum * bn->running_mean + (1.0 - bn->momentum) * c.batch_mean;
    bn->running_var = bn->momentum * bn->running_var + (1.0 - bn->momentum) * unbiased;
  }
}

MlpGrads ZeroGrads(const MlpParams& params) {
  MlpGrads g;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    g.weight.push_back(DenseMatrix::Zero(params.layers[l].weight.rows(),
                                         params.layers[l].weight.cols()));
    g.bias.push_back(Vector::Zero(params.layers[l].bias.size()));
  }
  for (const auto& bn : params.batch_norms) {
    g.bn_scale.push_back(bn ? Vector::Zero(bn->scale.size()) : Vector());
    g.bn_shift.push_back(bn ? Vector::Zero(bn->shift.size()) : Vector());
  }
  return g;
}

void AddInPlace(MlpGrads& into, const MlpGrads& other) {
  for (std::size_t l = 0; l < into.weight.size(); ++l) {
    into.weight[l] += other.weight[l];
    into.bias[l] += other.bias[l];
  }
  for (std::size_t h = 0; h < into.bn_scale.size(); ++h) {
    into.bn_scale[h] += other.bn_scale[h];
    into.bn_shift[h] += other.bn_shift[h];
  }
}

BackwardResult MlpBackward(const MlpParams& params, const ForwardCache& cache,
                           const DenseMatrix& output_grad) {
  if (cache.layers.size() != params.layers.size())
    throw ConfigError("backward cache does not match network depth");
  const LayerCache& last = cache.layers.back();
  if (output_grad.rows() != last.output.rows() || output_grad.cols() != last.output.cols())
    throw ConfigError("backward output gradient shape mismatch");

  BackwardResult result;
  result.grads = ZeroGrads(params);
  DenseMatrix g = output_grad;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const DenseLayer& layer = params.layers[li];
    const LayerCache& c = cache.layers[li];
    const bool hidden = li + 1 < params.layers.size();
    DenseMatrix dz;
    if (!hidden) {
      dz = std::move(g);
      ActivationBackward(params.output_activation, c.output, dz);
    } else {
      DenseMatrix dy = std::move(g);
      ActivationBackward(params.hidden_activation, c.output, dy);
      if (const auto& bn = params.batch_norms[li]) {
        result.grads.bn_scale[li] =
            (dy.array() * c.normalized.array()).colwise().sum().transpose();
        result.grads.bn_shift[li] = dy.colwise().sum().transpose();
        DenseMatrix dxhat = dy.array().rowwise() * bn->scale.transpose().array();
        if (cache.mode == Mode::kTrain) {
          const double n = static_cast<double>(dxhat.rows());
          const RowVector sum_dxhat = dxhat.colwise().sum();
          const RowVector sum_dxhat_xhat =
              (dxhat.array() * c.normalized.array()).colwise().sum();
          DenseMatrix t = (n * dxhat).rowwise() - sum_dxhat;
          t.array() -= c.normalized.array().rowwise() * sum_dxhat_xhat.array();
          dz = (t.array().rowwise() * (c.inv_std.transpose().array() / n)).matrix();
        } else {
          dz = dxhat.array().rowwise() * c.inv_std.transpose().array();
        }
      } else {
        dz = std::move(dy);
      }
    }
    DenseMatrix d_eff = dz.transpose() * c.input;
    result.grads.bias[li] = dz.colwise().sum().transpose();
    if (layer.spectral_norm) {
      // W_eff = W / (u^T W v) with (u, v) held fixed.
      const double inner = (d_eff.array() * c.effective_weight.array()).sum();
      d_eff -= inner * (layer.sn.u * layer.sn.v.transpose());
      d_eff /= c.sigma;
    }
    result.grads.weight[li] = std::move(d_eff);
    g.noalias() = dz * c.effective_weight;
  }
  result.input_grad = std::move(g);
  return result;
}

std::vector<std::span<double>> ParamViews(MlpParams& params) {
  std::vector<std::span<double>> views;
  for (auto& layer : params.layers) {
    views.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    views.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  for (auto& bn : params.batch_norms) {
    if (!bn) continue;
    views.emplace_back(bn->scale.data(), static_cast<std::size_t>(bn->scale.size()));
    views.emplace_back(bn->shift.data(), static_cast<std::size_t>(bn->shift.size()));
  }
  return views;
}

std::vector<std::span<double>> GradViews(MlpGrads& grads) {
  std::vector<std::span<double>> views;
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    views.emplace_back(grads.weight[l].data(), static_cast<std::size_t>(grads.weight[l].size()));
    views.emplace_back(grads.bias[l].data(), static_cast<std::size_t>(grads.bias[l].size()));
  }
  for (std::size_t h = 0; h < grads.bn_scale.size(); ++h) {
    if (grads.bn_scale[h].size() == 0) continue;
    views.emplace_back(grads.bn_scale[h].data(), static_cast<std::size_t>(grads.bn_scale[h].size()));
    views.emplace_back(grads.bn_shift[h].data(), static_cast<std::size_t>(grads.bn_shift[h].size()));
  }
  return views;
}

std::vector<std::string> ParamNames(const MlpParams& params) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  for (std::size_t h = 0; h < params.batch_norms.size(); ++h) {
    if (!params.batch_norms[h]) continue;
    names.push_back("bn" + std::to_string(h) + ".scale");
    names.push_back("bn" + std::to_string(h) + ".shift");
  }
  return names;
}

void RefreshSpectralNorms(MlpParams& params, int iterations) {
  for (auto& layer : params.layers) {
    if (!layer.spectral_norm) continue;
    for (int i = 0; i < iterations; ++i) PowerIterate(layer.weight, layer.sn);
  }
}

}  // namespace plangan::nn
