#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plangan/nn/adam.h"
#include "plangan/nn/mlp.h"

namespace plangan::nn {

// Binary layout (all integers little-endian):
//   "PGAN" | u32 version | u64 tensor count |
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] |
//               f64 data[prod(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

// Ordered collection of named tensors.
class TensorArchive {
 public:
  void Put(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> data);
  void PutMatrix(const std::string& name, const DenseMatrix& m);
  void PutVector(const std::string& name, const Vector& v);
  void PutScalar(const std::string& name, double value);

  bool Contains(const std::string& name) const;
  // Throws LoadError naming the tensor when missing.
  const Tensor& Get(const std::string& name) const;
  // Throws LoadError when missing or when the shape differs.
  DenseMatrix GetMatrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) const;
  Vector GetVector(const std::string& name, Eigen::Index size) const;
  double GetScalar(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  void Save(const std::filesystem::path& path) const;
  static TensorArchive Load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Weights, biases, BatchNorm parameters and running stats, spectral-norm (u, v).
void SaveMlp(TensorArchive& archive, const std::string& prefix, const MlpParams& params);
// `params` must already have the target architecture; shapes are checked.
void LoadMlp(const TensorArchive& archive, const std::string& prefix, MlpParams& params);

void SaveAdam(TensorArchive& archive, const std::string& prefix, const AdamState& state);
void LoadAdam(const TensorArchive& archive, const std::string& prefix, AdamState& state);

}  // namespace plangan::nn
