#include "plangan/nn/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "plangan/core/errors.h"

namespace plangan::nn {
namespace {

constexpr char kMagic[4] = {'P', 'G', 'A', 'N'};

template <typename T>
T ToLittle(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
void WriteRaw(std::ostream& out, T value) {
  value = ToLittle(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& in, const std::string& context) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw LoadError(context, "unexpected end of file");
  return ToLittle(value);
}

std::uint64_t Product(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void TensorArchive::Put(const std::string& name, std::vector<std::uint64_t> shape,
                        std::vector<double> data) {
  if (Product(shape) != data.size()) throw ConfigError("tensor '" + name + "' shape/data mismatch");
  if (Contains(name)) throw ConfigError("duplicate tensor name '" + name + "'");
  entries_.emplace_back(name, Tensor{std::move(shape), std::move(data)});
}

void TensorArchive::PutMatrix(const std::string& name, const DenseMatrix& m) {
  Put(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
      std::vector<double>(m.data(), m.data() + m.size()));
}

void TensorArchive::PutVector(const std::string& name, const Vector& v) {
  Put(name, {static_cast<std::uint64_t>(v.size())},
      std::vector<double>(v.data(), v.data() + v.size()));
}

void TensorArchive::PutScalar(const std::string& name, double value) {
  Put(name, {}, {value});
}

bool TensorArchive::Contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

const Tensor& TensorArchive::Get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw LoadError(name, "missing");
}

DenseMatrix TensorArchive::GetMatrix(const std::string& name, Eigen::Index rows,
                                     Eigen::Index cols) const {
  const Tensor& t = Get(name);
  if (t.shape != std::vector<std::uint64_t>{static_cast<std::uint64_t>(rows),
                                            static_cast<std::uint64_t>(cols)})
    throw LoadError(name, "shape mismatch");
  return Eigen::Map<const DenseMatrix>(t.data.data(), rows, cols);
}

Vector TensorArchive::GetVector(const std::string& name, Eigen::Index size) const {
  const Tensor& t = Get(name);
  if (t.shape != std::vector<std::uint64_t>{static_cast<std::uint64_t>(size)})
    throw LoadError(name, "shape mismatch");
  return Eigen::Map<const Vector>(t.data.data(), size);
}

double TensorArchive::GetScalar(const std::string& name) const {
  const Tensor& t = Get(name);
  if (!t.shape.empty()) throw LoadError(name, "expected scalar");
  return t.data.front();
}

void TensorArchive::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  WriteRaw<std::uint32_t>(out, kCheckpointVersion);
  WriteRaw<std::uint64_t>(out, entries_.size());
  for (const auto& [name, tensor] : entries_) {
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (auto d : tensor.shape) WriteRaw<std::uint64_t>(out, d);
    for (double x : tensor.data) WriteRaw<double>(out, x);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

TensorArchive TensorArchive::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw LoadError("<header>", "bad magic");
  const auto version = ReadRaw<std::uint32_t>(in, "<header>");
  if (version != kCheckpointVersion)
    throw LoadError("<header>", "unsupported version " + std::to_string(version));
  const auto count = ReadRaw<std::uint64_t>(in, "<header>");
  TensorArchive archive;
  std::string previous = "<header>";
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = ReadRaw<std::uint32_t>(in, "after " + previous);
    if (name_len > (1u << 16)) throw LoadError("after " + previous, "implausible name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw LoadError("after " + previous, "truncated name");
    const auto rank = ReadRaw<std::uint32_t>(in, name);
    if (rank > 8) throw LoadError(name, "implausible rank");
    std::vector<std::uint64_t> shape(rank);
    for (auto& d : shape) d = ReadRaw<std::uint64_t>(in, name);
    const std::uint64_t n = Product(shape);
    if (n > (1ull << 32)) throw LoadError(name, "implausible size");
    std::vector<double> data(n);
    for (auto& x : data) x = ReadRaw<double>(in, name);
    for (double x : data)
      if (!std::isfinite(x)) throw LoadError(name, "non-finite value");
    archive.entries_.emplace_back(name, Tensor{std::move(shape), std::move(data)});
    previous = name;
  }
  return archive;
}

void SaveMlp(TensorArchive& archive, const std::string& prefix, const MlpParams& params) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    const std::string p = prefix + "/layer" + std::to_string(l);
    archive.PutMatrix(p + ".weight", layer.weight);
    archive.PutVector(p + ".bias", layer.bias);
    if (layer.spectral_norm) {
      archive.PutVector(p + ".sn_u", layer.sn.u);
      archive.PutVector(p + ".sn_v", layer.sn.v);
    }
  }
  for (std::size_t h = 0; h < params.batch_norms.size(); ++h) {
    const auto& bn = params.batch_norms[h];
    if (!bn) continue;
    const std::string p = prefix + "/bn" + std::to_string(h);
    archive.PutVector(p + ".scale", bn->scale);
    archive.PutVector(p + ".shift", bn->shift);
    archive.PutVector(p + ".running_mean", bn->running_mean);
    archive.PutVector(p + ".running_var", bn->running_var);
  }
}

void LoadMlp(const TensorArchive& archive, const std::string& prefix, MlpParams& params) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    DenseLayer& layer = params.layers[l];
    const std::string p = prefix + "/layer" + std::to_string(l);
    layer.weight = archive.GetMatrix(p + ".weight", layer.weight.rows(), layer.weight.cols());
    layer.bias = archive.GetVector(p + ".bias", layer.bias.size());
    if (layer.spectral_norm) {
      layer.sn.u = archive.GetVector(p + ".sn_u", layer.weight.rows());
      layer.sn.v = archive.GetVector(p + ".sn_v", layer.weight.cols());
    }
  }
  for (std::size_t h = 0; h < params.batch_norms.size(); ++h) {
    auto& bn = params.batch_norms[h];
    if (!bn) continue;
    const std::string p = prefix + "/bn" + std::to_string(h);
    const Eigen::Index w = bn->scale.size();
    bn->scale = archive.GetVector(p + ".scale", w);
    bn->shift = archive.GetVector(p + ".shift", w);
    bn->running_mean = archive.GetVector(p + ".running_mean", w);
    bn->running_var = archive.GetVector(p + ".running_var", w);
    if ((bn->running_var.array() <= 0.0).any())
      throw LoadError(p + ".running_var", "non-positive variance");
  }
}

void SaveAdam(TensorArchive& archive, const std::string& prefix, const AdamState& state) {
  archive.PutScalar(prefix + "/step", static_cast<double>(state.step));
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    archive.PutVector(prefix + "/m" + std::to_string(i), state.first_moment[i]);
    archive.PutVector(prefix + "/v" + std::to_string(i), state.second_moment[i]);
  }
}

void LoadAdam(const TensorArchive& archive, const std::string& prefix, AdamState& state) {
  const double step = archive.GetScalar(prefix + "/step");
  if (step < 0.0 || step != static_cast<double>(static_cast<std::int64_t>(step)))
    throw LoadError(prefix + "/step", "invalid step counter");
  state.step = static_cast<std::int64_t>(step);
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    state.first_moment[i] =
        archive.GetVector(prefix + "/m" + std::to_string(i), state.first_moment[i].size());
    state.second_moment[i] =
        archive.GetVector(prefix + "/v" + std::to_string(i), state.second_moment[i].size());
    if ((state.second_moment[i].array() < 0.0).any())
      throw LoadError(prefix + "/v" + std::to_string(i), "negative second moment");
  }
}

}  // namespace plangan::nn
