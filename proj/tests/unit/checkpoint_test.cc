#include "plangan/nn/checkpoint.h"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "plangan/core/errors.h"
#include "plangan/nn/adam.h"
#include "test_util.h"

namespace plangan::nn {
namespace {

namespace fs = std::filesystem;

fs::path TempFile(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plangan_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteBytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(Checkpoint, ArchiveRoundTripIsBitExact) {
  Rng rng(1);
  TensorArchive a;
  const DenseMatrix m = testing::RandomMatrix(3, 4, rng);
  Vector v(3);
  v << 0.1, -1e-300, 1e300;
  a.PutMatrix("m", m);
  a.PutVector("v", v);
  a.PutScalar("s", 1.0 / 3.0);
  const fs::path p = TempFile("roundtrip.bin");
  a.Save(p);
  const TensorArchive b = TensorArchive::Load(p);
  EXPECT_TRUE(b.GetMatrix("m", 3, 4) == m);
  EXPECT_TRUE(b.GetVector("v", 3) == v);
  EXPECT_EQ(b.GetScalar("s"), 1.0 / 3.0);
  ASSERT_EQ(b.entries().size(), 3u);
  EXPECT_EQ(b.entries()[0].first, "m");
  EXPECT_EQ(b.entries()[2].first, "s");
}

TEST(Checkpoint, MissingAndMisshapenTensorsNamed) {
  TensorArchive a;
  a.PutVector("bias", Vector::Zero(4));
  try {
    a.GetVector("bias", 5);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.tensor(), "bias");
  }
  try {
    a.Get("nope");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.tensor(), "nope");
  }
  EXPECT_THROW(a.PutVector("bias", Vector::Zero(1)), ConfigError);
}

TEST(Checkpoint, CorruptTensorNamedOnLoad) {
  TensorArchive a;
  a.PutVector("first", Vector::Ones(2));
  a.PutVector("second", Vector::Ones(2));
  a.PutVector("third", Vector::Ones(2));
  const fs::path p = TempFile("corrupt.bin");
  a.Save(p);
  std::string bytes = ReadBytes(p);
  // Overwrite the first value of "second" with NaN.
  const auto at = bytes.find("second") + 6 + 4 + 8;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(bytes.data() + at, &nan, sizeof nan);
  WriteBytes(p, bytes);
  try {
    TensorArchive::Load(p);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.tensor(), "second");
    EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
  }

  a.Save(p);
  bytes = ReadBytes(p);
  WriteBytes(p, bytes.substr(0, bytes.size() - 4));
  try {
    TensorArchive::Load(p);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.tensor(), "third");
  }

  WriteBytes(p, "XXXX");
  EXPECT_THROW(TensorArchive::Load(p), LoadError);
  EXPECT_THROW(TensorArchive::Load(TempFile("does_not_exist.bin")), IoError);
}

TEST(Checkpoint, MlpAndAdamRoundTrip) {
  Rng rng(2);
  MlpSpec spec{.input_size = 3, .hidden_sizes = {4, 4}, .output_size = 2, .batch_norm = true,
               .spectral_norm = true};
  MlpParams p = MakeMlp(spec, rng);
  const DenseMatrix x = testing::RandomMatrix(6, 3, rng);
  auto fwd = MlpForward(p, x, Mode::kTrain);
  CommitBatchNormStats(p, fwd.cache);
  AdamState adam = MakeAdamState(p, {});
  MlpGrads g = MlpBackward(p, fwd.cache, DenseMatrix::Ones(6, 2)).grads;
  AdamStep(p, g, adam);

  TensorArchive a;
  SaveMlp(a, "net", p);
  SaveAdam(a, "opt", adam);
  const fs::path path = TempFile("mlp.bin");
  a.Save(path);
  const TensorArchive b = TensorArchive::Load(path);

  Rng other(99);
  MlpParams q = MakeMlp(spec, other);
  LoadMlp(b, "net", q);
  AdamState adam2 = MakeAdamState(q, {});
  LoadAdam(b, "opt", adam2);
  EXPECT_TRUE(MlpInfer(q, x) == MlpInfer(p, x));
  EXPECT_EQ(adam2.step, adam.step);
  for (std::size_t i = 0; i < adam.first_moment.size(); ++i) {
    EXPECT_TRUE(adam2.first_moment[i] == adam.first_moment[i]);
    EXPECT_TRUE(adam2.second_moment[i] == adam.second_moment[i]);
  }

  MlpSpec wider = spec;
  wider.hidden_sizes = {5, 4};
  MlpParams r = MakeMlp(wider, other);
  EXPECT_THROW(LoadMlp(b, "net", r), LoadError);
}

}  // namespace
}  // namespace plangan::nn
