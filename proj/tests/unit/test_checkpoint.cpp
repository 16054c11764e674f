#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "sbl/error.hpp"
#include "sbl/numerics/parameters.hpp"
#include "test_support.hpp"

using namespace sbl;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sbl_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Checkpoint, ExactByteLayout) {
  const fs::path path = temp_file("layout.ckpt");
  save_checkpoint(path, {{"ab", Tensor({1, 2}, {1.0, -2.0})}});
  const std::string bytes = read_bytes(path);
  // magic + len + name + rank + 2 extents + 2 doubles
  ASSERT_EQ(bytes.size(), 4u + 4 + 2 + 4 + 8 + 16);
  EXPECT_EQ(bytes.substr(0, 4), "SBL1");
  std::uint32_t u;
  std::memcpy(&u, bytes.data() + 4, 4);
  EXPECT_EQ(u, 2u);
  EXPECT_EQ(bytes.substr(8, 2), "ab");
  std::memcpy(&u, bytes.data() + 10, 4);
  EXPECT_EQ(u, 2u);
  std::memcpy(&u, bytes.data() + 14, 4);
  EXPECT_EQ(u, 1u);
  std::memcpy(&u, bytes.data() + 18, 4);
  EXPECT_EQ(u, 2u);
  double d;
  std::memcpy(&d, bytes.data() + 22, 8);
  EXPECT_EQ(d, 1.0);
  std::memcpy(&d, bytes.data() + 30, 8);
  EXPECT_EQ(d, -2.0);
}

TEST(Checkpoint, RoundTripPreservesNamesShapesAndBits) {
  std::mt19937_64 rng(17);
  std::vector<NamedTensor> tensors{
      {"fp.point.0.W", sbl::testing::random_tensor({3, 8}, rng)},
      {"fp.point.0.b", sbl::testing::random_tensor({8}, rng)},
      {"head.W", sbl::testing::random_tensor({2, 2, 2}, rng)},
  };
  const fs::path path = temp_file("roundtrip.ckpt");
  save_checkpoint(path, tensors);
  EXPECT_EQ(load_checkpoint(path), tensors);
}

TEST(Checkpoint, RestoreChecksNamesAndShapes) {
  ParameterSet params;
  params.add("w", Tensor({2, 2}, 0.0));
  restore(params, {{"w", Tensor({2, 2}, 3.0)}, {"extra", Tensor({1}, 1.0)}});
  EXPECT_EQ(params.items()[0].var.value()[3], 3.0);
  EXPECT_THROW(restore(params, {{"w", Tensor({4}, 1.0)}}), Error);
  EXPECT_THROW(restore(params, {{"v", Tensor({2, 2}, 1.0)}}), Error);
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  const fs::path bad = temp_file("bad.ckpt");
  {
    std::ofstream f(bad, std::ios::binary);
    f << "NOPE";
  }
  EXPECT_THROW(load_checkpoint(bad), Error);

  const fs::path good = temp_file("trunc.ckpt");
  save_checkpoint(good, {{"w", Tensor({4}, 1.0)}});
  fs::resize_file(good, fs::file_size(good) - 3);
  EXPECT_THROW(load_checkpoint(good), Error);
}
