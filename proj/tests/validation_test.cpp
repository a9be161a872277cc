#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "taskbench/validation.hpp"

using namespace taskbench;

namespace {

using Buffers = std::vector<std::vector<std::byte>>;

std::vector<std::span<const std::byte>> views(const Buffers& bufs) {
  return {bufs.begin(), bufs.end()};
}

}  // namespace

TEST(TaskOutput, HeaderOnly) {
  auto out = make_output({3, 7}, 16);
  ASSERT_EQ(out.size(), 16u);
  EXPECT_EQ(out[0], std::byte{3});
  EXPECT_EQ(out[8], std::byte{7});
  for (std::size_t k : {1, 2, 7, 9, 15}) EXPECT_EQ(out[k], std::byte{0});
  EXPECT_EQ(decode_header(out), (Point{3, 7}));
}

TEST(TaskOutput, LittleEndianHeader) {
  auto out = make_output({0x0102030405060708, 0x1122}, 16);
  EXPECT_EQ(out[0], std::byte{0x08});
  EXPECT_EQ(out[7], std::byte{0x01});
  EXPECT_EQ(out[8], std::byte{0x22});
  EXPECT_EQ(out[9], std::byte{0x11});
}

TEST(TaskOutput, FillerFormula) {
  auto out = make_output({0, 0}, 32);
  for (std::size_t k = 16; k < 32; ++k) EXPECT_EQ(out[k], static_cast<std::byte>(k));
  auto wrap = make_output({200, 100}, 64);
  for (std::size_t k = 16; k < 64; ++k) EXPECT_EQ(out.size() ? wrap[k] : std::byte{}, static_cast<std::byte>((300 + k) % 256));
}

TEST(TaskOutput, HeaderRoundTripProperty) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> coord(0, (std::int64_t{1} << 32) - 1);
  for (int n = 0; n < 1000; ++n) {
    const Point p{coord(rng), coord(rng)};
    EXPECT_EQ(decode_header(make_output(p, 16 + static_cast<std::size_t>(n % 50))), p);
  }
}

TEST(TaskOutput, RejectsTinyBuffers) {
  EXPECT_THROW(make_output({0, 0}, 15), std::invalid_argument);
  std::vector<std::byte> small(8);
  EXPECT_THROW(decode_header(small), std::invalid_argument);
}

TEST(VerifyInputs, StencilOk) {
  Buffers in = {make_output({1, 4}, 64), make_output({1, 5}, 64), make_output({1, 6}, 64)};
  const std::vector<std::int64_t> expected = {4, 5, 6};
  EXPECT_FALSE(verify_inputs({2, 5}, expected, views(in), 64));
}

TEST(VerifyInputs, AcceptsPermutedDelivery) {
  Buffers in = {make_output({1, 6}, 64), make_output({1, 4}, 64), make_output({1, 5}, 64)};
  const std::vector<std::int64_t> expected = {4, 5, 6};
  EXPECT_FALSE(verify_inputs({2, 5}, expected, views(in), 64));
}

TEST(VerifyInputs, WrongProducerNamed) {
  Buffers in = {make_output({1, 4}, 64), make_output({1, 5}, 64), make_output({1, 7}, 64)};
  const std::vector<std::int64_t> expected = {4, 5, 6};
  auto v = verify_inputs({2, 5}, expected, views(in), 64);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->expected_column, 6);
  EXPECT_EQ(v->got_column, 7);
  EXPECT_EQ(v->task, (Point{2, 5}));
  EXPECT_NE(v->describe().find("expected column 6, got 7"), std::string::npos);
}

TEST(VerifyInputs, WrongTimestep) {
  Buffers in = {make_output({0, 5}, 32)};
  const std::vector<std::int64_t> expected = {5};
  auto v = verify_inputs({2, 5}, expected, views(in), 32);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->producer, (Point{0, 5}));
}

TEST(VerifyInputs, CountAndSizeMismatch) {
  Buffers in = {make_output({1, 4}, 32)};
  const std::vector<std::int64_t> two = {4, 5};
  EXPECT_TRUE(verify_inputs({2, 5}, two, views(in), 32));
  const std::vector<std::int64_t> one = {4};
  EXPECT_TRUE(verify_inputs({2, 5}, one, views(in), 48));
}

TEST(VerifyInputs, CorruptBodyByteReportsOffset) {
  for (std::size_t bytes : {17u, 64u, 4096u}) {
    for (std::size_t flip : {std::size_t{16}, 16 + (bytes - 16) / 2, bytes - 1}) {
      Buffers in = {make_output({1, 4}, bytes), make_output({1, 5}, bytes)};
      in[1][flip] ^= std::byte{0x5a};
      const std::vector<std::int64_t> expected = {4, 5};
      auto v = verify_inputs({2, 4}, expected, views(in), bytes);
      ASSERT_TRUE(v) << bytes << " " << flip;
      EXPECT_EQ(v->byte_offset, flip);
      EXPECT_EQ(v->producer, (Point{1, 5}));
    }
  }
}

TEST(VerifyInputs, LargeBodiesAreProbed) {
  const std::size_t bytes = 1 << 16;
  const std::size_t body = bytes - kHeaderBytes;
  // Probe positions include both ends of the body.
  for (std::size_t flip : {kHeaderBytes, bytes - 1, kHeaderBytes + (body - 1) * 21 / 63}) {
    Buffers in = {make_output({1, 4}, bytes)};
    in[0][flip] ^= std::byte{1};
    const std::vector<std::int64_t> expected = {4};
    auto v = verify_inputs({2, 4}, expected, views(in), bytes);
    ASSERT_TRUE(v);
    EXPECT_EQ(v->byte_offset, flip);
  }
}

TEST(VerifyInputs, EmptyDependenceSet) {
  const std::vector<std::int64_t> none;
  EXPECT_FALSE(verify_inputs({3, 1}, none, {}, 16));
  EXPECT_FALSE(verify_inputs({3, 1}, ColumnSet{}, {}, 16));
}
