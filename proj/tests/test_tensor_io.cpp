#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "uhd/tensor_io.hpp"

namespace {

TEST(TensorIo, HeaderLayoutIsLittleEndian) {
  uhd::RawTensor t{2, 1, 3, {1, 2, 3, 4, 5, 6}};
  std::ostringstream os;
  uhd::write_tensor(os, t);
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), uhd::kTensorHeaderBytes + 6 * sizeof(double));
  EXPECT_EQ(bytes.substr(0, 4), "UHDT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);
  // 1.0 as little-endian IEEE-754: 00 00 00 00 00 00 f0 3f
  EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 6]), 0xf0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 7]), 0x3f);
}

TEST(TensorIo, RoundTripPosEmbed) {
  uhd::PosEmbedGrid g(3, 4, 2);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = 0.5 * static_cast<double>(i) - 1.0 / 3.0;
  }
  std::stringstream ss;
  uhd::write_tensor(ss, uhd::to_raw(g));
  const auto back = uhd::pos_embed_from_raw(uhd::read_tensor(ss));
  EXPECT_EQ(back.rows, 3);
  EXPECT_EQ(back.cols, 4);
  EXPECT_EQ(back.dim_l, 2);
  EXPECT_EQ(back.values, g.values);
}

TEST(TensorIo, RoundTripTokensThroughFile) {
  const auto tokens = uhd::random_tokens(17, 5, 3);
  const auto path = std::filesystem::temp_directory_path() / "uhd_tensor_io_roundtrip.uhdt";
  uhd::write_tensor_file(path.string(), uhd::to_raw(tokens));
  const auto back = uhd::tokens_from_raw(uhd::read_tensor_file(path.string()));
  std::filesystem::remove(path);
  EXPECT_EQ(back, tokens);
}

TEST(TensorIo, RejectsBadInput) {
  std::istringstream bad_magic("XXXX");
  EXPECT_THROW(uhd::read_tensor(bad_magic), std::runtime_error);

  uhd::RawTensor t{1, 1, 2, {1, 2}};
  std::ostringstream os;
  uhd::write_tensor(os, t);
  std::istringstream truncated(os.str().substr(0, os.str().size() - 3));
  EXPECT_THROW(uhd::read_tensor(truncated), std::runtime_error);

  uhd::RawTensor mismatched{2, 2, 2, {1}};
  std::ostringstream sink;
  EXPECT_THROW(uhd::write_tensor(sink, mismatched), std::invalid_argument);

  EXPECT_THROW(uhd::tokens_from_raw(uhd::RawTensor{2, 2, 1, {1, 2, 3, 4}}), std::invalid_argument);

  std::string huge = "UHDT";
  for (int i = 0; i < 3; ++i) {
    huge += std::string("\xff\xff\x00\x00", 4);
  }
  std::istringstream oversized(huge);
  EXPECT_THROW(uhd::read_tensor(oversized), std::runtime_error);

  EXPECT_THROW(uhd::read_tensor_file("/nonexistent/dir/none.uhdt"), std::runtime_error);
}

}  // namespace
