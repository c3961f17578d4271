#pragma once

// Flat binary tensor layout shared by position-embedding grids and token matrices.
//
//   offset 0   4 bytes  magic "UHDT"
//   offset 4   uint32   rows
//   offset 8   uint32   cols
//   offset 12  uint32   dim
//   offset 16  rows*cols*dim float64, row-major, channel-last
//
// All integers and floats are little-endian. A token matrix is stored with
// rows = token count, cols = 1.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uhd/resampler.hpp"
#include "uhd/slice_encoding.hpp"

namespace uhd {

inline constexpr char kTensorMagic[4] = {'U', 'H', 'D', 'T'};
inline constexpr std::size_t kTensorHeaderBytes = 16;
// Reader guard against corrupt headers (2 GiB of float64).
inline constexpr std::size_t kMaxTensorValues = std::size_t{1} << 28;

struct RawTensor {
  std::uint32_t rows{};
  std::uint32_t cols{};
  std::uint32_t dim{};
  std::vector<double> values;
};

void write_tensor(std::ostream& out, const RawTensor& tensor);
RawTensor read_tensor(std::istream& in);

void write_tensor_file(const std::string& path, const RawTensor& tensor);
RawTensor read_tensor_file(const std::string& path);

RawTensor to_raw(const PosEmbedGrid& grid);
PosEmbedGrid pos_embed_from_raw(RawTensor raw);

RawTensor to_raw(const Matrix& tokens);
Matrix tokens_from_raw(RawTensor raw);

}  // namespace uhd
