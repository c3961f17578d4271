#include "uhd/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace uhd {

namespace {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw std::runtime_error("tensor file truncated in header");
  }
  return byteswap_if_big(v);
}

}  // namespace

void write_tensor(std::ostream& out, const RawTensor& tensor) {
  const std::size_t expected = static_cast<std::size_t>(tensor.rows) * tensor.cols * tensor.dim;
  if (tensor.values.size() != expected) {
    throw std::invalid_argument("tensor shape does not match value count");
  }
  out.write(kTensorMagic, sizeof kTensorMagic);
  put_u32(out, tensor.rows);
  put_u32(out, tensor.cols);
  put_u32(out, tensor.dim);
  for (double v : tensor.values) {
    const double le = byteswap_if_big(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  if (!out) {
    throw std::runtime_error("failed writing tensor");
  }
}

RawTensor read_tensor(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kTensorMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a UHDT tensor (bad magic)");
  }
  RawTensor t;
  t.rows = get_u32(in);
  t.cols = get_u32(in);
  t.dim = get_u32(in);
  const std::size_t count = static_cast<std::size_t>(t.rows) * t.cols * t.dim;
  if (count > kMaxTensorValues) {
    throw std::runtime_error("tensor header declares " + std::to_string(count) + " values, above the reader limit");
  }
  t.values.resize(count);
  for (auto& v : t.values) {
    double raw{};
    if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw)) {
      throw std::runtime_error("tensor file truncated in payload");
    }
    v = byteswap_if_big(raw);
  }
  return t;
}

void write_tensor_file(const std::string& path, const RawTensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  write_tensor(out, tensor);
}

RawTensor read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return read_tensor(in);
}

RawTensor to_raw(const PosEmbedGrid& grid) {
  return {static_cast<std::uint32_t>(grid.rows), static_cast<std::uint32_t>(grid.cols),
          static_cast<std::uint32_t>(grid.dim_l), grid.values};
}

PosEmbedGrid pos_embed_from_raw(RawTensor raw) {
  PosEmbedGrid grid(static_cast<int>(raw.rows), static_cast<int>(raw.cols), static_cast<int>(raw.dim));
  grid.values = std::move(raw.values);
  return grid;
}

RawTensor to_raw(const Matrix& tokens) {
  return {static_cast<std::uint32_t>(tokens.rows()), 1, static_cast<std::uint32_t>(tokens.cols()),
          tokens.data()};
}

Matrix tokens_from_raw(RawTensor raw) {
  if (raw.cols != 1) {
    throw std::invalid_argument("token matrix files must have cols == 1");
  }
  return Matrix(static_cast<int>(raw.rows), static_cast<int>(raw.dim), std::move(raw.values));
}

}  // namespace uhd
