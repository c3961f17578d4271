#pragma once

// LLM-facing layout of compressed slice tokens.
//
// The overview block comes first, followed by a row separator, then the slice
// rows: blocks within a row are joined by col_sep (rendered ","), rows are
// joined by row_sep (rendered "\n").

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uhd/partition.hpp"

namespace uhd {

struct SchemaItem {
  enum class Kind { Content, ColSep, RowSep };

  Kind kind{Kind::Content};
  int block{-1};  // content only: 0 = overview, 1 + row*m + col = slice

  static SchemaItem content(int block) { return {Kind::Content, block}; }
  static SchemaItem col_sep() { return {Kind::ColSep, -1}; }
  static SchemaItem row_sep() { return {Kind::RowSep, -1}; }

  friend bool operator==(const SchemaItem&, const SchemaItem&) = default;
};

using TokenSequence = std::vector<SchemaItem>;

TokenSequence serialize_layout(const SliceGrid& grid, int K);
TokenSequence serialize_layout(const PartitionPlan& plan, int K);

struct ParsedLayout {
  SliceGrid grid;
  int overview_length{0};
  std::vector<std::vector<int>> block_lengths;  // [row][col]

  friend bool operator==(const ParsedLayout&, const ParsedLayout&) = default;
};

class SchemaParseError : public std::runtime_error {
 public:
  SchemaParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Throws SchemaParseError on a missing overview, empty or unseparated blocks,
// trailing separators and ragged rows ("ragged rows at row r", 1-based).
ParsedLayout parse_layout(std::span<const SchemaItem> sequence);

// Content tokens only: K * (slices + 1).
long long token_count(const PartitionPlan& plan, int K);
long long token_count(const SliceGrid& grid, int K);

struct SchemaCounts {
  long long content_tokens{};
  long long col_seps{};
  long long row_seps{};       // between slice rows
  long long overview_seps{};  // between the overview and the first row
  long long total_items{};
};

SchemaCounts count_items(std::span<const SchemaItem> sequence);

// Block placeholders ("[overview x64]", "[r0c1 x64]") with literal "," and "\n".
std::string render_layout(std::span<const SchemaItem> sequence);

}  // namespace uhd
