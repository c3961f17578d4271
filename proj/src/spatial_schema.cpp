#include "uhd/spatial_schema.hpp"

#include <algorithm>
#include <sstream>

namespace uhd {

TokenSequence serialize_layout(const SliceGrid& grid, int K) {
  if (K < 1 || grid.cols_m < 1 || grid.rows_n < 1) {
    throw std::invalid_argument("serialize_layout needs K >= 1 and a non-empty grid");
  }
  TokenSequence seq;
  seq.reserve(static_cast<std::size_t>(K) * (grid.slices() + 1) + static_cast<std::size_t>(grid.slices()));
  seq.insert(seq.end(), static_cast<std::size_t>(K), SchemaItem::content(0));
  seq.push_back(SchemaItem::row_sep());
  for (int r = 0; r < grid.rows_n; ++r) {
    if (r > 0) {
      seq.push_back(SchemaItem::row_sep());
    }
    for (int c = 0; c < grid.cols_m; ++c) {
      if (c > 0) {
        seq.push_back(SchemaItem::col_sep());
      }
      seq.insert(seq.end(), static_cast<std::size_t>(K), SchemaItem::content(1 + r * grid.cols_m + c));
    }
  }
  return seq;
}

TokenSequence serialize_layout(const PartitionPlan& plan, int K) { return serialize_layout(plan.grid, K); }

namespace {

// Length of the run of content items with the same block id starting at pos.
std::size_t content_run(std::span<const SchemaItem> seq, std::size_t pos) {
  std::size_t end = pos;
  while (end < seq.size() && seq[end].kind == SchemaItem::Kind::Content && seq[end].block == seq[pos].block) {
    ++end;
  }
  return end - pos;
}

}  // namespace

ParsedLayout parse_layout(std::span<const SchemaItem> seq) {
  if (seq.empty() || seq[0].kind != SchemaItem::Kind::Content) {
    throw SchemaParseError("missing overview block", 0);
  }
  ParsedLayout out;
  std::size_t pos = content_run(seq, 0);
  out.overview_length = static_cast<int>(pos);
  if (pos == seq.size()) {
    throw SchemaParseError("missing slice rows after overview block", pos);
  }
  if (seq[pos].kind != SchemaItem::Kind::RowSep) {
    throw SchemaParseError("expected row separator after overview block", pos);
  }
  ++pos;

  std::vector<int> row;
  auto finish_row = [&](std::size_t at) {
    if (!out.block_lengths.empty() && row.size() != out.block_lengths.front().size()) {
      throw SchemaParseError("ragged rows at row " + std::to_string(out.block_lengths.size() + 1), at);
    }
    out.block_lengths.push_back(std::move(row));
    row.clear();
  };

  while (true) {
    if (pos >= seq.size() || seq[pos].kind != SchemaItem::Kind::Content) {
      throw SchemaParseError("empty slice block", pos);
    }
    const std::size_t len = content_run(seq, pos);
    row.push_back(static_cast<int>(len));
    pos += len;
    if (pos == seq.size()) {
      finish_row(pos);
      break;
    }
    switch (seq[pos].kind) {
      case SchemaItem::Kind::ColSep:
        ++pos;
        break;
      case SchemaItem::Kind::RowSep:
        finish_row(pos);
        ++pos;
        break;
      case SchemaItem::Kind::Content:
        throw SchemaParseError("missing separator between blocks", pos);
    }
  }
  out.grid = {static_cast<int>(out.block_lengths.front().size()), static_cast<int>(out.block_lengths.size())};
  return out;
}

long long token_count(const SliceGrid& grid, int K) { return static_cast<long long>(K) * (grid.slices() + 1); }

long long token_count(const PartitionPlan& plan, int K) { return token_count(plan.grid, K); }

SchemaCounts count_items(std::span<const SchemaItem> seq) {
  SchemaCounts counts;
  counts.total_items = static_cast<long long>(seq.size());
  bool seen_overview_sep = false;
  for (const auto& item : seq) {
    switch (item.kind) {
      case SchemaItem::Kind::Content:
        ++counts.content_tokens;
        break;
      case SchemaItem::Kind::ColSep:
        ++counts.col_seps;
        break;
      case SchemaItem::Kind::RowSep:
        if (seen_overview_sep) {
          ++counts.row_seps;
        } else {
          ++counts.overview_seps;
          seen_overview_sep = true;
        }
        break;
    }
  }
  return counts;
}

std::string render_layout(std::span<const SchemaItem> seq) {
  std::ostringstream os;
  const int cols = seq.empty() ? 1 : std::max(1, parse_layout(seq).grid.cols_m);
  std::size_t pos = 0;
  while (pos < seq.size()) {
    const auto& item = seq[pos];
    if (item.kind == SchemaItem::Kind::Content) {
      const std::size_t len = content_run(seq, pos);
      if (item.block == 0) {
        os << "[overview x" << len << "]";
      } else {
        const int idx = item.block - 1;
        os << "[r" << idx / cols << "c" << idx % cols << " x" << len << "]";
      }
      pos += len;
      continue;
    }
    os << (item.kind == SchemaItem::Kind::ColSep ? "," : "\n");
    ++pos;
  }
  return os.str();
}

}  // namespace uhd
