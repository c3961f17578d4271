#pragma once

// Reference perceiver-resampler compression: K shared queries cross-attend over
// a slice's visual tokens and always produce exactly K output tokens.
//
// Single layer, single head, no output projection or normalisation:
//   out = softmax((Q Wq)(T Wk)^T * scale) (T Wv)
//
// Keys are processed in lexicographic order of their token rows, so the output
// is bitwise independent of the order in which tokens are supplied.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace uhd {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_{0};
  int cols_{0};
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);

// count x dim
using TokenMatrix = Matrix;
// K x dim
using QuerySet = Matrix;

inline constexpr int kDefaultQueryCount = 64;

struct AttentionParams {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  double scale{1.0};

  AttentionParams() = default;
  AttentionParams(Matrix wq, Matrix wk, Matrix wv);

  int dim() const { return w_q.rows(); }

  // Gaussian entries with std 1/sqrt(dim), scale = 1/sqrt(dim).
  static AttentionParams random(int dim, std::uint64_t seed);
};

QuerySet random_queries(int count_K, int dim, std::uint64_t seed);
TokenMatrix random_tokens(int count, int dim, std::uint64_t seed);

// Row-wise softmax with max subtraction. Sums run in column order.
Matrix softmax_rows(const Matrix& logits);

struct AttentionResult {
  Matrix output;     // K x dim
  Matrix attention;  // K x T, columns in canonical key order
  std::vector<int> key_order;  // canonical position -> input row
};

AttentionResult cross_attention(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params);

TokenMatrix cross_attention_forward(const QuerySet& queries, const TokenMatrix& tokens,
                                    const AttentionParams& params);

// One K-token output per input; slices are independent of one another.
std::vector<TokenMatrix> compress_slices(std::span<const TokenMatrix> slice_tokens, const QuerySet& queries,
                                         const AttentionParams& params);

struct AttentionGradients {
  Matrix queries;
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
};

// Scalar loss sum(probe .* output).
double probe_loss(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params,
                  const Matrix& probe);

AttentionGradients cross_attention_backward(const QuerySet& queries, const TokenMatrix& tokens,
                                            const AttentionParams& params, const Matrix& probe);

struct GradCheckReport {
  double max_rel_err{};
  std::map<std::string, double> per_param_err;
  AttentionGradients analytic;
  AttentionGradients numeric;
};

// Central finite differences against the analytic backward pass. Relative
// error per parameter is ||analytic - numeric|| / max(||analytic||, ||numeric||),
// taken as 0 when both gradients vanish.
GradCheckReport grad_check(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params,
                           double eps, const Matrix& probe);

}  // namespace uhd
