#include "uhd/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace uhd {

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("matrix dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("matrix value count does not match its shape");
  }
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul shape mismatch");
  }
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_bt shape mismatch");
  }
  Matrix out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) {
        s += a(i, k) * b(j, k);
      }
      out(i, j) = s;
    }
  }
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_at shape mismatch");
  }
  Matrix out(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k) {
    for (int i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (int j = 0; j < b.cols(); ++j) {
        out(i, j) += aki * b(k, j);
      }
    }
  }
  return out;
}

AttentionParams::AttentionParams(Matrix wq, Matrix wk, Matrix wv)
    : w_q(std::move(wq)), w_k(std::move(wk)), w_v(std::move(wv)) {
  const int d = w_q.rows();
  for (const Matrix* m : {&w_q, &w_k, &w_v}) {
    if (m->rows() != d || m->cols() != d || d < 1) {
      throw std::invalid_argument("attention projections must be square and share one dimension");
    }
    if (!m->all_finite()) {
      throw std::invalid_argument("attention projections must be finite");
    }
  }
  scale = 1.0 / std::sqrt(static_cast<double>(d));
}

namespace {

Matrix gaussian(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (auto& v : m.data()) {
    v = dist(rng);
  }
  return m;
}

}  // namespace

AttentionParams AttentionParams::random(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix wq = gaussian(dim, dim, sd, rng);
  Matrix wk = gaussian(dim, dim, sd, rng);
  Matrix wv = gaussian(dim, dim, sd, rng);
  return AttentionParams(std::move(wq), std::move(wk), std::move(wv));
}

QuerySet random_queries(int count_K, int dim, std::uint64_t seed) {
  if (count_K < 1 || dim < 1) {
    throw std::invalid_argument("query set needs K >= 1 and dim >= 1");
  }
  std::mt19937_64 rng(seed);
  return gaussian(count_K, dim, 1.0, rng);
}

TokenMatrix random_tokens(int count, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian(count, dim, 1.0, rng);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
      const double e = std::exp(logits(i, j) - mx);
      out(i, j) = e;
      total += e;
    }
    for (int j = 0; j < logits.cols(); ++j) {
      out(i, j) /= total;
    }
  }
  return out;
}

namespace {

void check_inputs(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params) {
  if (tokens.rows() == 0) {
    throw std::invalid_argument("empty slice: cross-attention needs at least one token");
  }
  const int d = params.dim();
  if (queries.cols() != d || tokens.cols() != d) {
    throw std::invalid_argument("query/token dimension does not match attention parameters");
  }
  if (!queries.all_finite() || !tokens.all_finite()) {
    throw std::invalid_argument("queries and tokens must be finite");
  }
}

std::vector<int> canonical_key_order(const TokenMatrix& tokens) {
  std::vector<int> order(static_cast<std::size_t>(tokens.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ra = tokens.row(a);
    const auto rb = tokens.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& order) {
  Matrix out(static_cast<int>(order.size()), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = m.row(order[i]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * m.cols()));
  }
  return out;
}

struct ForwardCache {
  Matrix sorted_tokens;
  Matrix q_proj;
  Matrix k_proj;
  Matrix v_proj;
  Matrix attention;
  Matrix output;
  std::vector<int> order;
};

ForwardCache forward(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params) {
  check_inputs(queries, tokens, params);
  ForwardCache c;
  c.order = canonical_key_order(tokens);
  c.sorted_tokens = gather_rows(tokens, c.order);
  c.q_proj = matmul(queries, params.w_q);
  c.k_proj = matmul(c.sorted_tokens, params.w_k);
  c.v_proj = matmul(c.sorted_tokens, params.w_v);
  Matrix logits = matmul_bt(c.q_proj, c.k_proj);
  for (auto& v : logits.data()) {
    v *= params.scale;
  }
  c.attention = softmax_rows(logits);
  c.output = matmul(c.attention, c.v_proj);
  return c;
}

}  // namespace

AttentionResult cross_attention(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params) {
  auto c = forward(queries, tokens, params);
  return {std::move(c.output), std::move(c.attention), std::move(c.order)};
}

TokenMatrix cross_attention_forward(const QuerySet& queries, const TokenMatrix& tokens,
                                    const AttentionParams& params) {
  return forward(queries, tokens, params).output;
}

std::vector<TokenMatrix> compress_slices(std::span<const TokenMatrix> slice_tokens, const QuerySet& queries,
                                         const AttentionParams& params) {
  std::vector<TokenMatrix> out;
  out.reserve(slice_tokens.size());
  for (const auto& tokens : slice_tokens) {
    out.push_back(cross_attention_forward(queries, tokens, params));
  }
  return out;
}

double probe_loss(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params,
                  const Matrix& probe) {
  const Matrix out = cross_attention_forward(queries, tokens, params);
  if (probe.rows() != out.rows() || probe.cols() != out.cols()) {
    throw std::invalid_argument("probe direction must match the output shape");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    loss += probe.data()[i] * out.data()[i];
  }
  return loss;
}

AttentionGradients cross_attention_backward(const QuerySet& queries, const TokenMatrix& tokens,
                                            const AttentionParams& params, const Matrix& probe) {
  const auto c = forward(queries, tokens, params);
  if (probe.rows() != c.output.rows() || probe.cols() != c.output.cols()) {
    throw std::invalid_argument("probe direction must match the output shape");
  }
  const Matrix d_attention = matmul_bt(probe, c.v_proj);  // K x T
  const Matrix d_v = matmul_at(c.attention, probe);       // T x d

  Matrix d_logits(d_attention.rows(), d_attention.cols());
  for (int i = 0; i < d_logits.rows(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < d_logits.cols(); ++j) {
      dot += c.attention(i, j) * d_attention(i, j);
    }
    for (int j = 0; j < d_logits.cols(); ++j) {
      d_logits(i, j) = c.attention(i, j) * (d_attention(i, j) - dot) * params.scale;
    }
  }
  const Matrix d_q = matmul(d_logits, c.k_proj);     // K x d
  const Matrix d_k = matmul_at(d_logits, c.q_proj);  // T x d

  AttentionGradients g;
  g.w_q = matmul_at(queries, d_q);
  g.queries = matmul_bt(d_q, params.w_q);
  g.w_k = matmul_at(c.sorted_tokens, d_k);
  g.w_v = matmul_at(c.sorted_tokens, d_v);
  for (const Matrix* m : {&g.queries, &g.w_q, &g.w_k, &g.w_v}) {
    if (!m->all_finite()) {
      throw std::runtime_error("non-finite analytic gradient");
    }
  }
  return g;
}

namespace {

double l2(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) {
    s += v * v;
  }
  return std::sqrt(s);
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.data().size(); ++i) {
    const double d = analytic.data()[i] - numeric.data()[i];
    diff += d * d;
  }
  const double denom = std::max(l2(analytic), l2(numeric));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace

GradCheckReport grad_check(const QuerySet& queries, const TokenMatrix& tokens, const AttentionParams& params,
                           double eps, const Matrix& probe) {
  if (!(eps > 0.0 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check eps must lie in (0, 1e-3]");
  }
  GradCheckReport report;
  report.analytic = cross_attention_backward(queries, tokens, params, probe);

  QuerySet q = queries;
  AttentionParams p = params;
  auto numeric_for = [&](Matrix& target) {
    Matrix grad(target.rows(), target.cols());
    for (std::size_t i = 0; i < target.data().size(); ++i) {
      const double saved = target.data()[i];
      target.data()[i] = saved + eps;
      const double up = probe_loss(q, tokens, p, probe);
      target.data()[i] = saved - eps;
      const double down = probe_loss(q, tokens, p, probe);
      target.data()[i] = saved;
      grad.data()[i] = (up - down) / (2.0 * eps);
    }
    if (!grad.all_finite()) {
      throw std::runtime_error("non-finite numeric gradient");
    }
    return grad;
  };
  report.numeric.queries = numeric_for(q);
  report.numeric.w_q = numeric_for(p.w_q);
  report.numeric.w_k = numeric_for(p.w_k);
  report.numeric.w_v = numeric_for(p.w_v);

  report.per_param_err["queries"] = relative_error(report.analytic.queries, report.numeric.queries);
  report.per_param_err["w_q"] = relative_error(report.analytic.w_q, report.numeric.w_q);
  report.per_param_err["w_k"] = relative_error(report.analytic.w_k, report.numeric.w_k);
  report.per_param_err["w_v"] = relative_error(report.analytic.w_v, report.numeric.w_v);
  for (const auto& [name, err] : report.per_param_err) {
    report.max_rel_err = std::max(report.max_rel_err, err);
  }
  return report;
}

}  // namespace uhd
