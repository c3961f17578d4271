#include "uhd/proofs_verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace uhd {

DistributionSpec DistributionSpec::default_spec() { return {"default", 1.0, 20.0, 1.0, 6.0, true}; }
DistributionSpec DistributionSpec::alternate_spec() { return {"alternate", 1.0, 3.0, 1.0, 2.0, true}; }
DistributionSpec DistributionSpec::literal_spec() { return {"literal", 0.0, 20.0, 1.0, 6.0, true}; }

void DistributionSpec::validate() const {
  if (!(area_lo >= 0.0) || !(area_hi > area_lo) || !(aspect_lo > 0.0) || !(aspect_hi >= aspect_lo)) {
    throw std::invalid_argument("distribution ranges must be non-empty and positive");
  }
}

std::string DistributionSpec::describe() const {
  std::ostringstream os;
  os << "n ~ U(" << area_lo << ", " << area_hi << "], a ~ U[" << aspect_lo << ", " << aspect_hi << "]"
     << (fold_ratio ? ", ratio folded to max(r, 1/r)" : ", ratio unfolded");
  return os.str();
}

SliceSample slice_sample(double area_ratio, double aspect, const VitSpec& vit, bool fold_ratio) {
  const double s = static_cast<double>(vit.area_px());
  const double w = std::sqrt(area_ratio * s * aspect);
  const double h = std::sqrt(area_ratio * s / aspect);
  const GridChoice choice = select_grid(w, h, vit);
  const double vit_aspect =
      static_cast<double>(vit.pretrain_width_px()) / static_cast<double>(vit.pretrain_height_px());
  double ratio = (w * choice.grid.rows_n) / (h * choice.grid.cols_m) / vit_aspect;
  if (fold_ratio && ratio < 1.0) {
    ratio = 1.0 / ratio;
  }
  return {ratio, area_ratio / choice.grid.slices()};
}

RatioBound enumerate_ratio_bound(int N_max) {
  if (N_max < 1) {
    throw std::invalid_argument("enumerate_ratio_bound needs N_max >= 1");
  }
  const double reach = std::log(3.0) - 1e-12;
  RatioBound out;
  for (int N = 1; N <= N_max; ++N) {
    std::vector<double> logs;
    for (const auto& g : candidate_grids(N)) {
      logs.push_back(std::log(static_cast<double>(g.cols_m) / g.rows_n));
    }
    std::sort(logs.begin(), logs.end());
    logs.erase(std::unique(logs.begin(), logs.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               logs.end());
    for (std::size_t i = 1; i < logs.size(); ++i) {
      out.worst_gap = std::max(out.worst_gap, logs[i] - logs[i - 1]);
    }
    if (logs.front() > -reach || logs.back() < reach) {
      out.uncovered_N.push_back(N);
    }
  }
  out.holds = out.worst_gap <= 2.0 * std::log(2.0) + 1e-12;
  return out;
}

SweepReport sweep_slice_bounds(int points_per_axis, double aspect_lo, double aspect_hi, double area_lo,
                               double area_hi, const VitSpec& vit) {
  if (points_per_axis < 2 || !(aspect_lo > 0.0) || !(aspect_hi > aspect_lo) || !(area_hi > area_lo) ||
      area_lo < 0.0) {
    throw std::invalid_argument("sweep needs >= 2 points per axis and non-empty positive ranges");
  }
  SweepReport out;
  out.min_ratio = out.min_area = std::numeric_limits<double>::infinity();
  out.max_ratio = out.max_area = -std::numeric_limits<double>::infinity();
  const double log_lo = std::log(aspect_lo);
  const double log_span = std::log(aspect_hi) - log_lo;
  for (int i = 0; i < points_per_axis; ++i) {
    const double n = area_lo + (area_hi - area_lo) * (i + 1) / points_per_axis;
    for (int j = 0; j < points_per_axis; ++j) {
      const double a = std::exp(log_lo + log_span * j / (points_per_axis - 1));
      const SliceSample smp = slice_sample(n, a, vit, false);
      out.min_ratio = std::min(out.min_ratio, smp.ratio);
      out.max_ratio = std::max(out.max_ratio, smp.ratio);
      if (smp.area < out.min_area) {
        out.min_area = smp.area;
        out.area_ratio_at_min_area = n;
      }
      if (smp.area > out.max_area) {
        out.max_area = smp.area;
        out.area_ratio_at_max_area = n;
      }
    }
  }
  out.points = static_cast<long long>(points_per_axis) * points_per_axis;
  return out;
}

namespace {

struct Moments {
  long long count{};
  double mean{};
  double m2{};

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise combination
  void merge(const Moments& other) {
    if (other.count == 0) {
      return;
    }
    const long long total = count + other.count;
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / static_cast<double>(total);
    m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) /
                         static_cast<double>(total);
    count = total;
  }

  StatReport report(std::uint64_t seed) const {
    StatReport r;
    r.expectation = mean;
    r.samples = count;
    r.variance = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    r.std_error = count > 0 ? std::sqrt(r.variance / static_cast<double>(count)) : 0.0;
    r.seed = seed;
    return r;
  }
};

int resolve_threads(int threads) {
  if (threads > 0) {
    return threads;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs job(index) for index in [0, count) on a small worker pool.
template <typename Job>
void parallel_for(int count, int threads, Job job) {
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      job(i);
    }
  };
  const int workers = std::min(resolve_threads(threads), count);
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }
}

double unit_interval(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MonteCarloReport monte_carlo_expectations(const DistributionSpec& dist, long long samples, std::uint64_t seed,
                                          int threads, const VitSpec& vit) {
  dist.validate();
  if (samples < 1) {
    throw std::invalid_argument("monte carlo needs at least one sample");
  }
  std::vector<Moments> ratio_parts(kMonteCarloShards);
  std::vector<Moments> area_parts(kMonteCarloShards);
  parallel_for(kMonteCarloShards, threads, [&](int shard) {
    const long long count = samples / kMonteCarloShards + (shard < samples % kMonteCarloShards ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shard)};
    std::mt19937_64 rng(seq);
    Moments ratio;
    Moments area;
    for (long long k = 0; k < count; ++k) {
      // upper-inclusive: n in (lo, hi]
      const double n = dist.area_hi - (dist.area_hi - dist.area_lo) * unit_interval(rng);
      const double a = dist.aspect_lo + (dist.aspect_hi - dist.aspect_lo) * unit_interval(rng);
      const SliceSample smp = slice_sample(n, a, vit, dist.fold_ratio);
      ratio.add(smp.ratio);
      area.add(smp.area);
    }
    ratio_parts[shard] = ratio;
    area_parts[shard] = area;
  });
  Moments ratio;
  Moments area;
  for (int s = 0; s < kMonteCarloShards; ++s) {
    ratio.merge(ratio_parts[s]);
    area.merge(area_parts[s]);
  }
  return {ratio.report(seed), area.report(seed)};
}

namespace {

struct GridMoments {
  double ratio_sum{}, ratio_sq{}, area_sum{}, area_sq{};
};

GridMoments midpoint_grid(const DistributionSpec& dist, int cells_area, int cells_aspect, int threads,
                          const VitSpec& vit) {
  std::vector<GridMoments> rows(static_cast<std::size_t>(cells_area));
  const double dn = (dist.area_hi - dist.area_lo) / cells_area;
  const double da = (dist.aspect_hi - dist.aspect_lo) / cells_aspect;
  parallel_for(cells_area, threads, [&](int i) {
    GridMoments g;
    const double n = dist.area_lo + (i + 0.5) * dn;
    for (int j = 0; j < cells_aspect; ++j) {
      const double a = dist.aspect_lo + (j + 0.5) * da;
      const SliceSample smp = slice_sample(n, a, vit, dist.fold_ratio);
      g.ratio_sum += smp.ratio;
      g.ratio_sq += smp.ratio * smp.ratio;
      g.area_sum += smp.area;
      g.area_sq += smp.area * smp.area;
    }
    rows[i] = g;
  });
  GridMoments total;
  for (const auto& g : rows) {
    total.ratio_sum += g.ratio_sum;
    total.ratio_sq += g.ratio_sq;
    total.area_sum += g.area_sum;
    total.area_sq += g.area_sq;
  }
  const double cells = static_cast<double>(cells_area) * cells_aspect;
  total.ratio_sum /= cells;
  total.ratio_sq /= cells;
  total.area_sum /= cells;
  total.area_sq /= cells;
  return total;
}

}  // namespace

QuadratureReport midpoint_expectations(const DistributionSpec& dist, int cells_area, int cells_aspect, int threads,
                                       const VitSpec& vit) {
  dist.validate();
  if (cells_area < 2 || cells_aspect < 2) {
    throw std::invalid_argument("quadrature needs at least 2 cells per axis");
  }
  const GridMoments fine = midpoint_grid(dist, cells_area, cells_aspect, threads, vit);
  const GridMoments coarse = midpoint_grid(dist, cells_area / 2, cells_aspect / 2, threads, vit);
  QuadratureReport out;
  out.ratio_mean = fine.ratio_sum;
  out.ratio_variance = fine.ratio_sq - fine.ratio_sum * fine.ratio_sum;
  out.area_mean = fine.area_sum;
  out.area_variance = fine.area_sq - fine.area_sum * fine.area_sum;
  out.ratio_mean_error = std::abs(fine.ratio_sum - coarse.ratio_sum);
  out.area_mean_error = std::abs(fine.area_sum - coarse.area_sum);
  out.cells = static_cast<long long>(cells_area) * cells_aspect;
  return out;
}

bool ProofsReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ProofCheck& c) { return c.pass; });
}

namespace {

ProofCheck within(std::string name, double expected, double observed, double tolerance, std::string assumption) {
  return {std::move(name), expected, observed, tolerance, std::abs(observed - expected) <= tolerance,
          std::move(assumption)};
}

}  // namespace

ProofsReport verify_proofs(long long samples, std::uint64_t seed, int threads) {
  ProofsReport report;
  const std::string enumeration = "all factorizations of N-1, N, N+1 for N <= 20";

  const RatioBound bound = enumerate_ratio_bound(20);
  report.checks.push_back(
      {"ratio_bound_worst_gap", 2.0 * std::log(2.0), bound.worst_gap, 0.0, bound.holds, enumeration + ", gap <= 2 ln 2"});

  const std::string sweep_domain = "1000 x 1000 grid, n in (1, 20], a log-spaced in [1/6, 6]";
  const SweepReport sweep = sweep_slice_bounds(1000);
  report.checks.push_back(within("sweep_max_slice_area", 1.5, sweep.max_area, 0.01, sweep_domain));
  report.checks.push_back(within("sweep_min_slice_area", 0.33, sweep.min_area, 0.01, sweep_domain));
  // the bounds are attained exactly at aspect 6 and 1/6; allow rounding in sqrt/log
  constexpr double kRounding = 1e-12;
  report.checks.push_back({"sweep_min_slice_ratio", 0.5, sweep.min_ratio, kRounding,
                           sweep.min_ratio >= 0.5 - kRounding, sweep_domain});
  report.checks.push_back({"sweep_max_slice_ratio", 2.0, sweep.max_ratio, kRounding,
                           sweep.max_ratio <= 2.0 + kRounding, sweep_domain});

  const auto def = DistributionSpec::default_spec();
  const auto alt = DistributionSpec::alternate_spec();
  report.default_mc = monte_carlo_expectations(def, samples, seed, threads);
  report.alternate_mc = monte_carlo_expectations(alt, samples, seed, threads);
  report.literal_mc = monte_carlo_expectations(DistributionSpec::literal_spec(), samples, seed, threads);

  report.checks.push_back(within("default_ratio_mean", 1.258, report.default_mc.ratio.expectation, 0.02, def.describe()));
  report.checks.push_back(
      within("default_ratio_variance", 0.048, report.default_mc.ratio.variance, 0.01, def.describe()));
  report.checks.push_back(within("default_area_mean", 1.057, report.default_mc.area.expectation, 0.02, def.describe()));
  report.checks.push_back(within("default_area_variance", 0.016, report.default_mc.area.variance, 0.01, def.describe()));
  report.checks.push_back(
      within("alternate_ratio_mean", 1.147, report.alternate_mc.ratio.expectation, 0.02, alt.describe()));
  report.checks.push_back(
      within("alternate_ratio_variance", 0.011, report.alternate_mc.ratio.variance, 0.01, alt.describe()));

  const QuadratureReport quad = midpoint_expectations(def, 2014, 2000, threads);
  const double ratio_tol = 3.0 * std::hypot(report.default_mc.ratio.std_error, quad.ratio_mean_error);
  const double area_tol = 3.0 * std::hypot(report.default_mc.area.std_error, quad.area_mean_error);
  const std::string quad_note = "midpoint rule, 2014 x 2000 cells; " + def.describe();
  report.checks.push_back(
      within("quadrature_ratio_mean", quad.ratio_mean, report.default_mc.ratio.expectation, ratio_tol, quad_note));
  report.checks.push_back(
      within("quadrature_area_mean", quad.area_mean, report.default_mc.area.expectation, area_tol, quad_note));
  return report;
}

nlohmann::json to_json(const StatReport& r) {
  return {{"expectation", r.expectation},
          {"variance", r.variance},
          {"samples", r.samples},
          {"std_error", r.std_error},
          {"seed", r.seed}};
}

nlohmann::json to_json(const ProofsReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"expected", c.expected},
                      {"observed", c.observed},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass},
                      {"assumption", c.assumption}});
  }
  auto mc = [](const MonteCarloReport& m) { return nlohmann::json{{"ratio", to_json(m.ratio)}, {"area", to_json(m.area)}}; };
  return {{"checks", checks},
          {"all_pass", r.all_pass()},
          {"monte_carlo",
           {{"default", mc(r.default_mc)}, {"alternate", mc(r.alternate_mc)}, {"literal_sensitivity", mc(r.literal_mc)}}}};
}

}  // namespace uhd
