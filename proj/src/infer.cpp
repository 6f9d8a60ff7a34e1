#include "netform/infer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "netform/numeric.hpp"

namespace netform {

std::vector<double> PermutationDraws::coordinate_slice(std::uint32_t coord) const {
  std::vector<double> out(n);
  for (std::uint64_t r = 0; r < n; ++r) out[r] = stats[r * dim + coord];
  return out;
}

PermutationDraws run_permutation_draws(const AggregateFit& fit,
                                       const EstimationSample& sample,
                                       const PermPlan& plan, unsigned threads) {
  PermutationDraws out;
  out.dim = fit.dim;

  Permutation identity;
  identity.rows.resize(fit.fits.size());
  for (std::size_t o = 0; o < fit.fits.size(); ++o) {
    identity.rows[o].resize(fit.fits[o].rows);
    for (std::uint32_t r = 0; r < fit.fits[o].rows; ++r) identity.rows[o][r] = r;
  }
  out.observed = permuted_aggregate(fit, sample, identity);

  if (plan.enumerate) {
    out.mode = DrawMode::enumerated;
    GroupEnumerator en(fit.office_rows(), plan.cap);
    out.n = en.size();
    out.stats.resize(out.n * fit.dim);
    Permutation pi;
    std::uint64_t idx = 0;
    while (en.next(pi)) {
      std::vector<double> s = permuted_aggregate(fit, sample, pi);
      std::copy(s.begin(), s.end(), out.stats.begin() + idx * fit.dim);
      ++idx;
    }
    return out;
  }

  out.mode = DrawMode::monte_carlo;
  if (plan.draws < 1) throw ValidationError("Monte Carlo mode requires R >= 1");
  out.n = plan.draws;
  out.stats.resize(out.n * fit.dim);
  std::vector<std::uint32_t> rows = fit.office_rows();

  unsigned n_threads = threads ? threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, n_threads);
  auto run_range = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t k = lo; k < hi; ++k) {
      Permutation pi = sample_rows_permutation(rows, plan.seed, k);
      std::vector<double> s = permuted_aggregate(fit, sample, pi);
      std::copy(s.begin(), s.end(), out.stats.begin() + k * fit.dim);
    }
  };
  if (n_threads <= 1 || out.n < 512) {
    run_range(0, out.n);
  } else {
    std::vector<std::thread> pool;
    std::uint64_t chunk = (out.n + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      std::uint64_t lo = t * chunk, hi = std::min<std::uint64_t>(out.n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

double two_sided_p(double p_one_sided, std::uint64_t n_draws, DrawMode mode) {
  double denom = (mode == DrawMode::enumerated)
                     ? static_cast<double>(n_draws)
                     : static_cast<double>(n_draws + 1);
  double other = 1.0 - p_one_sided + 1.0 / denom;
  return std::min(1.0, 2.0 * std::min(p_one_sided, other));
}

PermutationResult permutation_test(const PermutationDraws& draws,
                                   std::uint32_t coordinate) {
  if (coordinate >= draws.dim)
    throw ValidationError("permutation_test: coordinate out of range");
  PermutationResult res;
  res.coordinate = coordinate;
  res.mode = draws.mode;
  res.n_draws = draws.n;
  res.observed = draws.observed[coordinate];

  std::uint64_t exceed = 0, at_most = 0;
  for (std::uint64_t r = 0; r < draws.n; ++r) {
    double s = draws.stat(r, coordinate);
    if (s >= res.observed) ++exceed;
    if (s <= res.observed) ++at_most;
  }

  // The left tail is counted from the draws rather than by complementing the
  // right tail, so ties stay on the conservative side of both events; without
  // ties this reduces to the closed form of two_sided_p exactly.
  double p_left;
  if (draws.mode == DrawMode::enumerated) {
    res.p_one_sided = static_cast<double>(exceed) / static_cast<double>(draws.n);
    p_left = static_cast<double>(at_most) / static_cast<double>(draws.n);
  } else {
    res.p_one_sided = static_cast<double>(1 + exceed) / static_cast<double>(1 + draws.n);
    p_left = static_cast<double>(1 + at_most) / static_cast<double>(1 + draws.n);
  }
  res.p_two_sided = std::min(1.0, 2.0 * std::min(res.p_one_sided, p_left));
  return res;
}

std::vector<double> conservative_variance(const AggregateFit& fit) {
  const std::uint32_t N = fit.office_count;
  if (N < 2)
    throw ValidationError(
        "cannot estimate between-office variance with a single office");
  std::vector<double> v(fit.dim, 0.0);
  for (std::uint32_t k = 0; k < fit.dim; ++k) {
    Kahan acc;
    for (const auto& f : fit.fits) {
      double dev = f.weight * f.estimate[k] - fit.estimate[k] / N;
      acc.add(dev * dev);
    }
    v[k] = static_cast<double>(N) / (N - 1) * acc.value();
  }
  return v;
}

Interval confidence_interval(double estimate, double variance, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ValidationError("confidence level must lie in (0,1)");
  if (variance < 0.0) throw ValidationError("negative variance");
  double z = normal_quantile(0.5 * (1.0 + level));
  double half = z * std::sqrt(variance);
  return {estimate - half, estimate + half};
}

std::vector<double> permutation_variance(const AggregateFit& fit,
                                         const EstimationSample& sample,
                                         VarianceMode mode, const PermPlan& plan,
                                         std::vector<std::string>* warnings) {
  std::vector<double> var(fit.dim, 0.0);

  if (mode == VarianceMode::hoeffding) {
    for (const auto& f : fit.fits) {
      if (f.rows < 2) {
        if (warnings)
          warnings->push_back("office " + f.office_id +
                              " has one hire; it contributes zero variance");
        continue;
      }
      if (!f.has_table)
        throw ValidationError(
            "hoeffding variance needs the office lookup table; use enumerated "
            "or monte_carlo mode");
      const std::uint32_t m = f.rows;
      for (std::uint32_t k = 0; k < fit.dim; ++k) {
        std::vector<double> rowmean(m, 0.0), colmean(m, 0.0);
        double grand = 0.0;
        for (std::uint32_t i = 0; i < m; ++i)
          for (std::uint32_t ip = 0; ip < m; ++ip) {
            double a = f.table_entry(i, ip)[k];
            rowmean[i] += a;
            colmean[ip] += a;
            grand += a;
          }
        for (std::uint32_t i = 0; i < m; ++i) rowmean[i] /= m;
        for (std::uint32_t ip = 0; ip < m; ++ip) colmean[ip] /= m;
        grand /= static_cast<double>(m) * m;
        Kahan ss;
        for (std::uint32_t i = 0; i < m; ++i)
          for (std::uint32_t ip = 0; ip < m; ++ip) {
            double c = f.table_entry(i, ip)[k] - rowmean[i] - colmean[ip] + grand;
            ss.add(c * c);
          }
        var[k] += f.weight * f.weight * ss.value() / (m - 1);
      }
    }
    return var;
  }

  PermPlan p = plan;
  p.enumerate = (mode == VarianceMode::enumerated);
  PermutationDraws draws = run_permutation_draws(fit, sample, p);
  for (std::uint32_t k = 0; k < fit.dim; ++k) {
    Kahan mean_acc;
    for (std::uint64_t r = 0; r < draws.n; ++r) mean_acc.add(draws.stat(r, k));
    double mean = mean_acc.value() / static_cast<double>(draws.n);
    Kahan ss;
    for (std::uint64_t r = 0; r < draws.n; ++r) {
      double c = draws.stat(r, k) - mean;
      ss.add(c * c);
    }
    // Exact population variance over the group; sample variance for Monte Carlo.
    double denom = (mode == VarianceMode::enumerated)
                       ? static_cast<double>(draws.n)
                       : static_cast<double>(draws.n - 1);
    var[k] = ss.value() / denom;
  }
  return var;
}

std::vector<double> berry_esseen_bound(const std::vector<TableRef>& tables,
                                       const std::vector<double>& sigma,
                                       std::uint64_t total_hires, double constant) {
  if (tables.empty()) throw ValidationError("berry_esseen_bound: no tables");
  const std::uint32_t dim = tables.front().dim;
  std::vector<double> bound(dim, 0.0);
  const double m3 = std::pow(static_cast<double>(total_hires), 3.0);
  for (std::uint32_t k = 0; k < dim; ++k) {
    if (!(sigma[k] > 0.0))
      throw ValidationError(
          "berry_esseen_bound: degenerate permutation distribution (sigma = 0)");
    Kahan acc;
    for (const auto& t : tables) {
      double cube_sum = 0.0;
      for (std::uint32_t i = 0; i < t.rows; ++i)
        for (std::uint32_t ip = 0; ip < t.rows; ++ip) {
          double a = t.data[(static_cast<std::size_t>(i) * t.rows + ip) * t.dim + k];
          cube_sum += std::abs(a) * a * a;
        }
      acc.add(static_cast<double>(t.rows) * t.rows / m3 * cube_sum);
    }
    bound[k] = constant / std::pow(sigma[k], 3.0) * acc.value();
  }
  return bound;
}

std::vector<double> berry_esseen_bound(const AggregateFit& fit,
                                       const std::vector<double>& sigma,
                                       double constant) {
  std::vector<TableRef> tables;
  tables.reserve(fit.fits.size());
  for (const auto& f : fit.fits) {
    if (!f.has_table)
      throw ValidationError("berry_esseen_bound: office fit has no table");
    tables.push_back({f.rows, f.dim, f.table.data()});
  }
  return berry_esseen_bound(tables, sigma, fit.total_hires, constant);
}

VarianceReport variance_report(const AggregateFit& fit, const EstimationSample& sample,
                               VarianceMode mode, const PermPlan& plan,
                               double be_constant) {
  VarianceReport rep;
  rep.office_count = fit.office_count;
  rep.be_constant = be_constant;
  rep.vhat = conservative_variance(fit);
  rep.office_deviations.resize(static_cast<std::size_t>(fit.office_count) * fit.dim);
  for (std::uint32_t o = 0; o < fit.office_count; ++o)
    for (std::uint32_t k = 0; k < fit.dim; ++k)
      rep.office_deviations[static_cast<std::size_t>(o) * fit.dim + k] =
          fit.fits[o].weight * fit.fits[o].estimate[k] -
          fit.estimate[k] / fit.office_count;
  rep.stat_variance = permutation_variance(fit, sample, mode, plan, &rep.warnings);
  std::vector<double> sigma(fit.dim);
  bool positive = true;
  for (std::uint32_t k = 0; k < fit.dim; ++k) {
    sigma[k] = std::sqrt(rep.stat_variance[k]);
    positive &= sigma[k] > 0.0;
  }
  if (positive) {
    rep.be_bound = berry_esseen_bound(fit, sigma, be_constant);
  } else {
    rep.warnings.push_back(
        "degenerate permutation distribution: normality bound skipped");
  }
  return rep;
}

double ks_distance_to_fitted_normal(std::vector<double> draws) {
  const std::size_t n = draws.size();
  if (n < 2) throw ValidationError("ks distance needs at least two draws");
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : draws) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0))
    throw ValidationError("ks distance: degenerate draw distribution");
  std::sort(draws.begin(), draws.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = normal_cdf((draws[i] - mean) / sd);
    double hi = static_cast<double>(i + 1) / n - z;
    double lo = z - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

void write_histogram_csv(const std::string& path, const std::vector<double>& draws) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open histogram file: " + path);
  f << "draw_index,statistic\n";
  f.precision(17);
  for (std::size_t i = 0; i < draws.size(); ++i) f << i << "," << draws[i] << "\n";
}

}  // namespace netform
