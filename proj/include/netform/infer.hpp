#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "netform/design.hpp"
#include "netform/estimate.hpp"

namespace netform {

enum class DrawMode { enumerated, monte_carlo };

struct PermPlan {
  bool enumerate = false;
  std::uint64_t draws = 10000;             // Monte Carlo draw count R
  std::uint64_t cap = kDefaultEnumerationCap;
  std::uint64_t seed = 0;
};

// Permutation statistics for every coefficient at once, one row per draw.
// Enumerated mode iterates the whole group (identity first); Monte Carlo
// mode uses the pure (seed, draw_index) generator, so draws parallelize.
struct PermutationDraws {
  DrawMode mode = DrawMode::enumerated;
  std::uint64_t n = 0;
  std::uint32_t dim = 1;
  std::vector<double> stats;     // [draw][coord]
  std::vector<double> observed;  // identity statistic, same computation path

  double stat(std::uint64_t draw, std::uint32_t coord) const {
    return stats[draw * dim + coord];
  }
  std::vector<double> coordinate_slice(std::uint32_t coord) const;
};

PermutationDraws run_permutation_draws(const AggregateFit& fit,
                                       const EstimationSample& sample,
                                       const PermPlan& plan, unsigned threads = 0);

struct PermutationResult {
  std::uint32_t coordinate = 0;
  double observed = 0.0;
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  std::uint64_t n_draws = 0;  // |group| in enumerated mode, R in Monte Carlo
  DrawMode mode = DrawMode::enumerated;
};

// Right-tail p with ties counting toward the rejection event; Monte Carlo
// p-values use the add-one convention (1 + #exceedances) / (1 + R).
PermutationResult permutation_test(const PermutationDraws& draws, std::uint32_t coordinate);

// 2 * min(p, 1 - p + 1/denom) capped at 1, denom = |group| or R + 1.
double two_sided_p(double p_one_sided, std::uint64_t n_draws, DrawMode mode);

// Between-office variance bound, per coefficient coordinate:
// V = N/(N-1) * sum_o ((m_o/m) est_o - est/N)^2. Requires N >= 2.
std::vector<double> conservative_variance(const AggregateFit& fit);

struct Interval {
  double lo = 0.0, hi = 0.0;
};
Interval confidence_interval(double estimate, double variance, double level);

enum class VarianceMode { enumerated, hoeffding, monte_carlo };

// Variance of the permutation statistic per coordinate. The hoeffding mode
// is the closed form for linear permutation statistics,
//   sum_o (m_o/m)^2 / (m_o - 1) * sum_{i,i'} (a_{ii'} - rowmean - colmean + grand)^2,
// and matches the enumerated variance exactly.
std::vector<double> permutation_variance(const AggregateFit& fit,
                                         const EstimationSample& sample,
                                         VarianceMode mode, const PermPlan& plan = {},
                                         std::vector<std::string>* warnings = nullptr);

// Finite-sample normality bound arithmetic:
//   bound = (C / sigma^3) * sum_o (m_o^2 / m^3) * sum_{i,i'} |table_o[i][i']|^3.
// Reported "up to universal constant" C (default 1).
struct TableRef {
  std::uint32_t rows = 0;
  std::uint32_t dim = 1;
  const double* data = nullptr;  // [i][i'][coord]
};
std::vector<double> berry_esseen_bound(const std::vector<TableRef>& tables,
                                       const std::vector<double>& sigma,
                                       std::uint64_t total_hires, double constant = 1.0);
std::vector<double> berry_esseen_bound(const AggregateFit& fit,
                                       const std::vector<double>& sigma,
                                       double constant = 1.0);

// One bundle of the uncertainty quantities for a fitted aggregate: the
// between-office variance bound with its deviations, the permutation-statistic
// variance, and the normality-bound values.
struct VarianceReport {
  std::uint32_t office_count = 0;
  std::vector<double> vhat;               // per coordinate
  std::vector<double> office_deviations;  // [office][coord], (m_o/m) est_o - est/N
  std::vector<double> stat_variance;      // per coordinate
  std::vector<double> be_bound;           // per coordinate, statistic side
  double be_constant = 1.0;
  std::vector<std::string> warnings;
};

VarianceReport variance_report(const AggregateFit& fit, const EstimationSample& sample,
                               VarianceMode mode = VarianceMode::hoeffding,
                               const PermPlan& plan = {}, double be_constant = 1.0);

// Kolmogorov-Smirnov distance between the draw distribution and the normal
// fitted to its own mean and standard deviation.
double ks_distance_to_fitted_normal(std::vector<double> draws);

void write_histogram_csv(const std::string& path, const std::vector<double>& draws);

}  // namespace netform
