#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netform/design.hpp"
#include "netform/linalg.hpp"
#include "netform/sample.hpp"

namespace netform {

enum class EstimatorKind { ipw, within };

// Constant-effect null device: tests H0 "effect equals delta" by regressing
// the shifted outcome Y_ij - delta * D_ij[coef] instead of Y_ij.
struct OutcomeShift {
  std::uint32_t coef = 0;
  double delta = 0.0;
};

// One office's fitted regression plus the (i, i') lookup table that turns a
// permutation into an estimate without refitting: estimate under pi is
// sum_i table[pi(i)][i]. The diagonal reproduces the fit itself.
struct OfficeFit {
  std::string office_id;
  EstimatorKind kind = EstimatorKind::within;
  std::uint32_t rows = 0;
  std::uint32_t dim = 1;
  double weight = 1.0;             // m_o / m, set by aggregate()
  std::vector<double> estimate;    // dim

  bool has_table = false;
  std::vector<double> table;       // [i][i'][coord], size rows*rows*dim

  SymEigen gram;                   // IPW: pooled weighted Gram factorization
  std::vector<SymEigen> col_gram;  // within: per-column Gram factorizations
  std::optional<OutcomeShift> shift;  // recorded so refits match the tables

  const double* table_entry(std::uint32_t i, std::uint32_t i_prime) const {
    return table.data() +
           (static_cast<std::size_t>(i) * rows + i_prime) * dim;
  }
};

struct FitOptions {
  bool store_tables = true;
  // Memory guard on sum_o m_o^2 * dim table entries; above it, tables are
  // skipped and permutation statistics fall back to single-pass refits.
  std::uint64_t table_budget = 800000000ULL;
  std::optional<OutcomeShift> shift;
};

// Inverse-probability-weighted regression for one validated IPW office.
OfficeFit ipw_fit(const EstimationSample& sample, std::uint32_t office_index,
                  const FitOptions& opts = {});

// Per-column within-regression for one validated LATE office.
OfficeFit within_fit(const EstimationSample& sample, std::uint32_t office_index,
                     const FitOptions& opts = {});

// Table-free recomputation of the permuted statistic straight from the
// sample (used when the memory guard disables tables, and as the slow path
// consistency check). perm_rows maps local row -> local row.
std::vector<double> permuted_refit(const EstimationSample& sample,
                                   std::uint32_t office_index, const OfficeFit& fit,
                                   const std::vector<std::uint32_t>& perm_rows);

// sum_i table[pi(i)][i]; requires the table.
std::vector<double> permuted_estimate(const OfficeFit& fit,
                                      const std::vector<std::uint32_t>& perm_rows);

struct AggregateFit {
  EstimatorKind kind = EstimatorKind::within;
  std::uint32_t dim = 1;
  std::vector<OfficeFit> fits;
  std::vector<double> estimate;  // m_o/m - weighted sum of office estimates
  std::uint32_t total_hires = 0;
  std::uint32_t office_count = 0;
  std::vector<std::string> notes;

  std::vector<std::uint32_t> office_rows() const;
};

AggregateFit aggregate(std::vector<OfficeFit> fits);

// Fits every office of the sample (parallel across offices), applies the
// table memory guard, and aggregates.
AggregateFit fit_all(const EstimationSample& sample, EstimatorKind kind,
                     FitOptions opts = {}, unsigned threads = 0);

// Aggregate statistic for one group element: sum_o (m_o/m) * office stat.
std::vector<double> permuted_aggregate(const AggregateFit& fit,
                                       const EstimationSample& sample,
                                       const Permutation& pi);

}  // namespace netform
