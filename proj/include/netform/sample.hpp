#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "netform/linalg.hpp"
#include "netform/treatments.hpp"

namespace netform {

enum class SampleMode { ipw, late };

enum class DropReason : std::uint8_t {
  column_no_full_support,
  column_singular_gram,
  column_filtered,
  row_density_undefined,
  row_missing_covariate,
  row_filtered,
  office_too_few_hires,
  office_no_columns,
  office_no_variation,
};

const char* drop_reason_name(DropReason r);

enum class DropScope : std::uint8_t { row, column, office };

struct DropRecord {
  std::string office_id;
  DropScope scope;
  std::uint32_t node;   // roster index for row/column drops, unused for offices
  DropReason reason;
  std::uint64_t pairs;  // pairs removed by this drop
};

// Column-wise empirical assignment frequencies for integer-valued treatments:
// p_j(d) = #{i : D_ij = d} / |I|. Independent of the row by construction.
struct ColumnProbTable {
  // distinct value keys (rounded coordinates) with probabilities, sorted
  std::vector<std::pair<std::vector<std::int64_t>, double>> entries;

  double prob_of(const std::vector<std::int64_t>& key) const;
};

// Support-validated estimation data for one office.
struct OfficeSample {
  std::string office_id;
  std::uint32_t plan_index = 0;           // position in the source panel list
  std::vector<std::uint32_t> hires;       // retained rows (node indices)
  std::vector<std::uint32_t> hire_rows;   // their row positions in the panel
  std::vector<std::uint32_t> candidates;  // retained columns (node indices)
  std::uint32_t dim = 1;
  std::vector<double> treat;   // compact [col][row][coord]
  Bitset outcomes;             // compact
  std::vector<double> weights; // IPW: realized P_ij, [col][row]; empty for LATE
  std::vector<std::vector<double>> support;  // IPW: distinct values of the office support

  std::uint32_t rows() const { return static_cast<std::uint32_t>(hires.size()); }
  std::uint32_t cols() const { return static_cast<std::uint32_t>(candidates.size()); }
  const double* value(std::uint32_t row, std::uint32_t col) const {
    return treat.data() + (static_cast<std::size_t>(col) * rows() + row) * dim;
  }
  bool outcome(std::uint32_t row, std::uint32_t col) const {
    return outcomes.get(static_cast<std::uint64_t>(col) * rows() + row);
  }
  double weight(std::uint32_t row, std::uint32_t col) const {
    return weights[static_cast<std::size_t>(col) * rows() + row];
  }
  // Realized treatment multiset of a retained column (pointers into treat).
  std::vector<const double*> column_multiset(std::uint32_t col) const;
};

struct SampleOptions {
  double rank_tol = 1e-10;  // relative singular-value ratio for Gram checks
};

struct EstimationSample {
  SampleMode mode = SampleMode::late;
  SampleOptions opts;
  std::vector<OfficeSample> offices;
  std::vector<DropRecord> drops;
  std::uint64_t input_pairs = 0;
  std::uint64_t retained_pairs = 0;
  std::shared_ptr<const std::vector<OfficePanel>> source;  // kept for restriction

  std::uint64_t dropped_pairs() const;
  std::uint32_t total_hires() const;
};

// Applies the support rule (IPW: every retained column attains every value of
// the office support; LATE: per-column Gram numerically invertible), drops
// flagged rows, offices with fewer than two hires, and offices left without
// identifying variation. Every drop is recorded with a reason code. Throws
// ValidationError when nothing survives.
EstimationSample build_sample(std::shared_ptr<const std::vector<OfficePanel>> panels,
                              SampleMode mode, SampleOptions opts = {});

// Column-wise probabilities and the realized weight matrix for one panel
// (integer-valued treatments only; continuous values are an error).
struct OfficeProbabilities {
  std::vector<ColumnProbTable> tables;  // per column
  std::vector<double> P;                // [col][row]
};
OfficeProbabilities assignment_probabilities(const OfficePanel& panel);

// Row/column restriction by pre-determined predicates. Re-derives the
// permutation subgroup on the filtered hire sets and re-runs validation.
using NodePredicate = std::function<bool(std::uint32_t node_index)>;
EstimationSample restrict_sample(const EstimationSample& sample,
                                 const NodePredicate& keep_hire,
                                 const NodePredicate& keep_candidate);

}  // namespace netform
