#pragma once
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netform/core.hpp"
#include "netform/design.hpp"

namespace netform {

enum class StatKind { indirect_count, indirect_flag, degree, density };

// One treatment coordinate. Binarization uses strict "greater than threshold";
// threshold unset means "sample median over the pre-drop pair sample".
struct TreatmentStat {
  StatKind kind = StatKind::indirect_flag;
  bool binarize = false;
  std::optional<double> threshold;

  std::string display_name() const;
};

TreatmentStat parse_treatment(const std::string& token);
std::vector<TreatmentStat> parse_treatment_list(const std::string& csv_tokens);

struct TreatmentOptions {
  // Whether hires' ties to other hires count toward degree/density.
  bool count_hire_ties = true;
};

// Compact per-pair storage for y bits.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::uint64_t n) : n_(n), words_((n + 63) / 64, 0) {}
  void set(std::uint64_t i, bool v) {
    std::uint64_t mask = 1ULL << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  bool get(std::uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  std::uint64_t size() const { return n_; }
  std::uint64_t count() const;

 private:
  std::uint64_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class RowFlag : std::uint8_t {
  ok = 0,
  density_undefined = 1,
  missing_covariate = 2,
  filtered = 3,
};

// Raw estimation input for one office: treatment vectors (leading intercept)
// and binary outcomes over I x J, stored column-major so per-column support
// checks and Gram sums stream contiguously.
struct OfficePanel {
  std::string office_id;
  std::vector<std::uint32_t> hires;       // node indices, roster order
  std::vector<std::uint32_t> candidates;  // node indices
  std::uint32_t dim = 1;                  // intercept + statistics
  std::vector<double> treat;              // [col][row][coord]
  Bitset outcomes;                        // bit (col*rows + row)
  std::vector<RowFlag> row_flags;         // exclusion markers per row
  std::vector<std::uint8_t> col_filtered; // exclusion markers per column

  std::uint32_t rows() const { return static_cast<std::uint32_t>(hires.size()); }
  std::uint32_t cols() const { return static_cast<std::uint32_t>(candidates.size()); }
  const double* value(std::uint32_t row, std::uint32_t col) const {
    return treat.data() + (static_cast<std::size_t>(col) * rows() + row) * dim;
  }
  double* value(std::uint32_t row, std::uint32_t col) {
    return treat.data() + (static_cast<std::size_t>(col) * rows() + row) * dim;
  }
  bool outcome(std::uint32_t row, std::uint32_t col) const {
    return outcomes.get(static_cast<std::uint64_t>(col) * rows() + row);
  }
  std::uint64_t pair_count() const {
    return static_cast<std::uint64_t>(rows()) * cols();
  }
};

struct PanelSet {
  std::vector<OfficePanel> panels;
  std::vector<TreatmentStat> stats;           // with thresholds resolved
  std::vector<std::string> coefficient_names; // "intercept" first
};

// Computes D_ij = (1, stat_1, ..., stat_k) for every office of the plan and
// fills Y_ij = A2_ij. Median thresholds are resolved over the pre-drop pair
// sample across all offices. Rows whose requested density is undefined
// (degree < 2) are flagged for downstream exclusion.
PanelSet assemble_panels(const TemporalNetwork& net, const DesignPlan& plan,
                         const std::vector<TreatmentStat>& stats,
                         const TreatmentOptions& opts = {});

// Single-office entry point mirroring the statistic contract directly; used
// by tests and by assemble_panels.
OfficePanel treatment_matrix(const TemporalNetwork& net, const std::string& office_id,
                             const std::vector<std::uint32_t>& I,
                             const std::vector<std::uint32_t>& J,
                             const std::vector<TreatmentStat>& stats,
                             const TreatmentOptions& opts = {});

std::vector<std::string> coefficient_names(const std::vector<TreatmentStat>& stats);

// Replaces outcomes with a per-hire binary covariate (placebo protocol):
// Y_ij = c_i for every j. Hires missing the covariate are flagged; throws if
// the covariate is non-binary or constant within every office.
void apply_placebo_outcome(std::vector<OfficePanel>& panels, const TemporalNetwork& net,
                           const std::string& covariate,
                           std::uint64_t* missing_count = nullptr);

}  // namespace netform
