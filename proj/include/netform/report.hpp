#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netform/infer.hpp"
#include "netform/sample.hpp"

namespace netform {

struct CoefficientReport {
  std::string name;
  double estimate = 0.0;
  std::optional<double> se;  // sqrt of the conservative variance; null if N = 1
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  std::optional<Interval> ci;
  std::string histogram_path;
};

struct DropSummary {
  std::string reason;
  std::uint64_t count = 0;
  std::uint64_t pairs = 0;
};

// Human-readable drop entry; node references use external ids.
struct DropDetail {
  std::string office_id;
  std::string what;
  std::string reason;
  std::uint64_t pairs = 0;
};

// One estimation run, shaped like the effect tables: outcome, sample counts,
// then per-coefficient estimate / (SE) / [p].
struct EstimateReport {
  std::string outcome;
  std::string estimator;  // "ipw" | "within"
  std::string perm_mode;  // "enumerated" | "monte_carlo"
  std::uint64_t n_draws = 0;
  std::uint32_t new_hires = 0;
  std::uint32_t offices = 0;
  std::uint64_t edges = 0;  // retained pairs |E|
  std::uint64_t input_pairs = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::vector<CoefficientReport> coefficients;
  std::vector<DropSummary> drop_log;            // aggregated by reason
  std::vector<DropDetail> drop_detail;          // capped detail listing
  std::vector<std::string> warnings;
  // Bonferroni adjustment across a family of listed tests: one-sided cutoffs
  // (1-level)/2/k and 1 - (1-level)/2/k; 0 tests = adjustment off.
  std::uint32_t bonferroni_tests = 0;
  double bonferroni_lower = 0.0;
  double bonferroni_upper = 1.0;
  std::string config_echo;   // JSON echo of the run configuration
  std::string generated_at;  // excluded from reproducibility comparisons

  std::uint64_t dropped_pairs() const;
};

std::vector<DropSummary> summarize_drops(const std::vector<DropRecord>& drops);

// CSV rendering uses fixed 5-decimal precision (table style); JSON keeps full
// binary precision and round-trips exactly.
std::string render_report_csv(const EstimateReport& report);
std::string render_drops_csv(const EstimateReport& report);
std::string render_report_json(const EstimateReport& report);
EstimateReport parse_report_json(const std::string& text);

std::string format_fixed5(double v);

}  // namespace netform
