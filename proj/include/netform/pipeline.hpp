#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "netform/csv.hpp"
#include "netform/report.hpp"
#include "netform/synth.hpp"

namespace netform {

// Full configuration of one estimation run (CSV inputs or a world file).
struct RunConfig {
  std::string nodes_path, edges1_path, edges2_path;
  std::string world_path;  // alternative input: replayable world JSON

  std::string treatments = "indirect_flag";
  SampleMode mode = SampleMode::late;
  bool enumerate = false;
  std::uint64_t permutations = 10000;
  std::uint64_t enum_cap = kDefaultEnumerationCap;
  std::uint64_t seed = 1;
  double level = 0.95;
  std::string out_base;     // empty = no files written
  std::string format = "csv";  // csv | json
  std::string filter_i, filter_j;  // covariate predicates, comma-separated
  std::string placebo;             // covariate name; empty = tie formation
  std::string null_shift;          // "<coef>=<delta>" constant-effect null
  unsigned threads = 0;
  bool count_hire_ties = true;
  bool write_histograms = true;
  // Bonferroni family size for the report's significance cutoffs (0 = off).
  std::uint32_t bonferroni = 0;

  std::string echo_json() const;
};

// Predicate strings: comma-separated conditions "name OP value" with
// OP in {=, !=, <, <=, >, >=}; "office" and "new_hire" address roster fields,
// anything else a covariate (rows missing it fail the predicate).
NodePredicate parse_predicate(const std::string& expr, const TemporalNetwork& net);

EstimateReport run_estimate(const RunConfig& config, const TemporalNetwork& net,
                            const DesignPlan& plan);
EstimateReport run_estimate(const RunConfig& config);

struct SimulateConfig {
  WorldConfig world;
  EstimatorKind kind = EstimatorKind::within;
  bool oracle = true;          // enumerate the group; error above cap unless...
  bool monte_carlo = false;    // ...this fallback is set
  std::uint64_t permutations = 10000;
  std::uint64_t enum_cap = kDefaultEnumerationCap;
  std::string out_world;       // world JSON path
  std::string out_report;      // oracle/summary JSON path
  std::string out_csv_base;    // optional data export for the estimate command
};

struct SimulateResult {
  SyntheticWorld world;
  OracleReport oracle;
  bool oracle_ran = false;
};

SimulateResult run_simulate(const SimulateConfig& config);

}  // namespace netform
