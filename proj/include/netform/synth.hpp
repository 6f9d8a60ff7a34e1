#pragma once
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netform/estimate.hpp"
#include "netform/infer.hpp"
#include "netform/sample.hpp"
#include "netform/treatments.hpp"

namespace netform {

// Synthetic-world recipe. Hires are assigned to senior project teams within
// their office; seniors are pre-wired by an Erdos-Renyi layer to create
// indirect-tie variation. Tie surplus follows the threshold rule
//   Y_ij^d = 1(d . delta + eps_ij >= 0),
// with eps_ij = homophily_scale * exp(-|W_i - W_j|) + eta_ij and eta drawn
// once from a counter-based hash (logistic), then frozen.
struct WorldConfig {
  std::vector<std::uint32_t> office_sizes;   // hires per office, each >= 2
  std::uint32_t seniors_per_office = 24;     // pool size (total pool if shared)
  std::uint32_t team_size_min = 3;
  std::uint32_t team_size_max = 3;
  double senior_edge_prob = 0.15;
  bool shared_candidates = false;  // one global senior pool as J for every office
  bool clone_offices = false;      // identical wiring, traits, and shocks per office
  // Deterministic assignment of hire r to team r, with team sizes cycling
  // min..max, so every hire in an office has a distinct degree (the
  // common-support regime where the LATE and SATE estimands coincide).
  bool distinct_teams = false;
  // Trait-homophilous senior wiring strength (0 = plain Erdos-Renyi).
  double homophily_wiring = 0.0;
  // 0 = continuous standard-normal traits; k >= 2 = k well-separated trait
  // clusters (sharpens the homophily confound in demonstration worlds).
  std::uint32_t trait_clusters = 0;
  // With clusters: give every hire of an office the office's own cluster
  // (office index mod k) while seniors stay mixed. Within-office treatment
  // variation is then pure wiring noise, uncorrelated with the confound.
  bool office_cluster_hires = false;

  std::vector<TreatmentStat> treatments{TreatmentStat{StatKind::indirect_flag, false, {}}};
  std::vector<double> delta{-1.0, 0.0};  // structural coefficients, intercept first
  double homophily_scale = 0.0;
  double homophily_placement = 0.0;  // prob a hire is steered to the nearest-trait team

  std::uint64_t seed = 1;
  std::uint32_t max_attempts = 8;
  bool validate_ipw = true;
  bool validate_late = true;

  void validate() const;
};

// A fully known world: realized snapshots plus the potential-outcome function.
struct SyntheticWorld {
  WorldConfig config;
  TemporalNetwork net;
  DesignPlan plan;
  std::uint32_t attempt = 0;  // generation attempt that produced a valid world
  // Hash keys per node; office-local in clone mode so cloned blocks share
  // traits and shocks, global otherwise.
  std::vector<std::uint64_t> node_keys;

  double latent_trait(std::uint32_t node) const;
  double shock(std::uint32_t i, std::uint32_t j) const;
  // Y_ij^d for the treatment vector d (length = 1 + #treatments).
  double potential_outcome(std::uint32_t i, std::uint32_t j, const double* d) const;
  // Sharp null: no non-intercept structural coefficient.
  bool sharp_null() const;
};

SyntheticWorld generate_world(const WorldConfig& config);

// Realized panels (treatments from A1, outcomes from A2).
std::shared_ptr<const std::vector<OfficePanel>> assemble_world_panels(
    const SyntheticWorld& world);

// Counterfactual data under a group element: D row-permuted per office, and
// outcomes re-evaluated through the frozen threshold rule at the permuted
// treatments.
std::vector<OfficePanel> counterfactual_panels(
    const SyntheticWorld& world, const std::vector<OfficePanel>& realized,
    const Permutation& pi);

// Exhaustive-enumeration audit of the estimator against its potential-outcome
// estimand, the variance bound, the normality bounds, and (for sharp-null
// worlds) the p-value validity grid. Every number comes from iterating the
// whole group, no sampling.
struct OracleReport {
  EstimatorKind kind = EstimatorKind::within;
  std::uint32_t dim = 1;
  std::uint64_t group_order = 0;
  std::uint32_t office_count = 0;
  std::uint32_t total_hires = 0;
  std::uint64_t retained_pairs = 0;
  bool sharp_null = false;

  std::vector<double> realized_estimate;   // at the identity permutation
  std::vector<double> enumerated_mean;     // mean of the estimator over the group
  std::vector<double> estimand;            // from potential outcomes
  std::vector<double> estimator_variance;  // exact, over the group
  std::vector<double> stat_variance;       // permutation statistic, outcomes fixed
  std::vector<double> mean_vhat;           // enumerated mean of the variance bound
  std::vector<double> be_bound_estimator;  // from the counterfactual tables (synthetic only)
  std::vector<double> be_bound_statistic;  // from the B/G tables

  std::vector<double> grid_alpha;                        // 0.01 .. 0.99
  std::vector<std::vector<double>> grid_rate_one_sided;  // [coord][alpha]
  std::vector<std::vector<double>> grid_rate_two_sided;  // [coord][alpha]

  std::vector<std::string> notes;
};

OracleReport run_oracle(const SyntheticWorld& world, EstimatorKind kind,
                        std::uint64_t cap = kDefaultEnumerationCap);

// Placebo variant: outcomes replaced by a per-hire binary covariate, which is
// a sharp-null world by construction; reports the validity grid.
OracleReport run_placebo_oracle(const SyntheticWorld& world, const std::string& covariate,
                                EstimatorKind kind,
                                std::uint64_t cap = kDefaultEnumerationCap);

// Counterfactual-table build (the estimator-side lookup), exposed for tests.
std::vector<double> counterfactual_table(const SyntheticWorld& world,
                                         const EstimationSample& sample,
                                         std::uint32_t office_index,
                                         const OfficeFit& fit);

// Versioned JSON round-trip so any implementation can replay the same world.
std::string world_to_json(const SyntheticWorld& world);
SyntheticWorld world_from_json(const std::string& text);
std::string oracle_report_to_json(const OracleReport& report);

}  // namespace netform
