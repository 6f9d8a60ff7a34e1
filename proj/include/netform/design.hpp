#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "netform/core.hpp"

namespace netform {

// One stratum: new hires I (the randomized rows) and candidate ties J (the
// fixed columns). Node values are roster indices into a TemporalNetwork.
struct OfficeDesign {
  std::string office_id;
  std::vector<std::uint32_t> I;
  std::vector<std::uint32_t> J;
};

// The randomization design: independent uniform shuffles of each office's
// hire set, identity on everyone else.
struct DesignPlan {
  std::vector<OfficeDesign> offices;
  std::uint64_t master_seed = 0;

  // Checks I-set disjointness, I/J disjointness per office, and the
  // cross-office exclusion: no office's J may contain another office's hires.
  void validate() const;

  // Group order Prod_o |I_o|!, saturating at `cap`+1 when it overflows.
  std::uint64_t group_order(std::uint64_t cap) const;
};

// A group element, stored per office as a mapping of local row indices:
// rows[o][r] = r' means row r's counterfactual data is office o's row r'.
struct Permutation {
  std::vector<std::vector<std::uint32_t>> rows;

  static Permutation identity(const DesignPlan& plan);
  bool is_identity() const;

  // Composition matching relabeled networks: (A_pi)_rho = A_{pi o rho}.
  Permutation compose(const Permutation& rho) const;
  Permutation inverse() const;

  // Node-level map for TemporalNetwork::apply_permutation.
  std::vector<std::uint32_t> to_node_map(const DesignPlan& plan, std::uint32_t n) const;
};

// Uniform draw from the group as a pure function of (master_seed, draw_index):
// the same inputs always produce the same permutation, so draws can be
// generated in parallel with no shared RNG state.
Permutation sample_permutation(const DesignPlan& plan, std::uint64_t draw_index);

// Same contract for an arbitrary set of office row counts (used after rows
// are dropped or filtered, when the live design differs from the plan).
Permutation sample_rows_permutation(const std::vector<std::uint32_t>& office_rows,
                                    std::uint64_t master_seed, std::uint64_t draw_index);

// Exhaustive enumeration of the group, identity first, each element exactly
// once. Throws CapExceededError when Prod |I_o|! > cap.
class GroupEnumerator {
 public:
  GroupEnumerator(std::vector<std::uint32_t> office_rows, std::uint64_t cap);
  static GroupEnumerator for_plan(const DesignPlan& plan, std::uint64_t cap);

  std::uint64_t size() const { return size_; }
  // Fills `out` with the next element; false once exhausted.
  bool next(Permutation& out);
  void reset();

 private:
  std::vector<std::uint32_t> office_rows_;
  Permutation current_;
  std::uint64_t size_ = 0;
  bool done_ = false;
  bool first_ = true;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1000000;

}  // namespace netform
