#include "netform/design.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "netform/numeric.hpp"

namespace netform {

void DesignPlan::validate() const {
  std::unordered_set<std::uint32_t> all_hires;
  for (const auto& o : offices) {
    if (o.I.empty())
      throw ValidationError("office " + o.office_id + " has no new hires");
    for (std::uint32_t i : o.I) {
      if (!all_hires.insert(i).second)
        throw ValidationError("hire sets overlap across offices at node " +
                              std::to_string(i));
    }
    std::unordered_set<std::uint32_t> js(o.J.begin(), o.J.end());
    for (std::uint32_t i : o.I)
      if (js.count(i))
        throw ValidationError("office " + o.office_id + " has I and J overlapping");
  }
  for (const auto& o : offices)
    for (std::uint32_t j : o.J)
      if (all_hires.count(j))
        throw ValidationError(
            "cross-office exclusion violated: candidate tie " + std::to_string(j) +
            " in office " + o.office_id + " is a new hire elsewhere");
}

std::uint64_t DesignPlan::group_order(std::uint64_t cap) const {
  std::uint64_t order = 1;
  for (const auto& o : offices) {
    for (std::uint64_t k = 2; k <= o.I.size(); ++k) {
      if (order > cap / k) return cap + 1;
      order *= k;
    }
  }
  return order;
}

// ---------------------------------------------------------------------------
// Permutation
// ---------------------------------------------------------------------------

Permutation Permutation::identity(const DesignPlan& plan) {
  Permutation p;
  p.rows.resize(plan.offices.size());
  for (std::size_t o = 0; o < plan.offices.size(); ++o) {
    p.rows[o].resize(plan.offices[o].I.size());
    std::iota(p.rows[o].begin(), p.rows[o].end(), 0u);
  }
  return p;
}

bool Permutation::is_identity() const {
  for (const auto& r : rows)
    for (std::uint32_t i = 0; i < r.size(); ++i)
      if (r[i] != i) return false;
  return true;
}

Permutation Permutation::compose(const Permutation& rho) const {
  if (rows.size() != rho.rows.size())
    throw ValidationError("compose: office count mismatch");
  Permutation out;
  out.rows.resize(rows.size());
  for (std::size_t o = 0; o < rows.size(); ++o) {
    if (rows[o].size() != rho.rows[o].size())
      throw ValidationError("compose: office size mismatch");
    out.rows[o].resize(rows[o].size());
    for (std::uint32_t r = 0; r < rows[o].size(); ++r)
      out.rows[o][r] = rows[o][rho.rows[o][r]];
  }
  return out;
}

Permutation Permutation::inverse() const {
  Permutation out;
  out.rows.resize(rows.size());
  for (std::size_t o = 0; o < rows.size(); ++o) {
    out.rows[o].assign(rows[o].size(), 0);
    for (std::uint32_t r = 0; r < rows[o].size(); ++r) out.rows[o][rows[o][r]] = r;
  }
  return out;
}

std::vector<std::uint32_t> Permutation::to_node_map(const DesignPlan& plan,
                                                    std::uint32_t n) const {
  std::vector<std::uint32_t> pi(n);
  std::iota(pi.begin(), pi.end(), 0u);
  if (rows.size() != plan.offices.size())
    throw ValidationError("to_node_map: permutation does not match plan");
  for (std::size_t o = 0; o < rows.size(); ++o) {
    const auto& I = plan.offices[o].I;
    if (rows[o].size() != I.size())
      throw ValidationError("to_node_map: office size mismatch");
    for (std::uint32_t r = 0; r < I.size(); ++r) pi[I[r]] = I[rows[o][r]];
  }
  return pi;
}

// ---------------------------------------------------------------------------
// Sampling and enumeration
// ---------------------------------------------------------------------------

Permutation sample_rows_permutation(const std::vector<std::uint32_t>& office_rows,
                                    std::uint64_t master_seed,
                                    std::uint64_t draw_index) {
  Permutation p;
  p.rows.resize(office_rows.size());
  for (std::size_t o = 0; o < office_rows.size(); ++o) {
    p.rows[o].resize(office_rows[o]);
    std::iota(p.rows[o].begin(), p.rows[o].end(), 0u);
    RngStream rng(hash_mix(master_seed, draw_index, static_cast<std::uint64_t>(o),
                           0x5e7a0f5du));
    rng.shuffle(p.rows[o]);
  }
  return p;
}

Permutation sample_permutation(const DesignPlan& plan, std::uint64_t draw_index) {
  std::vector<std::uint32_t> sizes;
  sizes.reserve(plan.offices.size());
  for (const auto& o : plan.offices)
    sizes.push_back(static_cast<std::uint32_t>(o.I.size()));
  return sample_rows_permutation(sizes, plan.master_seed, draw_index);
}

GroupEnumerator::GroupEnumerator(std::vector<std::uint32_t> office_rows,
                                 std::uint64_t cap)
    : office_rows_(std::move(office_rows)) {
  size_ = 1;
  for (std::uint32_t m : office_rows_) {
    for (std::uint64_t k = 2; k <= m; ++k) {
      if (size_ > cap / k)
        throw CapExceededError(
            "permutation group order exceeds enumeration cap (" +
            std::to_string(cap) + "); use Monte Carlo mode");
      size_ *= k;
    }
  }
  reset();
}

GroupEnumerator GroupEnumerator::for_plan(const DesignPlan& plan, std::uint64_t cap) {
  std::vector<std::uint32_t> sizes;
  sizes.reserve(plan.offices.size());
  for (const auto& o : plan.offices)
    sizes.push_back(static_cast<std::uint32_t>(o.I.size()));
  return GroupEnumerator(std::move(sizes), cap);
}

void GroupEnumerator::reset() {
  current_.rows.assign(office_rows_.size(), {});
  for (std::size_t o = 0; o < office_rows_.size(); ++o) {
    current_.rows[o].resize(office_rows_[o]);
    std::iota(current_.rows[o].begin(), current_.rows[o].end(), 0u);
  }
  done_ = false;
  first_ = true;
}

bool GroupEnumerator::next(Permutation& out) {
  if (done_) return false;
  if (first_) {
    first_ = false;
    out = current_;
    return true;
  }
  // Mixed-radix advance: lexicographic next_permutation per office, carrying
  // into the next office on wrap-around.
  for (std::size_t o = 0; o < current_.rows.size(); ++o) {
    if (std::next_permutation(current_.rows[o].begin(), current_.rows[o].end())) {
      out = current_;
      return true;
    }
    // wrapped back to identity for office o; carry on
  }
  done_ = true;
  return false;
}

}  // namespace netform
