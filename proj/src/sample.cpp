#include "netform/sample.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace netform {

const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::column_no_full_support: return "column_no_full_support";
    case DropReason::column_singular_gram: return "column_singular_gram";
    case DropReason::column_filtered: return "column_filtered";
    case DropReason::row_density_undefined: return "row_density_undefined";
    case DropReason::row_missing_covariate: return "row_missing_covariate";
    case DropReason::row_filtered: return "row_filtered";
    case DropReason::office_too_few_hires: return "office_too_few_hires";
    case DropReason::office_no_columns: return "office_no_columns";
    case DropReason::office_no_variation: return "office_no_variation";
  }
  return "?";
}

double ColumnProbTable::prob_of(const std::vector<std::int64_t>& key) const {
  for (const auto& [k, p] : entries)
    if (k == key) return p;
  return 0.0;
}

std::vector<const double*> OfficeSample::column_multiset(std::uint32_t col) const {
  std::vector<const double*> out;
  out.reserve(rows());
  for (std::uint32_t r = 0; r < rows(); ++r) out.push_back(value(r, col));
  return out;
}

std::uint64_t EstimationSample::dropped_pairs() const {
  std::uint64_t d = 0;
  for (const auto& rec : drops) d += rec.pairs;
  return d;
}

std::uint32_t EstimationSample::total_hires() const {
  std::uint32_t m = 0;
  for (const auto& o : offices) m += o.rows();
  return m;
}

namespace {

std::vector<std::int64_t> value_key(const double* v, std::uint32_t dim) {
  std::vector<std::int64_t> key(dim);
  for (std::uint32_t c = 0; c < dim; ++c) {
    double r = std::nearbyint(v[c]);
    if (std::abs(v[c] - r) > 1e-9)
      throw ValidationError(
          "continuous treatment values are not exact-match comparable; "
          "use LATE mode (within-regression) for this specification");
    key[c] = static_cast<std::int64_t>(r);
  }
  return key;
}

RowFlag drop_flag_or_ok(RowFlag f) { return f; }

DropReason row_reason(RowFlag f) {
  switch (f) {
    case RowFlag::density_undefined: return DropReason::row_density_undefined;
    case RowFlag::missing_covariate: return DropReason::row_missing_covariate;
    case RowFlag::filtered: return DropReason::row_filtered;
    case RowFlag::ok: break;
  }
  throw ValidationError("internal: row flag has no drop reason");
}

}  // namespace

OfficeProbabilities assignment_probabilities(const OfficePanel& panel) {
  OfficeProbabilities out;
  std::uint32_t m = panel.rows();
  if (m == 0) throw ValidationError("assignment_probabilities: empty column");
  out.tables.resize(panel.cols());
  out.P.assign(static_cast<std::size_t>(panel.cols()) * m, 0.0);
  for (std::uint32_t c = 0; c < panel.cols(); ++c) {
    std::map<std::vector<std::int64_t>, std::uint32_t> counts;
    for (std::uint32_t r = 0; r < m; ++r)
      ++counts[value_key(panel.value(r, c), panel.dim)];
    auto& table = out.tables[c];
    table.entries.reserve(counts.size());
    for (const auto& [k, cnt] : counts)
      table.entries.emplace_back(k, static_cast<double>(cnt) / m);
    for (std::uint32_t r = 0; r < m; ++r) {
      auto key = value_key(panel.value(r, c), panel.dim);
      out.P[static_cast<std::size_t>(c) * m + r] =
          static_cast<double>(counts[key]) / m;
    }
  }
  return out;
}

EstimationSample build_sample(std::shared_ptr<const std::vector<OfficePanel>> panels,
                              SampleMode mode, SampleOptions opts) {
  EstimationSample sample;
  sample.mode = mode;
  sample.opts = opts;
  sample.source = panels;

  for (std::uint32_t pi = 0; pi < panels->size(); ++pi) {
    const OfficePanel& panel = (*panels)[pi];
    sample.input_pairs += panel.pair_count();

    // Row exclusions first: flagged rows leave the office's randomization
    // set, and the subgroup on the remaining hires is re-derived implicitly.
    std::vector<std::uint32_t> rows_kept;
    for (std::uint32_t r = 0; r < panel.rows(); ++r) {
      if (panel.row_flags[r] == RowFlag::ok) {
        rows_kept.push_back(r);
      } else {
        sample.drops.push_back({panel.office_id, DropScope::row, panel.hires[r],
                                row_reason(drop_flag_or_ok(panel.row_flags[r])),
                                panel.cols()});
      }
    }
    std::vector<std::uint32_t> cols_pool;
    for (std::uint32_t c = 0; c < panel.cols(); ++c) {
      if (panel.col_filtered[c]) {
        sample.drops.push_back({panel.office_id, DropScope::column,
                                panel.candidates[c], DropReason::column_filtered,
                                rows_kept.size()});
      } else {
        cols_pool.push_back(c);
      }
    }

    std::uint32_t m = static_cast<std::uint32_t>(rows_kept.size());
    if (m < 2) {
      // A singleton (or empty) hire set has a trivial permutation group and
      // no identifying variation.
      sample.drops.push_back({panel.office_id, DropScope::office, 0,
                              DropReason::office_too_few_hires,
                              static_cast<std::uint64_t>(m) * cols_pool.size()});
      continue;
    }

    std::vector<std::uint32_t> cols_kept;
    std::vector<std::vector<double>> office_support;

    if (mode == SampleMode::ipw) {
      // Office-level target support: union of distinct values over columns.
      std::map<std::vector<std::int64_t>, std::vector<double>> target;
      std::vector<std::vector<std::vector<std::int64_t>>> col_keys(cols_pool.size());
      for (std::size_t ci = 0; ci < cols_pool.size(); ++ci) {
        std::uint32_t c = cols_pool[ci];
        col_keys[ci].reserve(m);
        for (std::uint32_t r : rows_kept) {
          const double* v = panel.value(r, c);
          auto key = value_key(v, panel.dim);
          target.emplace(key, std::vector<double>(v, v + panel.dim));
          col_keys[ci].push_back(std::move(key));
        }
      }
      // Full-support rule: every retained column attains every target value.
      for (std::size_t ci = 0; ci < cols_pool.size(); ++ci) {
        std::map<std::vector<std::int64_t>, bool> seen;
        for (const auto& k : col_keys[ci]) seen[k] = true;
        if (seen.size() == target.size()) {
          cols_kept.push_back(cols_pool[ci]);
        } else {
          sample.drops.push_back({panel.office_id, DropScope::column,
                                  panel.candidates[cols_pool[ci]],
                                  DropReason::column_no_full_support, m});
        }
      }
      for (const auto& [k, v] : target) office_support.push_back(v);

      // The IPW normal equations need the support Gram to be invertible;
      // a degenerate support (e.g. constant treatment) identifies nothing.
      std::vector<double> gram(static_cast<std::size_t>(panel.dim) * panel.dim, 0.0);
      for (const auto& v : office_support) add_outer(gram, v.data(), panel.dim);
      SymEigen f = SymEigen::compute(gram.data(), static_cast<int>(panel.dim));
      if (!f.full_rank(opts.rank_tol)) {
        sample.drops.push_back({panel.office_id, DropScope::office, 0,
                                DropReason::office_no_variation,
                                static_cast<std::uint64_t>(m) * cols_kept.size()});
        continue;
      }
    } else {
      // LATE: retain columns whose realized-multiset Gram is invertible.
      std::vector<double> gram(static_cast<std::size_t>(panel.dim) * panel.dim);
      for (std::uint32_t c : cols_pool) {
        std::fill(gram.begin(), gram.end(), 0.0);
        for (std::uint32_t r : rows_kept)
          add_outer(gram, panel.value(r, c), panel.dim);
        SymEigen f = SymEigen::compute(gram.data(), static_cast<int>(panel.dim));
        if (f.full_rank(opts.rank_tol)) {
          cols_kept.push_back(c);
        } else {
          sample.drops.push_back({panel.office_id, DropScope::column,
                                  panel.candidates[c],
                                  DropReason::column_singular_gram, m});
        }
      }
    }

    if (cols_kept.empty()) {
      sample.drops.push_back(
          {panel.office_id, DropScope::office, 0, DropReason::office_no_columns, 0});
      continue;
    }

    // Materialize the compact office sample.
    OfficeSample os;
    os.office_id = panel.office_id;
    os.plan_index = pi;
    os.dim = panel.dim;
    os.hire_rows = rows_kept;
    for (std::uint32_t r : rows_kept) os.hires.push_back(panel.hires[r]);
    for (std::uint32_t c : cols_kept) os.candidates.push_back(panel.candidates[c]);
    os.treat.resize(static_cast<std::size_t>(m) * cols_kept.size() * panel.dim);
    os.outcomes = Bitset(static_cast<std::uint64_t>(m) * cols_kept.size());
    for (std::uint32_t cc = 0; cc < cols_kept.size(); ++cc) {
      std::uint32_t c = cols_kept[cc];
      for (std::uint32_t rr = 0; rr < m; ++rr) {
        std::uint32_t r = rows_kept[rr];
        const double* src = panel.value(r, c);
        std::copy(src, src + panel.dim,
                  os.treat.begin() +
                      (static_cast<std::size_t>(cc) * m + rr) * panel.dim);
        os.outcomes.set(static_cast<std::uint64_t>(cc) * m + rr,
                        panel.outcome(r, c));
      }
    }
    os.support = office_support;

    if (mode == SampleMode::ipw) {
      // Realized weights P_ij = p_j(D_ij), in (0,1] on the validated sample.
      os.weights.assign(static_cast<std::size_t>(m) * cols_kept.size(), 0.0);
      for (std::uint32_t cc = 0; cc < cols_kept.size(); ++cc) {
        std::map<std::vector<std::int64_t>, std::uint32_t> counts;
        for (std::uint32_t rr = 0; rr < m; ++rr)
          ++counts[value_key(os.value(rr, cc), os.dim)];
        for (std::uint32_t rr = 0; rr < m; ++rr) {
          std::uint32_t cnt = counts[value_key(os.value(rr, cc), os.dim)];
          os.weights[static_cast<std::size_t>(cc) * m + rr] =
              static_cast<double>(cnt) / m;
        }
      }
    }

    sample.retained_pairs += os.rows() * static_cast<std::uint64_t>(os.cols());
    sample.offices.push_back(std::move(os));
  }

  if (sample.offices.empty())
    throw ValidationError("no identifying variation: every office was dropped");
  return sample;
}

EstimationSample restrict_sample(const EstimationSample& sample,
                                 const NodePredicate& keep_hire,
                                 const NodePredicate& keep_candidate) {
  if (!sample.source)
    throw ValidationError("restrict_sample: sample has no source panels");
  auto filtered = std::make_shared<std::vector<OfficePanel>>(*sample.source);
  for (auto& panel : *filtered) {
    for (std::uint32_t r = 0; r < panel.rows(); ++r)
      if (panel.row_flags[r] == RowFlag::ok && keep_hire &&
          !keep_hire(panel.hires[r]))
        panel.row_flags[r] = RowFlag::filtered;
    for (std::uint32_t c = 0; c < panel.cols(); ++c)
      if (keep_candidate && !keep_candidate(panel.candidates[c]))
        panel.col_filtered[c] = 1;
  }
  return build_sample(filtered, sample.mode, sample.opts);
}

}  // namespace netform
