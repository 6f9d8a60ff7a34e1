#include "netform/treatments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace netform {

std::uint64_t Bitset::count() const {
  std::uint64_t c = 0;
  for (std::uint64_t w : words_) c += static_cast<std::uint64_t>(std::popcount(w));
  return c;
}

std::string TreatmentStat::display_name() const {
  switch (kind) {
    case StatKind::indirect_count:
      return "indirect_count";
    case StatKind::indirect_flag:
      return "indirect_flag";
    case StatKind::degree:
      return binarize ? "high_degree" : "degree";
    case StatKind::density:
      return binarize ? "high_density" : "density";
  }
  return "?";
}

TreatmentStat parse_treatment(const std::string& token) {
  TreatmentStat s;
  std::string name = token;
  // optional explicit threshold: "high_degree:75"
  if (auto pos = token.find(':'); pos != std::string::npos) {
    name = token.substr(0, pos);
    s.threshold = std::stod(token.substr(pos + 1));
  }
  if (name == "indirect_count") {
    s.kind = StatKind::indirect_count;
  } else if (name == "indirect_flag") {
    s.kind = StatKind::indirect_flag;
  } else if (name == "degree") {
    s.kind = StatKind::degree;
  } else if (name == "high_degree") {
    s.kind = StatKind::degree;
    s.binarize = true;
  } else if (name == "density") {
    s.kind = StatKind::density;
  } else if (name == "high_density") {
    s.kind = StatKind::density;
    s.binarize = true;
  } else {
    throw ValidationError("unknown treatment statistic: " + name);
  }
  if (s.threshold && !s.binarize)
    throw ValidationError("threshold only applies to binarized statistics: " + token);
  return s;
}

std::vector<TreatmentStat> parse_treatment_list(const std::string& csv_tokens) {
  std::vector<TreatmentStat> out;
  std::stringstream ss(csv_tokens);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_treatment(tok));
  }
  if (out.empty()) throw ValidationError("empty treatment list");
  return out;
}

std::vector<std::string> coefficient_names(const std::vector<TreatmentStat>& stats) {
  std::vector<std::string> names{"intercept"};
  for (const auto& s : stats) names.push_back(s.display_name());
  return names;
}

namespace {

// Per-row raw statistic evaluation. Indirect counts use a scatter pass over
// the hire's two-hop neighborhood so a full candidate sweep is O(1) lookups.
struct RowStats {
  std::vector<std::uint32_t> indirect;  // per candidate position
  double degree = 0;
  std::optional<double> density;
};

void compute_indirect_counts(const TemporalNetwork& net, std::uint32_t hire,
                             const std::vector<std::uint32_t>& candidates,
                             const std::vector<std::int32_t>& candidate_pos,
                             std::vector<std::uint32_t>& scratch,
                             std::vector<std::uint32_t>& out) {
  out.assign(candidates.size(), 0);
  const Adjacency& a1 = net.snapshot(1);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t k : a1.neighbors(hire)) {
    for (std::uint32_t j : a1.neighbors(k)) {
      std::int32_t pos = candidate_pos[j];
      if (pos < 0) continue;
      if (scratch[pos] == 0) touched.push_back(static_cast<std::uint32_t>(pos));
      ++scratch[pos];
    }
  }
  for (std::uint32_t pos : touched) {
    out[pos] = scratch[pos];
    scratch[pos] = 0;
  }
}

}  // namespace

OfficePanel treatment_matrix(const TemporalNetwork& net, const std::string& office_id,
                             const std::vector<std::uint32_t>& I,
                             const std::vector<std::uint32_t>& J,
                             const std::vector<TreatmentStat>& stats,
                             const TreatmentOptions& opts) {
  for (const auto& s : stats)
    if (s.binarize && !s.threshold)
      throw ValidationError(
          "treatment_matrix: binarized statistic needs a resolved threshold "
          "(assemble_panels computes sample medians)");
  for (std::uint32_t i : I)
    for (std::uint32_t j : J)
      if (i == j) throw ValidationError("treatment_matrix: I and J must be disjoint");

  OfficePanel p;
  p.office_id = office_id;
  p.hires = I;
  p.candidates = J;
  p.dim = static_cast<std::uint32_t>(1 + stats.size());
  p.treat.assign(static_cast<std::size_t>(p.rows()) * p.cols() * p.dim, 0.0);
  p.outcomes = Bitset(static_cast<std::uint64_t>(p.rows()) * p.cols());
  p.row_flags.assign(p.rows(), RowFlag::ok);
  p.col_filtered.assign(p.cols(), 0);

  bool need_indirect = false, need_degree = false, need_density = false;
  for (const auto& s : stats) {
    need_indirect |= (s.kind == StatKind::indirect_count || s.kind == StatKind::indirect_flag);
    need_degree |= (s.kind == StatKind::degree);
    need_density |= (s.kind == StatKind::density);
  }

  std::vector<std::uint8_t> keep;
  if (!opts.count_hire_ties && (need_degree || need_density)) {
    keep.assign(net.n(), 1);
    for (std::uint32_t u = 0; u < net.n(); ++u)
      if (net.node(u).new_hire) keep[u] = 0;
  }

  std::vector<std::int32_t> candidate_pos(net.n(), -1);
  for (std::uint32_t c = 0; c < J.size(); ++c)
    candidate_pos[J[c]] = static_cast<std::int32_t>(c);
  std::vector<std::uint32_t> scratch(J.size(), 0);
  std::vector<std::uint32_t> indirect;

  for (std::uint32_t r = 0; r < p.rows(); ++r) {
    std::uint32_t hire = I[r];
    if (need_indirect)
      compute_indirect_counts(net, hire, J, candidate_pos, scratch, indirect);

    double deg = 0;
    std::optional<double> dens;
    if (need_degree)
      deg = opts.count_hire_ties ? net.degree(hire, 1) : net.degree_filtered(hire, keep);
    if (need_density) {
      dens = opts.count_hire_ties ? net.local_density(hire)
                                  : net.local_density_filtered(hire, keep);
      if (!dens) p.row_flags[r] = RowFlag::density_undefined;
    }

    for (std::uint32_t c = 0; c < p.cols(); ++c) {
      double* v = p.value(r, c);
      v[0] = 1.0;  // intercept is always the first coordinate
      for (std::size_t s = 0; s < stats.size(); ++s) {
        double raw = 0;
        switch (stats[s].kind) {
          case StatKind::indirect_count:
            raw = static_cast<double>(indirect[c]);
            break;
          case StatKind::indirect_flag:
            raw = indirect[c] > 0 ? 1.0 : 0.0;
            break;
          case StatKind::degree:
            raw = deg;
            break;
          case StatKind::density:
            raw = dens.value_or(0.0);
            break;
        }
        // strict "greater than threshold" binarization
        v[1 + s] = stats[s].binarize ? (raw > *stats[s].threshold ? 1.0 : 0.0) : raw;
      }
      p.outcomes.set(static_cast<std::uint64_t>(c) * p.rows() + r,
                     net.has_edge(hire, J[c], 2));
    }
  }
  return p;
}

PanelSet assemble_panels(const TemporalNetwork& net, const DesignPlan& plan,
                         const std::vector<TreatmentStat>& stats,
                         const TreatmentOptions& opts) {
  plan.validate();
  PanelSet out;
  out.stats = stats;

  // First pass with raw (unbinarized) values so medians can be taken over the
  // pre-drop pair sample; binarization is applied in place afterwards.
  std::vector<TreatmentStat> raw_spec = stats;
  for (auto& s : raw_spec) {
    s.binarize = false;
    s.threshold.reset();
  }
  out.panels.reserve(plan.offices.size());
  for (const auto& office : plan.offices)
    out.panels.push_back(
        treatment_matrix(net, office.office_id, office.I, office.J, raw_spec, opts));

  for (std::size_t s = 0; s < stats.size(); ++s) {
    if (!out.stats[s].binarize) continue;
    if (!out.stats[s].threshold) {
      std::vector<double> values;
      for (const auto& p : out.panels) {
        values.reserve(values.size() + p.pair_count());
        for (std::uint32_t c = 0; c < p.cols(); ++c)
          for (std::uint32_t r = 0; r < p.rows(); ++r)
            values.push_back(p.value(r, c)[1 + s]);
      }
      if (values.empty()) throw ValidationError("no pairs to compute median threshold");
      std::size_t mid = values.size() / 2;
      std::nth_element(values.begin(), values.begin() + mid, values.end());
      double med = values[mid];
      if (values.size() % 2 == 0) {
        double lo = *std::max_element(values.begin(), values.begin() + mid);
        med = 0.5 * (lo + med);
      }
      out.stats[s].threshold = med;
    }
    // strict "greater than threshold"
    double tau = *out.stats[s].threshold;
    for (auto& p : out.panels)
      for (std::uint32_t c = 0; c < p.cols(); ++c)
        for (std::uint32_t r = 0; r < p.rows(); ++r) {
          double* v = p.value(r, c);
          v[1 + s] = v[1 + s] > tau ? 1.0 : 0.0;
        }
  }
  out.coefficient_names = coefficient_names(out.stats);
  return out;
}

void apply_placebo_outcome(std::vector<OfficePanel>& panels, const TemporalNetwork& net,
                           const std::string& covariate, std::uint64_t* missing_count) {
  std::uint64_t missing = 0;
  bool any_contrast = false;
  for (auto& p : panels) {
    double first_seen = -1;
    bool office_contrast = false;
    for (std::uint32_t r = 0; r < p.rows(); ++r) {
      const auto& covs = net.node(p.hires[r]).covariates;
      auto it = covs.find(covariate);
      if (it == covs.end()) {
        if (p.row_flags[r] == RowFlag::ok) p.row_flags[r] = RowFlag::missing_covariate;
        ++missing;
        continue;
      }
      double c = it->second;
      if (c != 0.0 && c != 1.0)
        throw ValidationError("placebo covariate '" + covariate +
                              "' must be binary 0/1 (outcomes are stored as bits)");
      if (first_seen < 0)
        first_seen = c;
      else if (c != first_seen)
        office_contrast = true;
      for (std::uint32_t col = 0; col < p.cols(); ++col)
        p.outcomes.set(static_cast<std::uint64_t>(col) * p.rows() + r, c != 0.0);
    }
    any_contrast |= office_contrast;
  }
  if (!any_contrast)
    throw ValidationError("placebo covariate '" + covariate +
                          "' is constant within every office: no identifying contrast");
  if (missing_count) *missing_count = missing;
}

}  // namespace netform
