#include "netform/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "netform/numeric.hpp"
#include <json.hpp>

namespace netform {

namespace {

// Hash domain tags.
constexpr std::uint64_t kTagAttempt = 0xA77E;
constexpr std::uint64_t kTagTrait = 0x77A1;
constexpr std::uint64_t kTagShock = 0x5C0C;
constexpr std::uint64_t kTagEr = 0xE4;
constexpr std::uint64_t kTagTeams = 0x7EA5;
constexpr std::uint64_t kTagPlace = 0x81AC;
constexpr std::uint64_t kTagCov = 0xC0F;
constexpr std::uint64_t kTagHireKey = 0x481;
constexpr std::uint64_t kTagSeniorKey = 0x5E1;

struct Layout {
  std::uint32_t n_offices = 0;
  std::uint32_t total_hires = 0;
  std::uint32_t pool_size = 0;
  std::uint32_t n_pools = 0;  // 1 when shared
  std::uint32_t hire_base(const WorldConfig& c, std::uint32_t o) const {
    std::uint32_t b = 0;
    for (std::uint32_t k = 0; k < o; ++k) b += c.office_sizes[k];
    return b;
  }
  std::uint32_t pool_base(std::uint32_t pool) const {
    return total_hires + pool * pool_size;
  }
};

Layout make_layout(const WorldConfig& c) {
  Layout l;
  l.n_offices = static_cast<std::uint32_t>(c.office_sizes.size());
  for (std::uint32_t m : c.office_sizes) l.total_hires += m;
  l.pool_size = c.seniors_per_office;
  l.n_pools = c.shared_candidates ? 1 : l.n_offices;
  return l;
}

std::vector<std::uint64_t> make_node_keys(const WorldConfig& c, const Layout& l) {
  std::vector<std::uint64_t> keys(l.total_hires +
                                  static_cast<std::size_t>(l.n_pools) * l.pool_size);
  std::uint32_t u = 0;
  for (std::uint32_t o = 0; o < l.n_offices; ++o)
    for (std::uint32_t r = 0; r < c.office_sizes[o]; ++r, ++u)
      keys[u] = c.clone_offices ? hash_mix(kTagHireKey, r) : u;
  for (std::uint32_t pool = 0; pool < l.n_pools; ++pool)
    for (std::uint32_t p = 0; p < l.pool_size; ++p, ++u)
      keys[u] = c.clone_offices ? hash_mix(kTagSeniorKey, p) : u;
  return keys;
}

// Erdos-Renyi edges over one senior pool via geometric skip sampling. When
// `wiring` is positive the pair probability is tilted toward similar latent
// traits (per-pair Bernoulli, hash-addressed so clones stay identical).
void sample_pool_edges(std::uint64_t stream_seed, std::uint32_t base,
                       std::uint32_t size, double p, double wiring,
                       const std::function<double(std::uint32_t)>& trait,
                       std::vector<TemporalNetwork::IndexEdge>& out) {
  if (size < 2 || p <= 0.0) return;
  if (wiring > 0.0) {
    for (std::uint32_t a = 0; a < size; ++a)
      for (std::uint32_t b = a + 1; b < size; ++b) {
        double gap = std::abs(trait(base + a) - trait(base + b));
        double p_ab = std::min(1.0, p * (1.0 + wiring) * std::exp(-wiring * gap));
        if (hash_uniform_open(hash_mix(stream_seed, a, b)) < p_ab)
          out.emplace_back(base + a, base + b);
      }
    return;
  }
  std::uint64_t n_pairs = static_cast<std::uint64_t>(size) * (size - 1) / 2;
  RngStream rng(stream_seed);
  if (p >= 1.0) {
    for (std::uint32_t a = 0; a < size; ++a)
      for (std::uint32_t b = a + 1; b < size; ++b)
        out.emplace_back(base + a, base + b);
    return;
  }
  // Row offsets for mapping a linear pair index back to (a, b), a < b.
  std::vector<std::uint64_t> offsets(size, 0);
  for (std::uint32_t a = 1; a < size; ++a)
    offsets[a] = offsets[a - 1] + (size - a);
  double log1mp = std::log1p(-p);
  std::uint64_t t = 0;
  bool first = true;
  for (;;) {
    double u = rng.uniform01();
    std::uint64_t skip =
        static_cast<std::uint64_t>(std::floor(std::log1p(-u) / log1mp));
    t += first ? skip : skip + 1;
    first = false;
    if (t >= n_pairs) break;
    auto it = std::upper_bound(offsets.begin(), offsets.end(), t);
    std::uint32_t a = static_cast<std::uint32_t>(it - offsets.begin() - 1);
    std::uint32_t b = a + 1 + static_cast<std::uint32_t>(t - offsets[a]);
    out.emplace_back(base + a, base + b);
  }
}

double dot(const double* a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void WorldConfig::validate() const {
  if (office_sizes.empty()) throw ValidationError("world needs at least one office");
  for (std::uint32_t m : office_sizes)
    if (m < 2) throw ValidationError("office sizes must be >= 2");
  if (seniors_per_office < 2)
    throw ValidationError("senior pool must have at least two members");
  if (team_size_min < 2 || team_size_max < team_size_min ||
      team_size_max > seniors_per_office)
    throw ValidationError("invalid team size range");
  if (treatments.empty()) throw ValidationError("world needs a treatment spec");
  if (delta.size() != treatments.size() + 1)
    throw ValidationError("delta length must be 1 + #treatments");
  for (const auto& s : treatments)
    if (s.binarize && !s.threshold)
      throw ValidationError(
          "synthetic worlds need explicit binarization thresholds (a sample "
          "median would make the structural map ill-defined)");
  if (clone_offices) {
    if (shared_candidates)
      throw ValidationError("clone_offices is incompatible with shared_candidates");
    for (std::uint32_t m : office_sizes)
      if (m != office_sizes.front())
        throw ValidationError("clone_offices requires equal office sizes");
  }
  if (!(homophily_placement >= 0.0 && homophily_placement <= 1.0))
    throw ValidationError("homophily_placement must lie in [0,1]");
  if (homophily_wiring < 0.0)
    throw ValidationError("homophily_wiring must be non-negative");
  if (office_cluster_hires && trait_clusters < 2)
    throw ValidationError("office_cluster_hires needs trait_clusters >= 2");
  if (office_cluster_hires && clone_offices)
    throw ValidationError("office_cluster_hires is incompatible with clone_offices");
  if (distinct_teams) {
    std::uint32_t span = team_size_max - team_size_min + 1;
    std::uint32_t needed = 0;
    for (std::uint32_t m : office_sizes) {
      if (m > span)
        throw ValidationError(
            "distinct_teams needs team_size_max - team_size_min + 1 >= office size");
      needed = std::max(needed, m);
    }
    std::uint32_t sum = 0;
    for (std::uint32_t k = 0; k < needed; ++k) sum += team_size_min + k;
    if (sum > seniors_per_office)
      throw ValidationError("distinct_teams: senior pool too small for the team ladder");
  }
}

double SyntheticWorld::latent_trait(std::uint32_t node) const {
  double u = hash_uniform_open(hash_mix(config.seed, kTagTrait, node_keys[node]));
  if (config.trait_clusters >= 2) {
    if (config.office_cluster_hires) {
      std::uint32_t boundary = 0;
      for (std::uint32_t o = 0; o < config.office_sizes.size(); ++o) {
        boundary += config.office_sizes[o];
        if (node < boundary) return 3.0 * (o % config.trait_clusters);
      }
    }
    return 3.0 * std::floor(u * config.trait_clusters);
  }
  return normal_quantile(u);
}

double SyntheticWorld::shock(std::uint32_t i, std::uint32_t j) const {
  double eta = logistic_quantile(hash_uniform_open(
      hash_mix(config.seed, kTagShock, node_keys[i], node_keys[j])));
  if (config.homophily_scale != 0.0)
    eta += config.homophily_scale *
           std::exp(-std::abs(latent_trait(i) - latent_trait(j)));
  return eta;
}

double SyntheticWorld::potential_outcome(std::uint32_t i, std::uint32_t j,
                                         const double* d) const {
  return dot(d, config.delta) + shock(i, j) >= 0.0 ? 1.0 : 0.0;
}

bool SyntheticWorld::sharp_null() const {
  for (std::size_t k = 1; k < config.delta.size(); ++k)
    if (config.delta[k] != 0.0) return false;
  return true;
}

SyntheticWorld generate_world(const WorldConfig& config) {
  config.validate();
  const Layout layout = make_layout(config);

  std::string last_error;
  for (std::uint32_t attempt = 0; attempt < config.max_attempts; ++attempt) {
    std::uint64_t gen_seed = hash_mix(config.seed, kTagAttempt, attempt);

    // Roster: hires per office, then senior pools.
    std::vector<NodeRecord> roster;
    roster.reserve(layout.total_hires +
                   static_cast<std::size_t>(layout.n_pools) * layout.pool_size);
    std::uint32_t u = 0;
    for (std::uint32_t o = 0; o < layout.n_offices; ++o)
      for (std::uint32_t r = 0; r < config.office_sizes[o]; ++r, ++u) {
        NodeRecord rec;
        rec.id = "h" + std::to_string(o) + "_" + std::to_string(r);
        rec.office = "office" + std::to_string(o);
        rec.new_hire = true;
        rec.covariates["grp_a"] =
            hash_uniform_open(hash_mix(config.seed, kTagCov, 1, u)) < 0.5 ? 1.0 : 0.0;
        rec.covariates["grp_b"] =
            hash_uniform_open(hash_mix(config.seed, kTagCov, 2, u)) < 0.35 ? 1.0 : 0.0;
        roster.push_back(std::move(rec));
      }
    for (std::uint32_t pool = 0; pool < layout.n_pools; ++pool)
      for (std::uint32_t p = 0; p < layout.pool_size; ++p) {
        NodeRecord rec;
        rec.id = "s" + std::to_string(pool) + "_" + std::to_string(p);
        rec.office = config.shared_candidates ? std::string("shared")
                                              : "office" + std::to_string(pool);
        rec.new_hire = false;
        roster.push_back(std::move(rec));
      }

    // Node keys first: traits drive both homophilous wiring and placement.
    std::vector<std::uint64_t> node_keys = make_node_keys(config, layout);
    auto trait = [&](std::uint32_t node) {
      double u = hash_uniform_open(hash_mix(config.seed, kTagTrait, node_keys[node]));
      if (config.trait_clusters >= 2) {
        if (config.office_cluster_hires && node < layout.total_hires) {
          std::uint32_t boundary = 0;
          for (std::uint32_t o = 0; o < config.office_sizes.size(); ++o) {
            boundary += config.office_sizes[o];
            if (node < boundary) return 3.0 * (o % config.trait_clusters);
          }
        }
        return 3.0 * std::floor(u * config.trait_clusters);
      }
      return normal_quantile(u);
    };

    // Snapshot-1 wiring: ER layer among seniors plus hire-to-team edges.
    std::vector<TemporalNetwork::IndexEdge> edges1;
    std::vector<std::vector<std::vector<std::uint32_t>>> pool_teams(layout.n_pools);
    const std::uint32_t size_span = config.team_size_max - config.team_size_min + 1;
    for (std::uint32_t pool = 0; pool < layout.n_pools; ++pool) {
      std::uint64_t pool_key = config.clone_offices ? 0 : pool;
      sample_pool_edges(hash_mix(gen_seed, kTagEr, pool_key),
                        layout.pool_base(pool), layout.pool_size,
                        config.senior_edge_prob, config.homophily_wiring, trait,
                        edges1);
      // Team partition: seeded shuffle, then chunks; distinct_teams walks the
      // size ladder min, min+1, ... so early teams have distinct sizes.
      std::vector<std::uint32_t> members(layout.pool_size);
      for (std::uint32_t p = 0; p < layout.pool_size; ++p)
        members[p] = layout.pool_base(pool) + p;
      RngStream rng(hash_mix(gen_seed, kTagTeams, pool_key));
      rng.shuffle(members);
      std::size_t pos = 0;
      while (pos < members.size()) {
        std::uint32_t span;
        if (config.distinct_teams) {
          span = config.team_size_min +
                 static_cast<std::uint32_t>(pool_teams[pool].size()) % size_span;
        } else {
          span = config.team_size_min;
          if (config.team_size_max > config.team_size_min)
            span += static_cast<std::uint32_t>(rng.bounded(size_span));
        }
        span = static_cast<std::uint32_t>(
            std::min<std::size_t>(span, members.size() - pos));
        if (span < config.team_size_min && !pool_teams[pool].empty()) {
          // fold the short remainder into the previous team
          auto& prev = pool_teams[pool].back();
          prev.insert(prev.end(), members.begin() + pos, members.end());
          pos = members.size();
          break;
        }
        pool_teams[pool].emplace_back(members.begin() + pos,
                                      members.begin() + pos + span);
        pos += span;
      }
    }

    for (std::uint32_t o = 0; o < layout.n_offices; ++o) {
      std::uint32_t pool = config.shared_candidates ? 0 : o;
      const auto& teams = pool_teams[pool];
      if (teams.empty()) throw ValidationError("internal: office has no teams");
      std::vector<double> team_trait(teams.size(), 0.0);
      for (std::size_t t = 0; t < teams.size(); ++t) {
        for (std::uint32_t member : teams[t]) team_trait[t] += trait(member);
        team_trait[t] /= static_cast<double>(teams[t].size());
      }
      std::uint64_t office_key = config.clone_offices ? 0 : o;
      std::uint32_t base = layout.hire_base(config, o);
      for (std::uint32_t r = 0; r < config.office_sizes[o]; ++r) {
        std::uint32_t hire = base + r;
        RngStream rng(hash_mix(gen_seed, kTagPlace, office_key, r));
        std::size_t pick;
        if (config.distinct_teams) {
          pick = r;  // hire r onto team r of the size ladder
        } else if (rng.uniform01() < config.homophily_placement) {
          // trait-guided but still random: weight teams by trait closeness,
          // so equally-near teams stay equally likely
          double w = trait(hire);
          std::vector<double> weights(teams.size());
          double total = 0.0;
          for (std::size_t t = 0; t < teams.size(); ++t) {
            weights[t] = std::exp(-2.0 * std::abs(w - team_trait[t]));
            total += weights[t];
          }
          double u = rng.uniform01() * total;
          pick = teams.size() - 1;
          for (std::size_t t = 0; t < teams.size(); ++t) {
            u -= weights[t];
            if (u <= 0.0) {
              pick = t;
              break;
            }
          }
        } else {
          pick = static_cast<std::size_t>(rng.bounded(teams.size()));
        }
        for (std::uint32_t member : teams[pick]) edges1.emplace_back(hire, member);
      }
    }

    // Design plan.
    DesignPlan plan;
    plan.master_seed = config.seed;
    for (std::uint32_t o = 0; o < layout.n_offices; ++o) {
      OfficeDesign od;
      od.office_id = "office" + std::to_string(o);
      std::uint32_t base = layout.hire_base(config, o);
      for (std::uint32_t r = 0; r < config.office_sizes[o]; ++r)
        od.I.push_back(base + r);
      std::uint32_t pool = config.shared_candidates ? 0 : o;
      for (std::uint32_t p = 0; p < layout.pool_size; ++p)
        od.J.push_back(layout.pool_base(pool) + p);
      plan.offices.push_back(std::move(od));
    }

    // Realize A2 through the frozen threshold rule: first derive treatments
    // on the period-1 network, then flip outcome edges on.
    SyntheticWorld world;
    world.config = config;
    world.plan = plan;
    world.attempt = attempt;
    world.node_keys = node_keys;
    world.net = TemporalNetwork::build_indexed(roster, edges1, {});

    PanelSet pre = assemble_panels(world.net, plan, config.treatments);
    std::vector<TemporalNetwork::IndexEdge> edges2;
    for (const auto& p : pre.panels)
      for (std::uint32_t c = 0; c < p.cols(); ++c)
        for (std::uint32_t r = 0; r < p.rows(); ++r)
          if (world.potential_outcome(p.hires[r], p.candidates[c],
                                      p.value(r, c)) != 0.0)
            edges2.emplace_back(p.hires[r], p.candidates[c]);
    world.net = TemporalNetwork::build_indexed(roster, edges1, edges2);

    // Support validation: a usable world must survive sample construction.
    bool ok = true;
    auto panels = assemble_world_panels(world);
    auto try_mode = [&](SampleMode mode) {
      try {
        build_sample(panels, mode);
      } catch (const ValidationError& e) {
        ok = false;
        last_error = e.what();
      }
    };
    if (config.validate_ipw) try_mode(SampleMode::ipw);
    if (ok && config.validate_late) try_mode(SampleMode::late);
    if (ok) return world;
  }
  throw ValidationError(
      "generate_world: no valid world after " + std::to_string(config.max_attempts) +
      " attempts (last failure: " + last_error + ")");
}

std::shared_ptr<const std::vector<OfficePanel>> assemble_world_panels(
    const SyntheticWorld& world) {
  PanelSet set = assemble_panels(world.net, world.plan, world.config.treatments);
  return std::make_shared<const std::vector<OfficePanel>>(std::move(set.panels));
}

std::vector<OfficePanel> counterfactual_panels(
    const SyntheticWorld& world, const std::vector<OfficePanel>& realized,
    const Permutation& pi) {
  if (pi.rows.size() != realized.size())
    throw ValidationError("counterfactual_panels: permutation outside the group");
  std::vector<OfficePanel> out = realized;
  for (std::size_t o = 0; o < realized.size(); ++o) {
    const OfficePanel& src = realized[o];
    OfficePanel& dst = out[o];
    if (pi.rows[o].size() != src.rows())
      throw ValidationError("counterfactual_panels: permutation outside the group");
    for (std::uint32_t r = 0; r < src.rows(); ++r) {
      std::uint32_t rp = pi.rows[o][r];
      dst.row_flags[r] = src.row_flags[rp];
      for (std::uint32_t c = 0; c < src.cols(); ++c) {
        const double* v = src.value(rp, c);
        std::copy(v, v + src.dim, dst.value(r, c));
        double y = world.potential_outcome(src.hires[r], src.candidates[c], v);
        dst.outcomes.set(static_cast<std::uint64_t>(c) * src.rows() + r, y != 0.0);
      }
    }
  }
  return out;
}

std::vector<double> counterfactual_table(const SyntheticWorld& world,
                                         const EstimationSample& sample,
                                         std::uint32_t office_index,
                                         const OfficeFit& fit) {
  const OfficeSample& os = sample.offices[office_index];
  const std::uint32_t m = os.rows(), J = os.cols(), d = os.dim;
  std::vector<double> table(static_cast<std::size_t>(m) * m * d, 0.0);
  CompArray acc(table.size());

  if (fit.kind == EstimatorKind::ipw) {
    // S[i][i'] = sum_j Z_ij * Y^{D_ij}_{i'j}, then one solve per entry.
    for (std::uint32_t c = 0; c < J; ++c)
      for (std::uint32_t i = 0; i < m; ++i) {
        const double* v = os.value(i, c);
        double w = 1.0 / os.weight(i, c);
        for (std::uint32_t ip = 0; ip < m; ++ip) {
          if (world.potential_outcome(os.hires[ip], os.candidates[c], v) == 0.0)
            continue;
          std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
          for (std::uint32_t k = 0; k < d; ++k) acc.add(base + k, w * v[k]);
        }
      }
    std::vector<double> rhs(d), sol(d);
    for (std::uint32_t i = 0; i < m; ++i)
      for (std::uint32_t ip = 0; ip < m; ++ip) {
        std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
        for (std::uint32_t k = 0; k < d; ++k) rhs[k] = acc.value(base + k);
        fit.gram.solve(rhs.data(), sol.data());
        std::copy(sol.begin(), sol.end(), table.begin() + base);
      }
  } else {
    std::vector<double> W(static_cast<std::size_t>(m) * d);
    for (std::uint32_t c = 0; c < J; ++c) {
      for (std::uint32_t i = 0; i < m; ++i)
        fit.col_gram[c].solve(os.value(i, c),
                              W.data() + static_cast<std::size_t>(i) * d);
      for (std::uint32_t i = 0; i < m; ++i) {
        const double* v = os.value(i, c);
        const double* wi = W.data() + static_cast<std::size_t>(i) * d;
        for (std::uint32_t ip = 0; ip < m; ++ip) {
          if (world.potential_outcome(os.hires[ip], os.candidates[c], v) == 0.0)
            continue;
          std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
          for (std::uint32_t k = 0; k < d; ++k) acc.add(base + k, wi[k]);
        }
      }
    }
    for (std::size_t idx = 0; idx < table.size(); ++idx)
      table[idx] = acc.value(idx) / J;
    return table;
  }
  return table;
}

namespace {

// Potential-outcome estimands, per office, on the validated sample.
std::vector<double> office_estimand(const SyntheticWorld& world,
                                    const OfficeSample& os, EstimatorKind kind,
                                    const OfficeFit& fit) {
  const std::uint32_t m = os.rows(), J = os.cols(), d = os.dim;
  std::vector<double> out(d, 0.0);
  if (kind == EstimatorKind::ipw) {
    std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& v : os.support) add_outer(gram, v.data(), static_cast<int>(d));
    SymEigen f = SymEigen::compute(gram.data(), static_cast<int>(d));
    CompArray rhs(d);
    for (std::uint32_t c = 0; c < J; ++c)
      for (std::uint32_t r = 0; r < m; ++r)
        for (const auto& v : os.support) {
          double y = world.potential_outcome(os.hires[r], os.candidates[c], v.data());
          if (y == 0.0) continue;
          for (std::uint32_t k = 0; k < d; ++k) rhs.add(k, v[k]);
        }
    std::vector<double> b(d);
    double pairs = static_cast<double>(m) * J;
    for (std::uint32_t k = 0; k < d; ++k) b[k] = rhs.value(k) / pairs;
    f.solve(b.data(), out.data());
  } else {
    CompArray acc(d);
    std::vector<double> rhs(d), sol(d);
    for (std::uint32_t c = 0; c < J; ++c) {
      std::fill(rhs.begin(), rhs.end(), 0.0);
      // sum over the realized multiset D_j (duplicates included)
      for (std::uint32_t rp = 0; rp < m; ++rp) {
        const double* v = os.value(rp, c);
        for (std::uint32_t r = 0; r < m; ++r) {
          double y = world.potential_outcome(os.hires[r], os.candidates[c], v);
          if (y == 0.0) continue;
          for (std::uint32_t k = 0; k < d; ++k) rhs[k] += v[k];
        }
      }
      for (std::uint32_t k = 0; k < d; ++k) rhs[k] /= m;
      fit.col_gram[c].solve(rhs.data(), sol.data());
      for (std::uint32_t k = 0; k < d; ++k) acc.add(k, sol[k]);
    }
    for (std::uint32_t k = 0; k < d; ++k) out[k] = acc.value(k) / J;
  }
  return out;
}

std::vector<double> grid_alphas() {
  std::vector<double> a;
  for (int i = 1; i <= 99; ++i) a.push_back(i / 100.0);
  return a;
}

// P(p <= alpha) over the enumerated draws, for one coordinate.
void fill_grid(const std::vector<double>& stats, std::uint64_t n,
               const std::vector<double>& alphas, std::vector<double>& rate1,
               std::vector<double>& rate2) {
  std::vector<double> sorted(stats);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> p1s(n), p2s(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), stats[i]);
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), stats[i]);
    std::uint64_t count_ge = n - static_cast<std::uint64_t>(lo - sorted.begin());
    std::uint64_t count_le = static_cast<std::uint64_t>(hi - sorted.begin());
    p1s[i] = static_cast<double>(count_ge) / static_cast<double>(n);
    double p_left = static_cast<double>(count_le) / static_cast<double>(n);
    p2s[i] = std::min(1.0, 2.0 * std::min(p1s[i], p_left));
  }
  std::sort(p1s.begin(), p1s.end());
  std::sort(p2s.begin(), p2s.end());
  rate1.resize(alphas.size());
  rate2.resize(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    rate1[a] = static_cast<double>(std::upper_bound(p1s.begin(), p1s.end(),
                                                    alphas[a]) -
                                   p1s.begin()) /
               static_cast<double>(n);
    rate2[a] = static_cast<double>(std::upper_bound(p2s.begin(), p2s.end(),
                                                    alphas[a]) -
                                   p2s.begin()) /
               static_cast<double>(n);
  }
}

OracleReport enumerate_report(const EstimationSample& sample, const AggregateFit& agg,
                              const std::vector<std::vector<double>>& tilde_tables,
                              std::uint64_t cap) {
  OracleReport rep;
  rep.kind = agg.kind;
  rep.dim = agg.dim;
  rep.office_count = agg.office_count;
  rep.total_hires = agg.total_hires;
  rep.retained_pairs = sample.retained_pairs;
  rep.realized_estimate = agg.estimate;

  const std::uint32_t dim = agg.dim;
  const std::uint32_t N = agg.office_count;
  GroupEnumerator en(agg.office_rows(), cap);
  const std::uint64_t n = en.size();
  rep.group_order = n;

  std::vector<double> est_draws(n * dim), stat_draws(n * dim);
  CompArray vhat_mean(dim);
  std::vector<double> office_est(static_cast<std::size_t>(N) * dim);

  Permutation pi;
  std::uint64_t idx = 0;
  while (en.next(pi)) {
    for (std::uint32_t o = 0; o < N; ++o) {
      const OfficeFit& f = agg.fits[o];
      const std::uint32_t m = f.rows;
      const std::vector<double>& tilde = tilde_tables[o];
      for (std::uint32_t k = 0; k < dim; ++k) {
        double e = 0.0;
        for (std::uint32_t r = 0; r < m; ++r)
          e += tilde[(static_cast<std::size_t>(pi.rows[o][r]) * m + r) * dim + k];
        office_est[static_cast<std::size_t>(o) * dim + k] = e;
      }
    }
    for (std::uint32_t k = 0; k < dim; ++k) {
      double e = 0.0, s = 0.0;
      for (std::uint32_t o = 0; o < N; ++o) {
        const OfficeFit& f = agg.fits[o];
        double eo = office_est[static_cast<std::size_t>(o) * dim + k];
        double so = 0.0;
        for (std::uint32_t r = 0; r < f.rows; ++r)
          so += f.table[(static_cast<std::size_t>(pi.rows[o][r]) * f.rows + r) * dim + k];
        e += f.weight * eo;
        s += f.weight * so;
      }
      est_draws[idx * dim + k] = e;
      stat_draws[idx * dim + k] = s;
    }
    if (N >= 2) {
      for (std::uint32_t k = 0; k < dim; ++k) {
        double total = est_draws[idx * dim + k];
        double ss = 0.0;
        for (std::uint32_t o = 0; o < N; ++o) {
          double dev = agg.fits[o].weight *
                           office_est[static_cast<std::size_t>(o) * dim + k] -
                       total / N;
          ss += dev * dev;
        }
        vhat_mean.add(k, static_cast<double>(N) / (N - 1) * ss);
      }
    }
    ++idx;
  }

  auto mean_and_var = [&](const std::vector<double>& draws, std::vector<double>& mean,
                          std::vector<double>& var) {
    mean.assign(dim, 0.0);
    var.assign(dim, 0.0);
    for (std::uint32_t k = 0; k < dim; ++k) {
      Kahan acc;
      for (std::uint64_t i = 0; i < n; ++i) acc.add(draws[i * dim + k]);
      mean[k] = acc.value() / static_cast<double>(n);
      Kahan ss;
      for (std::uint64_t i = 0; i < n; ++i) {
        double c = draws[i * dim + k] - mean[k];
        ss.add(c * c);
      }
      var[k] = ss.value() / static_cast<double>(n);
    }
  };
  std::vector<double> stat_mean;
  mean_and_var(est_draws, rep.enumerated_mean, rep.estimator_variance);
  mean_and_var(stat_draws, stat_mean, rep.stat_variance);

  if (N >= 2) {
    rep.mean_vhat.resize(dim);
    for (std::uint32_t k = 0; k < dim; ++k)
      rep.mean_vhat[k] = vhat_mean.value(k) / static_cast<double>(n);
  } else {
    rep.notes.push_back("single office: variance bound undefined");
  }

  auto bounds = [&](const std::vector<double>& variance, bool use_tilde) {
    std::vector<TableRef> refs;
    for (std::uint32_t o = 0; o < N; ++o)
      refs.push_back({agg.fits[o].rows, dim,
                      use_tilde ? tilde_tables[o].data() : agg.fits[o].table.data()});
    std::vector<double> sigma(dim);
    bool ok = true;
    for (std::uint32_t k = 0; k < dim; ++k) {
      sigma[k] = std::sqrt(variance[k]);
      if (!(sigma[k] > 0.0)) ok = false;
    }
    if (!ok) {
      rep.notes.push_back("degenerate permutation distribution: normality bound skipped");
      return std::vector<double>(dim, std::numeric_limits<double>::quiet_NaN());
    }
    return berry_esseen_bound(refs, sigma, agg.total_hires, 1.0);
  };
  rep.be_bound_estimator = bounds(rep.estimator_variance, true);
  rep.be_bound_statistic = bounds(rep.stat_variance, false);

  rep.grid_alpha = grid_alphas();
  rep.grid_rate_one_sided.resize(dim);
  rep.grid_rate_two_sided.resize(dim);
  for (std::uint32_t k = 0; k < dim; ++k) {
    std::vector<double> slice(n);
    for (std::uint64_t i = 0; i < n; ++i) slice[i] = stat_draws[i * dim + k];
    fill_grid(slice, n, rep.grid_alpha, rep.grid_rate_one_sided[k],
              rep.grid_rate_two_sided[k]);
  }
  return rep;
}

}  // namespace

OracleReport run_oracle(const SyntheticWorld& world, EstimatorKind kind,
                        std::uint64_t cap) {
  auto panels = assemble_world_panels(world);
  SampleMode mode = kind == EstimatorKind::ipw ? SampleMode::ipw : SampleMode::late;
  EstimationSample sample = build_sample(panels, mode);
  AggregateFit agg = fit_all(sample, kind);
  for (const auto& f : agg.fits)
    if (!f.has_table)
      throw ValidationError("run_oracle: office tables unavailable (budget)");

  std::vector<std::vector<double>> tilde(agg.fits.size());
  for (std::uint32_t o = 0; o < agg.fits.size(); ++o)
    tilde[o] = counterfactual_table(world, sample, o, agg.fits[o]);

  OracleReport rep = enumerate_report(sample, agg, tilde, cap);
  rep.sharp_null = world.sharp_null();
  rep.notes.push_back(
      "be_bound_estimator needs potential outcomes: synthetic-only; both "
      "bounds are proportional, up to the universal constant C = 1");

  rep.estimand.assign(agg.dim, 0.0);
  for (std::uint32_t o = 0; o < agg.fits.size(); ++o) {
    std::vector<double> eo = office_estimand(world, sample.offices[o], kind, agg.fits[o]);
    for (std::uint32_t k = 0; k < agg.dim; ++k)
      rep.estimand[k] += agg.fits[o].weight * eo[k];
  }
  return rep;
}

OracleReport run_placebo_oracle(const SyntheticWorld& world,
                                const std::string& covariate, EstimatorKind kind,
                                std::uint64_t cap) {
  auto panels_src = assemble_world_panels(world);
  auto panels = std::make_shared<std::vector<OfficePanel>>(*panels_src);
  std::uint64_t missing = 0;
  apply_placebo_outcome(*panels, world.net, covariate, &missing);
  SampleMode mode = kind == EstimatorKind::ipw ? SampleMode::ipw : SampleMode::late;
  EstimationSample sample = build_sample(panels, mode);
  AggregateFit agg = fit_all(sample, kind);

  // A placebo outcome is constant in the treatment, so the counterfactual
  // tables coincide with the observed-data tables.
  std::vector<std::vector<double>> tilde(agg.fits.size());
  for (std::uint32_t o = 0; o < agg.fits.size(); ++o) tilde[o] = agg.fits[o].table;

  OracleReport rep = enumerate_report(sample, agg, tilde, cap);
  rep.sharp_null = true;
  if (missing > 0)
    rep.notes.push_back("placebo: dropped " + std::to_string(missing) +
                        " hires with missing covariate");
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json stat_to_json(const TreatmentStat& s) {
  nlohmann::json j;
  j["kind"] = static_cast<int>(s.kind);
  j["binarize"] = s.binarize;
  if (s.threshold) j["threshold"] = *s.threshold;
  return j;
}

TreatmentStat stat_from_json(const nlohmann::json& j) {
  TreatmentStat s;
  s.kind = static_cast<StatKind>(j.at("kind").get<int>());
  s.binarize = j.at("binarize").get<bool>();
  if (j.contains("threshold")) s.threshold = j.at("threshold").get<double>();
  return s;
}

}  // namespace

std::string world_to_json(const SyntheticWorld& world) {
  nlohmann::json j;
  j["format"] = "netform-world";
  j["version"] = 1;

  nlohmann::json cfg;
  const WorldConfig& c = world.config;
  cfg["office_sizes"] = c.office_sizes;
  cfg["seniors_per_office"] = c.seniors_per_office;
  cfg["team_size_min"] = c.team_size_min;
  cfg["team_size_max"] = c.team_size_max;
  cfg["senior_edge_prob"] = c.senior_edge_prob;
  cfg["shared_candidates"] = c.shared_candidates;
  cfg["clone_offices"] = c.clone_offices;
  cfg["distinct_teams"] = c.distinct_teams;
  cfg["homophily_wiring"] = c.homophily_wiring;
  cfg["trait_clusters"] = c.trait_clusters;
  cfg["office_cluster_hires"] = c.office_cluster_hires;
  cfg["delta"] = c.delta;
  cfg["homophily_scale"] = c.homophily_scale;
  cfg["homophily_placement"] = c.homophily_placement;
  cfg["seed"] = c.seed;
  cfg["max_attempts"] = c.max_attempts;
  cfg["validate_ipw"] = c.validate_ipw;
  cfg["validate_late"] = c.validate_late;
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : c.treatments) stats.push_back(stat_to_json(s));
  cfg["treatments"] = stats;
  j["config"] = cfg;
  j["attempt"] = world.attempt;

  nlohmann::json roster = nlohmann::json::array();
  for (std::uint32_t u = 0; u < world.net.n(); ++u) {
    const NodeRecord& rec = world.net.node(u);
    nlohmann::json r;
    r["id"] = rec.id;
    r["office"] = rec.office;
    r["new_hire"] = rec.new_hire;
    r["covariates"] = rec.covariates;
    roster.push_back(std::move(r));
  }
  j["roster"] = roster;

  auto edges_json = [&](int snap) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto [a, b] : world.net.snapshot(snap).edge_list())
      arr.push_back({world.net.node(a).id, world.net.node(b).id});
    return arr;
  };
  j["edges_t1"] = edges_json(1);
  j["edges_t2"] = edges_json(2);

  nlohmann::json plan;
  plan["master_seed"] = world.plan.master_seed;
  nlohmann::json offices = nlohmann::json::array();
  for (const auto& o : world.plan.offices) {
    nlohmann::json oj;
    oj["office_id"] = o.office_id;
    nlohmann::json I = nlohmann::json::array(), J = nlohmann::json::array();
    for (std::uint32_t u : o.I) I.push_back(world.net.node(u).id);
    for (std::uint32_t u : o.J) J.push_back(world.net.node(u).id);
    oj["I"] = I;
    oj["J"] = J;
    offices.push_back(std::move(oj));
  }
  plan["offices"] = offices;
  j["design"] = plan;

  return j.dump(2);
}

SyntheticWorld world_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format").get<std::string>() != "netform-world" ||
      j.at("version").get<int>() != 1)
    throw ValidationError("unsupported world file format");

  SyntheticWorld world;
  const nlohmann::json& cfg = j.at("config");
  WorldConfig& c = world.config;
  c.office_sizes = cfg.at("office_sizes").get<std::vector<std::uint32_t>>();
  c.seniors_per_office = cfg.at("seniors_per_office").get<std::uint32_t>();
  c.team_size_min = cfg.at("team_size_min").get<std::uint32_t>();
  c.team_size_max = cfg.at("team_size_max").get<std::uint32_t>();
  c.senior_edge_prob = cfg.at("senior_edge_prob").get<double>();
  c.shared_candidates = cfg.at("shared_candidates").get<bool>();
  c.clone_offices = cfg.at("clone_offices").get<bool>();
  c.distinct_teams = cfg.at("distinct_teams").get<bool>();
  c.homophily_wiring = cfg.at("homophily_wiring").get<double>();
  c.trait_clusters = cfg.at("trait_clusters").get<std::uint32_t>();
  c.office_cluster_hires = cfg.at("office_cluster_hires").get<bool>();
  c.delta = cfg.at("delta").get<std::vector<double>>();
  c.homophily_scale = cfg.at("homophily_scale").get<double>();
  c.homophily_placement = cfg.at("homophily_placement").get<double>();
  c.seed = cfg.at("seed").get<std::uint64_t>();
  c.max_attempts = cfg.at("max_attempts").get<std::uint32_t>();
  c.validate_ipw = cfg.at("validate_ipw").get<bool>();
  c.validate_late = cfg.at("validate_late").get<bool>();
  c.treatments.clear();
  for (const auto& sj : cfg.at("treatments")) c.treatments.push_back(stat_from_json(sj));
  world.attempt = j.at("attempt").get<std::uint32_t>();

  std::vector<NodeRecord> roster;
  for (const auto& rj : j.at("roster")) {
    NodeRecord rec;
    rec.id = rj.at("id").get<std::string>();
    rec.office = rj.at("office").get<std::string>();
    rec.new_hire = rj.at("new_hire").get<bool>();
    rec.covariates = rj.at("covariates").get<std::map<std::string, double>>();
    roster.push_back(std::move(rec));
  }
  auto parse_edges = [&](const char* key) {
    std::vector<TemporalNetwork::Edge> out;
    for (const auto& e : j.at(key))
      out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    return out;
  };
  world.net = TemporalNetwork::build(roster, parse_edges("edges_t1"),
                                     parse_edges("edges_t2"));

  const nlohmann::json& plan = j.at("design");
  world.plan.master_seed = plan.at("master_seed").get<std::uint64_t>();
  for (const auto& oj : plan.at("offices")) {
    OfficeDesign od;
    od.office_id = oj.at("office_id").get<std::string>();
    for (const auto& id : oj.at("I"))
      od.I.push_back(world.net.index_of(id.get<std::string>()));
    for (const auto& id : oj.at("J"))
      od.J.push_back(world.net.index_of(id.get<std::string>()));
    world.plan.offices.push_back(std::move(od));
  }
  world.plan.validate();

  world.node_keys = make_node_keys(c, make_layout(c));
  if (world.node_keys.size() != world.net.n())
    throw ValidationError("world file roster does not match its config layout");
  return world;
}

std::string oracle_report_to_json(const OracleReport& rep) {
  nlohmann::json j;
  j["kind"] = rep.kind == EstimatorKind::ipw ? "ipw" : "within";
  j["group_order"] = rep.group_order;
  j["office_count"] = rep.office_count;
  j["total_hires"] = rep.total_hires;
  j["retained_pairs"] = rep.retained_pairs;
  j["sharp_null"] = rep.sharp_null;
  j["realized_estimate"] = rep.realized_estimate;
  j["enumerated_mean"] = rep.enumerated_mean;
  j["estimand"] = rep.estimand;
  j["estimator_variance"] = rep.estimator_variance;
  j["stat_variance"] = rep.stat_variance;
  j["mean_vhat"] = rep.mean_vhat;
  j["be_bound_estimator"] = rep.be_bound_estimator;
  j["be_bound_statistic"] = rep.be_bound_statistic;
  j["grid_alpha"] = rep.grid_alpha;
  j["grid_rate_one_sided"] = rep.grid_rate_one_sided;
  j["grid_rate_two_sided"] = rep.grid_rate_two_sided;
  j["notes"] = rep.notes;
  return j.dump(2);
}

}  // namespace netform
