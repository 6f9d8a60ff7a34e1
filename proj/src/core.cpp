#include "netform/core.hpp"

#include <algorithm>

namespace netform {

// ---------------------------------------------------------------------------
// Adjacency
// ---------------------------------------------------------------------------

Adjacency Adjacency::from_edges(
    std::uint32_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  // Deduplicated symmetric closure. Input pairs may appear in either or both
  // orientations; each undirected edge is stored once per endpoint.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> canon;
  canon.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a == b) throw ValidationError("self-loop rejected: node " + std::to_string(a));
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  Adjacency adj;
  adj.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (auto [a, b] : canon) {
    ++adj.offsets_[a + 1];
    ++adj.offsets_[b + 1];
  }
  for (std::uint32_t i = 0; i < n; ++i) adj.offsets_[i + 1] += adj.offsets_[i];
  adj.neighbors_.resize(adj.offsets_[n]);
  std::vector<std::uint32_t> cursor(adj.offsets_.begin(), adj.offsets_.end() - 1);
  for (auto [a, b] : canon) {
    adj.neighbors_[cursor[a]++] = b;
    adj.neighbors_[cursor[b]++] = a;
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    auto begin = adj.neighbors_.begin() + adj.offsets_[i];
    auto end = adj.neighbors_.begin() + adj.offsets_[i + 1];
    std::sort(begin, end);
  }
  return adj;
}

bool Adjacency::has_edge(std::uint32_t i, std::uint32_t j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Adjacency::edge_list() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edge_count());
  for (std::uint32_t i = 0; i + 1 < offsets_.size(); ++i)
    for (std::uint32_t j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// TemporalNetwork
// ---------------------------------------------------------------------------

void TemporalNetwork::rebuild_index() {
  index_.clear();
  index_.reserve(nodes_.size());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].new_hire && nodes_[i].office.empty())
      throw ValidationError("new hire without office: " + nodes_[i].id);
    auto [it, inserted] = index_.emplace(nodes_[i].id, i);
    if (!inserted)
      throw ValidationError("duplicate roster id: " + nodes_[i].id);
  }
}

void TemporalNetwork::validate_index_edges(std::uint32_t n,
                                           const std::vector<IndexEdge>& edges,
                                           const char* label) {
  for (auto [a, b] : edges) {
    if (a >= n || b >= n)
      throw ValidationError(std::string(label) + ": edge endpoint out of range");
  }
}

TemporalNetwork TemporalNetwork::build(std::vector<NodeRecord> roster,
                                       const std::vector<Edge>& edges1,
                                       const std::vector<Edge>& edges2) {
  TemporalNetwork net;
  net.nodes_ = std::move(roster);
  net.rebuild_index();
  auto resolve = [&](const std::vector<Edge>& es) {
    std::vector<IndexEdge> out;
    out.reserve(es.size());
    for (const auto& [a, b] : es)
      out.emplace_back(net.index_of(a), net.index_of(b));
    return out;
  };
  std::vector<IndexEdge> e1 = resolve(edges1);
  std::vector<IndexEdge> e2 = resolve(edges2);
  net.adj1_ = Adjacency::from_edges(net.n(), e1);
  net.adj2_ = Adjacency::from_edges(net.n(), e2);
  return net;
}

TemporalNetwork TemporalNetwork::build_indexed(std::vector<NodeRecord> roster,
                                               const std::vector<IndexEdge>& edges1,
                                               const std::vector<IndexEdge>& edges2) {
  TemporalNetwork net;
  net.nodes_ = std::move(roster);
  net.rebuild_index();
  validate_index_edges(net.n(), edges1, "edges1");
  validate_index_edges(net.n(), edges2, "edges2");
  net.adj1_ = Adjacency::from_edges(net.n(), edges1);
  net.adj2_ = Adjacency::from_edges(net.n(), edges2);
  return net;
}

std::uint32_t TemporalNetwork::index_of(const std::string& external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end())
    throw ValidationError("unknown node id in edge list: " + external_id);
  return it->second;
}

std::uint32_t TemporalNetwork::degree(std::uint32_t i, int snapshot_id) const {
  if (i >= n()) throw ValidationError("node index out of range");
  return snapshot(snapshot_id).degree(i);
}

std::uint32_t TemporalNetwork::indirect_ties(std::uint32_t i, std::uint32_t j) const {
  if (i >= n() || j >= n()) throw ValidationError("node index out of range");
  if (i == j) throw ValidationError("indirect_ties requires i != j");
  auto a = adj1_.neighbors(i);
  auto b = adj1_.neighbors(j);
  // Sorted-list intersection size.
  std::uint32_t count = 0;
  std::size_t p = 0, q = 0;
  while (p < a.size() && q < b.size()) {
    if (a[p] < b[q]) {
      ++p;
    } else if (b[q] < a[p]) {
      ++q;
    } else {
      ++count;
      ++p;
      ++q;
    }
  }
  return count;
}

std::optional<double> TemporalNetwork::local_density(std::uint32_t i) const {
  if (i >= n()) throw ValidationError("node index out of range");
  auto nb = adj1_.neighbors(i);
  std::uint64_t deg = nb.size();
  if (deg < 2) return std::nullopt;
  std::uint64_t closed = 0;
  for (std::size_t p = 0; p < nb.size(); ++p)
    for (std::size_t q = p + 1; q < nb.size(); ++q)
      if (adj1_.has_edge(nb[p], nb[q])) ++closed;
  std::uint64_t pairs = deg * (deg - 1) / 2;
  return static_cast<double>(closed) / static_cast<double>(pairs);
}

std::uint32_t TemporalNetwork::degree_filtered(std::uint32_t i,
                                               const std::vector<std::uint8_t>& keep) const {
  if (i >= n()) throw ValidationError("node index out of range");
  std::uint32_t d = 0;
  for (std::uint32_t k : adj1_.neighbors(i))
    if (keep[k]) ++d;
  return d;
}

std::optional<double> TemporalNetwork::local_density_filtered(
    std::uint32_t i, const std::vector<std::uint8_t>& keep) const {
  if (i >= n()) throw ValidationError("node index out of range");
  std::vector<std::uint32_t> nb;
  for (std::uint32_t k : adj1_.neighbors(i))
    if (keep[k]) nb.push_back(k);
  if (nb.size() < 2) return std::nullopt;
  std::uint64_t closed = 0;
  for (std::size_t p = 0; p < nb.size(); ++p)
    for (std::size_t q = p + 1; q < nb.size(); ++q)
      if (adj1_.has_edge(nb[p], nb[q])) ++closed;
  std::uint64_t pairs = static_cast<std::uint64_t>(nb.size()) * (nb.size() - 1) / 2;
  return static_cast<double>(closed) / static_cast<double>(pairs);
}

bool TemporalNetwork::has_edge(std::uint32_t i, std::uint32_t j, int snapshot_id) const {
  if (i >= n() || j >= n()) throw ValidationError("node index out of range");
  return snapshot(snapshot_id).has_edge(i, j);
}

TemporalNetwork TemporalNetwork::apply_permutation(
    const std::vector<std::uint32_t>& pi) const {
  if (pi.size() != n()) throw ValidationError("permutation size != node count");
  std::vector<std::uint32_t> inv(n(), n());
  for (std::uint32_t i = 0; i < n(); ++i) {
    if (pi[i] >= n() || inv[pi[i]] != n())
      throw ValidationError("permutation is not a bijection on node indices");
    inv[pi[i]] = i;
  }
  // B(i,j) = A1(pi[i], pi[j]), i.e. edge (a,b) of A1 lands at (inv[a], inv[b]).
  std::vector<IndexEdge> relabeled;
  relabeled.reserve(adj1_.edge_count());
  for (auto [a, b] : adj1_.edge_list()) relabeled.emplace_back(inv[a], inv[b]);

  TemporalNetwork out;
  out.nodes_ = nodes_;
  out.index_ = index_;
  out.adj1_ = Adjacency::from_edges(n(), relabeled);
  out.adj2_ = adj2_;
  return out;
}

}  // namespace netform
