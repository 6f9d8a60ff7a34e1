#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "netform/errors.hpp"

namespace netform {

struct NodeRecord {
  std::string id;                           // external identifier, unique
  std::string office;                       // empty = no stratum
  bool new_hire = false;                    // requires office when true
  std::map<std::string, double> covariates; // pre-determined attributes
};

// CSR-style undirected adjacency with sorted neighbor lists.
class Adjacency {
 public:
  Adjacency() : offsets_(1, 0) {}

  static Adjacency from_edges(std::uint32_t n,
                              const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

  std::uint32_t degree(std::uint32_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  std::span<const std::uint32_t> neighbors(std::uint32_t i) const {
    return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
  }
  bool has_edge(std::uint32_t i, std::uint32_t j) const;
  std::uint64_t edge_count() const { return neighbors_.size() / 2; }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
};

// Two snapshots of an undirected network over a fixed roster. Immutable after
// build; all statistics read snapshot 1 unless stated otherwise.
class TemporalNetwork {
 public:
  using Edge = std::pair<std::string, std::string>;
  using IndexEdge = std::pair<std::uint32_t, std::uint32_t>;

  static TemporalNetwork build(std::vector<NodeRecord> roster,
                               const std::vector<Edge>& edges1,
                               const std::vector<Edge>& edges2);
  static TemporalNetwork build_indexed(std::vector<NodeRecord> roster,
                                       const std::vector<IndexEdge>& edges1,
                                       const std::vector<IndexEdge>& edges2);

  std::uint32_t n() const { return static_cast<std::uint32_t>(nodes_.size()); }
  const NodeRecord& node(std::uint32_t i) const { return nodes_[i]; }
  const std::vector<NodeRecord>& roster() const { return nodes_; }
  std::uint32_t index_of(const std::string& external_id) const;

  const Adjacency& snapshot(int which) const {
    return which == 1 ? adj1_ : adj2_;
  }

  // Number of neighbors of i in the requested snapshot.
  std::uint32_t degree(std::uint32_t i, int snapshot_id = 1) const;

  // Number of common neighbors of i and j in snapshot 1.
  std::uint32_t indirect_ties(std::uint32_t i, std::uint32_t j) const;

  // Share of i's snapshot-1 neighbor pairs that are themselves connected.
  // Undefined (nullopt) when degree(i) < 2.
  std::optional<double> local_density(std::uint32_t i) const;

  // Degree/density restricted to neighbors passing `keep`; used by the
  // count_hire_ties=false interpretation.
  std::uint32_t degree_filtered(std::uint32_t i, const std::vector<std::uint8_t>& keep) const;
  std::optional<double> local_density_filtered(std::uint32_t i,
                                               const std::vector<std::uint8_t>& keep) const;

  bool has_edge(std::uint32_t i, std::uint32_t j, int snapshot_id) const;

  // Relabeled snapshot-1 network: result(i,j) = A1(pi[i], pi[j]). Snapshot 2
  // is carried over untouched. pi must be a bijection on 0..n-1.
  TemporalNetwork apply_permutation(const std::vector<std::uint32_t>& pi) const;

 private:
  std::vector<NodeRecord> nodes_;
  Adjacency adj1_, adj2_;
  std::unordered_map<std::string, std::uint32_t> index_;

  void rebuild_index();
  static void validate_index_edges(std::uint32_t n,
                                   const std::vector<IndexEdge>& edges,
                                   const char* label);
};

}  // namespace netform
