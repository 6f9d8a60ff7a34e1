#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "netform/core.hpp"
#include "netform/design.hpp"

namespace netform {

// Minimal CSV support: comma-separated, header row, UTF-8, LF or CRLF line
// endings, no quoting. Malformed rows are reported with their line number.

std::vector<std::vector<std::string>> read_csv(const std::string& path);

struct LoadSummary {
  std::uint64_t nodes = 0;
  std::uint64_t hires = 0;
  std::uint64_t offices = 0;
  std::uint64_t edges1_rows = 0;
  std::uint64_t edges1_unique = 0;
  std::uint64_t edges2_rows = 0;
  std::uint64_t edges2_unique = 0;
};

struct LoadedData {
  TemporalNetwork net;
  DesignPlan plan;
  LoadSummary summary;
};

// Nodes file header: node_id,office,new_hire[,covariate...]; edge file
// headers: src,dst. Strata come from the hires' office labels (order of first
// appearance); every non-hire is a candidate tie for every office.
LoadedData load_inputs(const std::string& nodes_path, const std::string& edges1_path,
                       const std::string& edges2_path);

// Writes <base>_nodes.csv, <base>_edges_t1.csv, <base>_edges_t2.csv.
void export_network_csv(const TemporalNetwork& net, const std::string& base_path);

}  // namespace netform
