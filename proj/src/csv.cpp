#include "netform/csv.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace netform {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

namespace {

std::vector<TemporalNetwork::Edge> parse_edge_file(const std::string& path,
                                                   std::uint64_t* row_count) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ValidationError(path + ": empty edge file");
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "src" || header[1] != "dst")
    throw ValidationError(path + ": expected header src,dst");
  std::vector<TemporalNetwork::Edge> edges;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2)
      throw ValidationError(path + ": malformed row at line " + std::to_string(r + 1));
    edges.emplace_back(rows[r][0], rows[r][1]);
  }
  if (row_count) *row_count = edges.size();
  return edges;
}

bool parse_bool(const std::string& s, const std::string& path, std::size_t line) {
  if (s == "1" || s == "true" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s.empty()) return false;
  throw ValidationError(path + ": bad new_hire value '" + s + "' at line " +
                        std::to_string(line));
}

}  // namespace

LoadedData load_inputs(const std::string& nodes_path, const std::string& edges1_path,
                       const std::string& edges2_path) {
  auto rows = read_csv(nodes_path);
  if (rows.empty()) throw ValidationError(nodes_path + ": empty nodes file");
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "node_id" || header[1] != "office" ||
      header[2] != "new_hire")
    throw ValidationError(nodes_path +
                          ": expected header node_id,office,new_hire[,covariate...]");
  std::vector<std::string> covariate_names(header.begin() + 3, header.end());

  std::vector<NodeRecord> roster;
  roster.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw ValidationError(nodes_path + ": malformed row at line " +
                            std::to_string(r + 1) + " (expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(row.size()) + ")");
    NodeRecord rec;
    rec.id = row[0];
    rec.office = row[1];
    rec.new_hire = parse_bool(row[2], nodes_path, r + 1);
    if (rec.new_hire && rec.office.empty())
      throw ValidationError(nodes_path + ": new hire without office at line " +
                            std::to_string(r + 1));
    for (std::size_t c = 0; c < covariate_names.size(); ++c) {
      const std::string& cell = row[3 + c];
      if (cell.empty()) continue;  // missing covariate
      try {
        rec.covariates[covariate_names[c]] = std::stod(cell);
      } catch (const std::exception&) {
        throw ValidationError(nodes_path + ": non-numeric covariate '" + cell +
                              "' at line " + std::to_string(r + 1));
      }
    }
    roster.push_back(std::move(rec));
  }

  LoadedData out;
  out.summary.nodes = roster.size();
  auto e1 = parse_edge_file(edges1_path, &out.summary.edges1_rows);
  auto e2 = parse_edge_file(edges2_path, &out.summary.edges2_rows);
  out.net = TemporalNetwork::build(std::move(roster), e1, e2);
  out.summary.edges1_unique = out.net.snapshot(1).edge_count();
  out.summary.edges2_unique = out.net.snapshot(2).edge_count();

  // Strata: hires grouped by office label, order of first appearance; all
  // non-hires are candidate ties for every office.
  std::vector<std::string> office_order;
  std::map<std::string, std::vector<std::uint32_t>> hires_by_office;
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t u = 0; u < out.net.n(); ++u) {
    const NodeRecord& rec = out.net.node(u);
    if (rec.new_hire) {
      if (!hires_by_office.count(rec.office)) office_order.push_back(rec.office);
      hires_by_office[rec.office].push_back(u);
    } else {
      candidates.push_back(u);
    }
  }
  if (office_order.empty())
    throw ValidationError(nodes_path + ": no new hires in roster");
  for (const auto& office : office_order) {
    OfficeDesign od;
    od.office_id = office;
    od.I = hires_by_office[office];
    od.J = candidates;
    out.plan.offices.push_back(std::move(od));
  }
  out.summary.hires = 0;
  for (const auto& o : out.plan.offices) out.summary.hires += o.I.size();
  out.summary.offices = out.plan.offices.size();
  out.plan.validate();
  return out;
}

void export_network_csv(const TemporalNetwork& net, const std::string& base_path) {
  // Collect the union of covariate names for the header.
  std::vector<std::string> cov_names;
  {
    std::map<std::string, bool> seen;
    for (std::uint32_t u = 0; u < net.n(); ++u)
      for (const auto& [k, v] : net.node(u).covariates)
        if (!seen.count(k)) {
          seen[k] = true;
          cov_names.push_back(k);
        }
    std::sort(cov_names.begin(), cov_names.end());
  }
  {
    std::ofstream f(base_path + "_nodes.csv", std::ios::binary);
    if (!f) throw ValidationError("cannot write " + base_path + "_nodes.csv");
    f << "node_id,office,new_hire";
    for (const auto& c : cov_names) f << "," << c;
    f << "\n";
    for (std::uint32_t u = 0; u < net.n(); ++u) {
      const NodeRecord& rec = net.node(u);
      f << rec.id << "," << rec.office << "," << (rec.new_hire ? 1 : 0);
      for (const auto& c : cov_names) {
        f << ",";
        auto it = rec.covariates.find(c);
        if (it != rec.covariates.end()) f << it->second;
      }
      f << "\n";
    }
  }
  for (int snap : {1, 2}) {
    std::string path = base_path + "_edges_t" + std::to_string(snap) + ".csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path);
    f << "src,dst\n";
    for (auto [a, b] : net.snapshot(snap).edge_list())
      f << net.node(a).id << "," << net.node(b).id << "\n";
  }
}

}  // namespace netform
