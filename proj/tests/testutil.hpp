#pragma once
// Shared fixtures for the test suites.

#include <string>
#include <vector>

#include "netform/core.hpp"
#include "netform/design.hpp"
#include "netform/numeric.hpp"
#include "netform/treatments.hpp"

namespace testutil {

using namespace netform;

inline NodeRecord node(std::string id, std::string office = "", bool hire = false) {
  NodeRecord r;
  r.id = std::move(id);
  r.office = std::move(office);
  r.new_hire = hire;
  return r;
}

// The running 6-node fixture: hires 1,2 in one office, candidates 3,4,
// intermediaries 5,6. Node index = id - 1.
inline TemporalNetwork two_hire_net(
    const std::vector<TemporalNetwork::Edge>& edges1,
    const std::vector<TemporalNetwork::Edge>& edges2 = {}) {
  std::vector<NodeRecord> roster;
  roster.push_back(node("1", "hq", true));
  roster.push_back(node("2", "hq", true));
  roster.push_back(node("3"));
  roster.push_back(node("4"));
  roster.push_back(node("5"));
  roster.push_back(node("6"));
  return TemporalNetwork::build(roster, edges1, edges2);
}

inline DesignPlan two_hire_plan(std::uint64_t seed = 7) {
  DesignPlan plan;
  plan.master_seed = seed;
  OfficeDesign od;
  od.office_id = "hq";
  od.I = {0, 1};
  od.J = {2, 3};
  plan.offices.push_back(od);
  return plan;
}

// Random small network with K offices for property tests: hires wired to a
// random subset of their office's seniors, seniors wired ER among themselves.
struct RandomWorld {
  TemporalNetwork net;
  DesignPlan plan;
};

inline RandomWorld random_world(std::uint64_t seed, std::uint32_t offices = 2,
                                std::uint32_t hires_per_office = 3,
                                std::uint32_t seniors_per_office = 6,
                                double edge_prob = 0.35) {
  RngStream rng(splitmix64(seed) ^ 0x517cc1b727220a95ULL);
  std::vector<NodeRecord> roster;
  DesignPlan plan;
  plan.master_seed = seed;
  std::vector<std::vector<std::uint32_t>> hires(offices), seniors(offices);
  std::uint32_t u = 0;
  for (std::uint32_t o = 0; o < offices; ++o) {
    for (std::uint32_t h = 0; h < hires_per_office; ++h, ++u) {
      roster.push_back(node("h" + std::to_string(o) + "_" + std::to_string(h),
                            "o" + std::to_string(o), true));
      hires[o].push_back(u);
    }
    for (std::uint32_t s = 0; s < seniors_per_office; ++s, ++u) {
      roster.push_back(node("s" + std::to_string(o) + "_" + std::to_string(s),
                            "o" + std::to_string(o), false));
      seniors[o].push_back(u);
    }
  }
  std::vector<TemporalNetwork::IndexEdge> e1, e2;
  for (std::uint32_t o = 0; o < offices; ++o) {
    for (std::uint32_t h : hires[o])
      for (std::uint32_t s : seniors[o])
        if (rng.uniform01() < edge_prob) e1.emplace_back(h, s);
    for (std::size_t a = 0; a < seniors[o].size(); ++a)
      for (std::size_t b = a + 1; b < seniors[o].size(); ++b)
        if (rng.uniform01() < edge_prob) e1.emplace_back(seniors[o][a], seniors[o][b]);
    for (std::uint32_t h : hires[o])
      for (std::uint32_t s : seniors[o])
        if (rng.uniform01() < 0.3) e2.emplace_back(h, s);
  }
  RandomWorld w{TemporalNetwork::build_indexed(roster, e1, e2), plan};
  for (std::uint32_t o = 0; o < offices; ++o) {
    OfficeDesign od;
    od.office_id = "o" + std::to_string(o);
    od.I = hires[o];
    od.J = seniors[o];
    w.plan.offices.push_back(od);
  }
  return w;
}

}  // namespace testutil
