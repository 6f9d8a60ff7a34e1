#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "netform/design.hpp"
#include "netform/sample.hpp"
#include "testutil.hpp"

using namespace netform;

namespace {

DesignPlan plan_with_sizes(const std::vector<std::uint32_t>& sizes,
                           std::uint64_t seed = 3) {
  DesignPlan plan;
  plan.master_seed = seed;
  std::uint32_t next = 0;
  for (std::size_t o = 0; o < sizes.size(); ++o) {
    OfficeDesign od;
    od.office_id = "o" + std::to_string(o);
    for (std::uint32_t i = 0; i < sizes[o]; ++i) od.I.push_back(next++);
    od.J.push_back(1000 + static_cast<std::uint32_t>(o));
    plan.offices.push_back(od);
  }
  return plan;
}

std::string key_of(const Permutation& p) {
  std::string s;
  for (const auto& rows : p.rows) {
    for (auto r : rows) s += std::to_string(r) + ",";
    s += ";";
  }
  return s;
}

}  // namespace

TEST_CASE("plan validation") {
  DesignPlan plan = plan_with_sizes({2, 2});
  plan.validate();

  DesignPlan overlap = plan;
  overlap.offices[1].I[0] = plan.offices[0].I[0];
  CHECK_THROWS_AS(overlap.validate(), ValidationError);

  DesignPlan cross = plan;
  cross.offices[1].J[0] = plan.offices[0].I[0];  // J of one office hires of another
  CHECK_THROWS_AS(cross.validate(), ValidationError);

  DesignPlan selfmix = plan;
  selfmix.offices[0].J[0] = selfmix.offices[0].I[0];
  CHECK_THROWS_AS(selfmix.validate(), ValidationError);
}

TEST_CASE("singleton office always maps to identity") {
  DesignPlan plan = plan_with_sizes({1, 3});
  for (std::uint64_t k = 0; k < 50; ++k) {
    Permutation p = sample_permutation(plan, k);
    REQUIRE(p.rows[0].size() == 1);
    CHECK(p.rows[0][0] == 0);
  }
}

TEST_CASE("uniformity: chi-square over draws") {
  DesignPlan plan = plan_with_sizes({2});
  std::map<std::string, int> freq;
  const int R = 20000;
  for (int k = 0; k < R; ++k) ++freq[key_of(sample_permutation(plan, k))];
  REQUIRE(freq.size() == 2);
  double chi2 = 0;
  for (const auto& [_, n] : freq) {
    double e = R / 2.0;
    chi2 += (n - e) * (n - e) / e;
  }
  CHECK(chi2 < 10.83);  // 0.001 critical value, 1 df

  // all 6 arrangements of a 3-hire office
  DesignPlan plan3 = plan_with_sizes({3});
  std::map<std::string, int> freq3;
  for (int k = 0; k < R; ++k) ++freq3[key_of(sample_permutation(plan3, k))];
  REQUIRE(freq3.size() == 6);
  double chi2b = 0;
  for (const auto& [_, n] : freq3) {
    double e = R / 6.0;
    chi2b += (n - e) * (n - e) / e;
  }
  CHECK(chi2b < 20.52);  // 0.001 critical value, 5 df
}

TEST_CASE("determinism: permutation is a pure function of (seed, draw)") {
  DesignPlan plan = plan_with_sizes({4, 3}, 99);
  for (std::uint64_t k = 0; k < 20; ++k) {
    CHECK(key_of(sample_permutation(plan, k)) == key_of(sample_permutation(plan, k)));
  }
  bool any_diff = false;
  for (std::uint64_t k = 0; k < 20; ++k)
    any_diff |= key_of(sample_permutation(plan, k)) !=
                key_of(sample_permutation(plan, k + 1));
  CHECK(any_diff);
}

TEST_CASE("group enumeration: order and uniqueness") {
  auto count_distinct = [](const std::vector<std::uint32_t>& sizes) {
    GroupEnumerator en(sizes, kDefaultEnumerationCap);
    std::set<std::string> seen;
    Permutation p;
    while (en.next(p)) seen.insert(key_of(p));
    CHECK(seen.size() == en.size());
    return en.size();
  };
  CHECK(count_distinct({3}) == 6);
  CHECK(count_distinct({2, 2}) == 4);
  CHECK(count_distinct({4, 4}) == 576);
  CHECK(count_distinct({2, 3}) == 12);
}

TEST_CASE("enumeration starts at identity and respects the cap") {
  GroupEnumerator en({3, 2}, 100);
  Permutation p;
  REQUIRE(en.next(p));
  CHECK(p.is_identity());
  CHECK_THROWS_AS(GroupEnumerator({10}, 1000), CapExceededError);
}

TEST_CASE("group laws: closure and inverses on a small instance") {
  GroupEnumerator en({3, 2}, 1000);
  std::vector<Permutation> all;
  Permutation p;
  while (en.next(p)) all.push_back(p);
  std::set<std::string> keys;
  for (const auto& q : all) keys.insert(key_of(q));
  bool identity_found = false;
  for (const auto& a : all) identity_found |= a.is_identity();
  CHECK(identity_found);
  for (std::size_t a = 0; a < all.size(); a += 3)
    for (std::size_t b = 0; b < all.size(); b += 4) {
      CHECK(keys.count(key_of(all[a].compose(all[b]))) == 1);
      CHECK(keys.count(key_of(all[a].inverse())) == 1);
      CHECK(all[a].compose(all[a].inverse()).is_identity());
    }
}

TEST_CASE("node map round-trip through the plan") {
  auto w = testutil::random_world(5);
  Permutation pi = sample_permutation(w.plan, 11);
  auto node_map = pi.to_node_map(w.plan, w.net.n());
  // non-hires fixed
  for (std::uint32_t u = 0; u < w.net.n(); ++u)
    if (!w.net.node(u).new_hire) CHECK(node_map[u] == u);
  // hires stay within their office's hire set
  for (std::size_t o = 0; o < w.plan.offices.size(); ++o) {
    std::set<std::uint32_t> I(w.plan.offices[o].I.begin(), w.plan.offices[o].I.end());
    for (std::uint32_t i : w.plan.offices[o].I) CHECK(I.count(node_map[i]) == 1);
  }
}

TEST_CASE("assignment probabilities: frequencies and equivariance") {
  auto net = testutil::two_hire_net({{"1", "5"}, {"5", "3"}});
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  OfficePanel p = treatment_matrix(net, "hq", {0, 1}, {2, 3}, spec);
  OfficeProbabilities probs = assignment_probabilities(p);
  // column 3: values split 1/2 - 1/2
  CHECK(probs.P[0] == 0.5);
  CHECK(probs.P[1] == 0.5);
  CHECK(probs.tables[0].prob_of({1, 1}) == 0.5);
  CHECK(probs.tables[0].prob_of({1, 0}) == 0.5);
  // column 4: constant, so P = 1
  CHECK(probs.P[2] == 1.0);
  CHECK(probs.P[3] == 1.0);
  for (const auto& t : probs.tables) {
    double total = 0;
    for (const auto& [_, pr] : t.entries) total += pr;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  }

  // row-permuted panel gives a bit-identical probability table
  OfficePanel swapped = p;
  for (std::uint32_t c = 0; c < p.cols(); ++c)
    for (std::uint32_t r = 0; r < p.rows(); ++r)
      std::copy(p.value(1 - r, c), p.value(1 - r, c) + p.dim, swapped.value(r, c));
  OfficeProbabilities probs2 = assignment_probabilities(swapped);
  for (std::uint32_t c = 0; c < p.cols(); ++c) {
    REQUIRE(probs.tables[c].entries.size() == probs2.tables[c].entries.size());
    for (std::size_t e = 0; e < probs.tables[c].entries.size(); ++e) {
      CHECK(probs.tables[c].entries[e].first == probs2.tables[c].entries[e].first);
      CHECK(probs.tables[c].entries[e].second == probs2.tables[c].entries[e].second);
    }
  }
}

TEST_CASE("assignment probabilities: four-row column and empty panel") {
  std::vector<NodeRecord> roster;
  for (int i = 0; i < 5; ++i)
    roster.push_back(testutil::node(std::to_string(i), "o", i < 4));
  auto net = TemporalNetwork::build_indexed(
      roster, {{0, 4}, {1, 4}}, {});  // hires 0,1 tied to senior 4
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  // indirect flag of (i, 4) is 0 for everyone (4 is the only senior)
  OfficePanel p = treatment_matrix(net, "o", {0, 1, 2, 3}, {4}, spec);
  // rewrite values by hand to {1,1,0,0}
  p.value(0, 0)[1] = 1;
  p.value(1, 0)[1] = 1;
  OfficeProbabilities probs = assignment_probabilities(p);
  CHECK(probs.tables[0].prob_of({1, 1}) == 0.5);
  CHECK(probs.tables[0].prob_of({1, 0}) == 0.5);

  OfficePanel empty;
  CHECK_THROWS_AS(assignment_probabilities(empty), ValidationError);
}

TEST_CASE("column multisets are invariant under group elements") {
  auto w = testutil::random_world(21);
  std::vector<TreatmentStat> spec{{StatKind::indirect_count, false, {}}};
  PanelSet ps = assemble_panels(w.net, w.plan, spec);
  for (std::uint64_t k = 0; k < 10; ++k) {
    Permutation pi = sample_permutation(w.plan, k);
    auto node_map = pi.to_node_map(w.plan, w.net.n());
    PanelSet qs = assemble_panels(w.net.apply_permutation(node_map), w.plan, spec);
    for (std::size_t o = 0; o < ps.panels.size(); ++o) {
      const auto& a = ps.panels[o];
      const auto& b = qs.panels[o];
      for (std::uint32_t c = 0; c < a.cols(); ++c) {
        std::multiset<double> ma, mb;
        for (std::uint32_t r = 0; r < a.rows(); ++r) {
          ma.insert(a.value(r, c)[1]);
          mb.insert(b.value(r, c)[1]);
        }
        CHECK(ma == mb);
      }
    }
  }
}
