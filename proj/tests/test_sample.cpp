#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "netform/sample.hpp"
#include "testutil.hpp"

using namespace netform;
using testutil::two_hire_net;

namespace {

std::shared_ptr<const std::vector<OfficePanel>> indirect_flag_panels() {
  auto net = two_hire_net({{"1", "5"}, {"5", "3"}}, {{"1", "3"}});
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  std::vector<OfficePanel> panels{treatment_matrix(net, "hq", {0, 1}, {2, 3}, spec)};
  return std::make_shared<const std::vector<OfficePanel>>(std::move(panels));
}

std::uint64_t pairs_dropped(const EstimationSample& s, DropReason r) {
  std::uint64_t total = 0;
  for (const auto& rec : s.drops)
    if (rec.reason == r) total += rec.pairs;
  return total;
}

}  // namespace

TEST_CASE("IPW support rule reproduces the maximal edge set") {
  EstimationSample s = build_sample(indirect_flag_panels(), SampleMode::ipw);
  REQUIRE(s.offices.size() == 1);
  const OfficeSample& os = s.offices[0];
  CHECK(os.rows() == 2);
  REQUIRE(os.cols() == 1);
  CHECK(os.candidates[0] == 2);  // column 3 kept, column 4 all-zero dropped
  CHECK(s.retained_pairs == 2);
  CHECK(pairs_dropped(s, DropReason::column_no_full_support) == 2);
  // office support is the union {(1,0), (1,1)}
  REQUIRE(os.support.size() == 2);
  // realized weights are the column frequencies
  CHECK(os.weight(0, 0) == 0.5);
  CHECK(os.weight(1, 0) == 0.5);
  CHECK(os.outcome(0, 0));
  CHECK_FALSE(os.outcome(1, 0));
}

TEST_CASE("constant treatment everywhere: no identifying variation") {
  auto net = two_hire_net({});  // no period-1 ties at all
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  std::vector<OfficePanel> panels{treatment_matrix(net, "hq", {0, 1}, {2, 3}, spec)};
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(panels));
  CHECK_THROWS_WITH_AS(build_sample(shared, SampleMode::ipw),
                       doctest::Contains("no identifying variation"), ValidationError);
  CHECK_THROWS_AS(build_sample(shared, SampleMode::late), ValidationError);
}

TEST_CASE("LATE rank rule: two distinct values keep a column") {
  EstimationSample s = build_sample(indirect_flag_panels(), SampleMode::late);
  REQUIRE(s.offices.size() == 1);
  CHECK(s.offices[0].cols() == 1);  // constant column has a singular Gram
  CHECK(pairs_dropped(s, DropReason::column_singular_gram) == 2);
}

TEST_CASE("continuous treatments are rejected in IPW mode") {
  //  density values are fractional
  auto net = two_hire_net({{"1", "4"},
                           {"1", "5"},
                           {"1", "6"},
                           {"4", "5"},
                           {"2", "5"},
                           {"2", "6"}});
  std::vector<TreatmentStat> spec{{StatKind::density, false, {}}};
  std::vector<OfficePanel> panels{treatment_matrix(net, "hq", {0, 1}, {2}, spec)};
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(panels));
  CHECK_THROWS_WITH_AS(build_sample(shared, SampleMode::ipw),
                       doctest::Contains("LATE"), ValidationError);
  // same data is fine for the within-regression
  EstimationSample s = build_sample(shared, SampleMode::late);
  CHECK(s.offices.size() == 1);
}

TEST_CASE("offices with a single usable hire are dropped") {
  auto w = testutil::random_world(3, 2, 3, 5, 0.5);
  std::vector<TreatmentStat> spec{{StatKind::indirect_count, false, {}}};
  PanelSet ps = assemble_panels(w.net, w.plan, spec);
  // keep one hire in office 0
  ps.panels[0].row_flags[0] = RowFlag::filtered;
  ps.panels[0].row_flags[1] = RowFlag::filtered;
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(ps.panels));
  EstimationSample s = build_sample(shared, SampleMode::late);
  CHECK(s.offices.size() == 1);
  bool saw_office_drop = false;
  for (const auto& rec : s.drops)
    saw_office_drop |= rec.reason == DropReason::office_too_few_hires;
  CHECK(saw_office_drop);
}

TEST_CASE("density-undefined rows leave the randomization set") {
  // hire 1 has degree 1 -> undefined; hire 2 and 3-ish fine
  std::vector<NodeRecord> roster;
  roster.push_back(testutil::node("a", "o", true));
  roster.push_back(testutil::node("b", "o", true));
  roster.push_back(testutil::node("c", "o", true));
  roster.push_back(testutil::node("x"));
  roster.push_back(testutil::node("y"));
  roster.push_back(testutil::node("z"));
  auto net = TemporalNetwork::build(
      roster,
      {{"a", "x"}, {"b", "x"}, {"b", "y"}, {"c", "x"}, {"c", "z"}, {"x", "y"}},
      {{"b", "z"}});
  std::vector<TreatmentStat> spec{{StatKind::density, false, {}}};
  std::vector<OfficePanel> panels{
      treatment_matrix(net, "o", {0, 1, 2}, {3, 4, 5}, spec)};
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(panels));
  EstimationSample s = build_sample(shared, SampleMode::late);
  REQUIRE(s.offices.size() == 1);
  CHECK(s.offices[0].rows() == 2);  // hire a excluded
  CHECK(pairs_dropped(s, DropReason::row_density_undefined) == 3);
}

TEST_CASE("drop-log conservation: input = retained + dropped") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto w = testutil::random_world(seed, 3, 3, 6, 0.3);
    std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
    PanelSet ps = assemble_panels(w.net, w.plan, spec);
    auto shared =
        std::make_shared<const std::vector<OfficePanel>>(std::move(ps.panels));
    for (SampleMode mode : {SampleMode::ipw, SampleMode::late}) {
      try {
        EstimationSample s = build_sample(shared, mode);
        CHECK(s.input_pairs == s.retained_pairs + s.dropped_pairs());
      } catch (const ValidationError&) {
        // everything dropped is a legal outcome for sparse draws
      }
    }
  }
}

TEST_CASE("restrict_sample: identity filter and subgroup derivation") {
  auto w = testutil::random_world(9, 2, 4, 6, 0.4);
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  PanelSet ps = assemble_panels(w.net, w.plan, spec);
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(ps.panels));
  EstimationSample s = build_sample(shared, SampleMode::late);

  EstimationSample same = restrict_sample(s, nullptr, nullptr);
  REQUIRE(same.offices.size() == s.offices.size());
  for (std::size_t o = 0; o < s.offices.size(); ++o) {
    CHECK(same.offices[o].hires == s.offices[o].hires);
    CHECK(same.offices[o].candidates == s.offices[o].candidates);
  }

  // keep only even-indexed hires; reruns support validation on the subset
  auto even = [&](std::uint32_t u) { return u % 2 == 0; };
  try {
    EstimationSample sub = restrict_sample(s, even, nullptr);
    for (const auto& os : sub.offices) {
      CHECK(os.rows() >= 2);
      for (std::uint32_t u : os.hires) CHECK(u % 2 == 0);
    }
    CHECK(sub.input_pairs == sub.retained_pairs + sub.dropped_pairs());
  } catch (const ValidationError&) {
    // acceptable when the filter starves every office
  }

  // a filter leaving one hire per office has no identifying variation
  auto first_only = [&](std::uint32_t u) {
    for (const auto& office : w.plan.offices)
      if (office.I[0] == u) return true;
    return false;
  };
  CHECK_THROWS_AS(restrict_sample(s, first_only, nullptr), ValidationError);
}

TEST_CASE("weights lie in (0,1] on validated IPW samples") {
  for (std::uint64_t seed = 40; seed < 48; ++seed) {
    auto w = testutil::random_world(seed, 2, 4, 6, 0.35);
    std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
    PanelSet ps = assemble_panels(w.net, w.plan, spec);
    auto shared =
        std::make_shared<const std::vector<OfficePanel>>(std::move(ps.panels));
    try {
      EstimationSample s = build_sample(shared, SampleMode::ipw);
      for (const auto& os : s.offices)
        for (std::uint32_t c = 0; c < os.cols(); ++c)
          for (std::uint32_t r = 0; r < os.rows(); ++r) {
            CHECK(os.weight(r, c) > 0.0);
            CHECK(os.weight(r, c) <= 1.0);
          }
    } catch (const ValidationError&) {
    }
  }
}
