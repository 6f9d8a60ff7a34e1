#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "netform/estimate.hpp"
#include "netform/synth.hpp"
#include "naive_ref.hpp"
#include "testutil.hpp"

using namespace netform;
using testutil::two_hire_net;

namespace {

// Hires 1,2; candidate 3 via intermediary 5; Y_13 = 1, Y_23 = 0.
EstimationSample two_hire_sample(SampleMode mode) {
  auto net = two_hire_net({{"1", "5"}, {"5", "3"}}, {{"1", "3"}});
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  std::vector<OfficePanel> panels{treatment_matrix(net, "hq", {0, 1}, {2, 3}, spec)};
  auto shared = std::make_shared<const std::vector<OfficePanel>>(std::move(panels));
  return build_sample(shared, mode);
}

OfficeFit fit_with_est(EstimatorKind kind, std::uint32_t rows,
                       std::vector<double> est) {
  OfficeFit f;
  f.kind = kind;
  f.rows = rows;
  f.dim = static_cast<std::uint32_t>(est.size());
  f.estimate = std::move(est);
  return f;
}

SyntheticWorld small_world(std::uint64_t seed, EstimatorKind kind) {
  WorldConfig cfg;
  cfg.office_sizes = {3, 4};
  cfg.seniors_per_office = 10;
  cfg.team_size_min = 3;
  cfg.team_size_max = 4;
  cfg.senior_edge_prob = 0.3;
  cfg.treatments = {{StatKind::indirect_flag, false, {}}};
  cfg.delta = {-0.6, 0.9};
  cfg.seed = seed;
  cfg.validate_ipw = kind == EstimatorKind::ipw;
  cfg.validate_late = kind == EstimatorKind::within;
  return generate_world(cfg);
}

}  // namespace

TEST_CASE("IPW fit solves the weighted normal equations (hand example)") {
  EstimationSample s = two_hire_sample(SampleMode::ipw);
  OfficeFit fit = ipw_fit(s, 0);
  REQUIRE(fit.dim == 2);
  CHECK(fit.estimate[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.estimate[1] == doctest::Approx(1.0).epsilon(1e-12));

  // B table from the hand calculation: C = [[.5,-.5],[-.5,1]]
  REQUIRE(fit.has_table);
  auto entry = [&](int i, int ip) { return fit.table_entry(i, ip); };
  CHECK(entry(0, 0)[0] == doctest::Approx(0.0));
  CHECK(entry(0, 0)[1] == doctest::Approx(1.0));
  CHECK(entry(0, 1)[0] == doctest::Approx(0.0));
  CHECK(entry(0, 1)[1] == doctest::Approx(0.0));
  CHECK(entry(1, 0)[0] == doctest::Approx(1.0));
  CHECK(entry(1, 0)[1] == doctest::Approx(-1.0));
  CHECK(entry(1, 1)[0] == doctest::Approx(0.0));
  CHECK(entry(1, 1)[1] == doctest::Approx(0.0));
}

TEST_CASE("degenerate outcomes") {
  // Y == 0 everywhere
  auto net0 = two_hire_net({{"1", "5"}, {"5", "3"}});
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  std::vector<OfficePanel> p0{treatment_matrix(net0, "hq", {0, 1}, {2, 3}, spec)};
  auto s0 = build_sample(std::make_shared<const std::vector<OfficePanel>>(std::move(p0)),
                         SampleMode::ipw);
  OfficeFit f0 = ipw_fit(s0, 0);
  CHECK(std::abs(f0.estimate[0]) < 1e-14);
  CHECK(std::abs(f0.estimate[1]) < 1e-14);

  // Y == 1 everywhere: intercept 1, slope 0
  auto net1 = two_hire_net({{"1", "5"}, {"5", "3"}},
                           {{"1", "3"}, {"2", "3"}, {"1", "4"}, {"2", "4"}});
  std::vector<OfficePanel> p1{treatment_matrix(net1, "hq", {0, 1}, {2, 3}, spec)};
  auto s1 = build_sample(std::make_shared<const std::vector<OfficePanel>>(std::move(p1)),
                         SampleMode::ipw);
  OfficeFit f1 = ipw_fit(s1, 0);
  CHECK(f1.estimate[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(f1.estimate[1]) < 1e-12);
}

TEST_CASE("within fit equals the IPW solution on the single-column example") {
  EstimationSample s = two_hire_sample(SampleMode::late);
  OfficeFit fit = within_fit(s, 0);
  CHECK(fit.estimate[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.estimate[1] == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(fit.has_table);
  CHECK(fit.table_entry(1, 0)[0] == doctest::Approx(1.0));
  CHECK(fit.table_entry(1, 0)[1] == doctest::Approx(-1.0));
}

TEST_CASE("duplicated columns average to the single-column coefficient") {
  auto net = two_hire_net({{"1", "5"}, {"5", "3"}, {"5", "4"}},
                          {{"1", "3"}, {"1", "4"}});
  std::vector<TreatmentStat> spec{{StatKind::indirect_flag, false, {}}};
  std::vector<OfficePanel> panels{treatment_matrix(net, "hq", {0, 1}, {2, 3}, spec)};
  auto s = build_sample(std::make_shared<const std::vector<OfficePanel>>(std::move(panels)),
                        SampleMode::late);
  REQUIRE(s.offices[0].cols() == 2);
  OfficeFit fit = within_fit(s, 0);
  CHECK(fit.estimate[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.estimate[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("permuted estimate: identity, swap, and bijection check") {
  EstimationSample s = two_hire_sample(SampleMode::ipw);
  OfficeFit fit = ipw_fit(s, 0);
  auto id = permuted_estimate(fit, {0, 1});
  CHECK(id[0] == doctest::Approx(fit.estimate[0]).epsilon(1e-14));
  CHECK(id[1] == doctest::Approx(fit.estimate[1]).epsilon(1e-14));
  auto sw = permuted_estimate(fit, {1, 0});
  CHECK(sw[1] == doctest::Approx(-1.0).epsilon(1e-12));  // hand-solved swap
  CHECK_THROWS_AS(permuted_estimate(fit, {0, 0}), ValidationError);
  CHECK_THROWS_AS(permuted_estimate(fit, {0}), ValidationError);
}

TEST_CASE("lookup tables agree with from-scratch refits on random worlds") {
  for (auto kind : {EstimatorKind::ipw, EstimatorKind::within}) {
    SyntheticWorld world = small_world(kind == EstimatorKind::ipw ? 100 : 101, kind);
    auto panels = assemble_world_panels(world);
    SampleMode mode = kind == EstimatorKind::ipw ? SampleMode::ipw : SampleMode::late;
    EstimationSample s = build_sample(panels, mode);
    AggregateFit agg = fit_all(s, kind);
    for (std::uint32_t o = 0; o < s.offices.size(); ++o) {
      const std::uint32_t m = s.offices[o].rows();
      for (std::uint64_t k = 0; k < 25; ++k) {
        Permutation pi = sample_rows_permutation({m}, 5000 + o, k);
        auto fast = permuted_estimate(agg.fits[o], pi.rows[0]);
        auto slow = kind == EstimatorKind::ipw
                        ? naive::ipw_refit(s.offices[o], pi.rows[0])
                        : naive::within_refit(s.offices[o], pi.rows[0]);
        for (std::uint32_t c = 0; c < agg.dim; ++c)
          CHECK(fast[c] == doctest::Approx(slow[c]).epsilon(1e-10));
        // library refit path must match its own tables
        auto refit = permuted_refit(s, o, agg.fits[o], pi.rows[0]);
        for (std::uint32_t c = 0; c < agg.dim; ++c)
          CHECK(fast[c] == doctest::Approx(refit[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("diagonal identity: sum_i table[i][i] reproduces the fit") {
  for (auto kind : {EstimatorKind::ipw, EstimatorKind::within}) {
    SyntheticWorld world = small_world(kind == EstimatorKind::ipw ? 102 : 103, kind);
    auto panels = assemble_world_panels(world);
    SampleMode mode = kind == EstimatorKind::ipw ? SampleMode::ipw : SampleMode::late;
    EstimationSample s = build_sample(panels, mode);
    AggregateFit agg = fit_all(s, kind);
    for (const auto& f : agg.fits) {
      std::vector<double> diag(f.dim, 0.0);
      for (std::uint32_t i = 0; i < f.rows; ++i)
        for (std::uint32_t c = 0; c < f.dim; ++c) diag[c] += f.table_entry(i, i)[c];
      for (std::uint32_t c = 0; c < f.dim; ++c)
        CHECK(std::abs(diag[c] - f.estimate[c]) < 1e-12);
    }
  }
}

TEST_CASE("IPW slope equals the difference of weighted outcome means") {
  // dual algebraic route for a saturated binary treatment: on a validated
  // sample every column carries both levels, so sum 1/P over a level is m*J
  // in every office and the regression slope reduces to
  //   [sum_{d=1} Y/P - sum_{d=0} Y/P] / (m*J).
  for (std::uint64_t seed : {200ull, 201ull, 202ull}) {
    SyntheticWorld world = small_world(seed, EstimatorKind::ipw);
    auto panels = assemble_world_panels(world);
    EstimationSample s = build_sample(panels, SampleMode::ipw);
    AggregateFit agg = fit_all(s, EstimatorKind::ipw);
    for (std::uint32_t o = 0; o < s.offices.size(); ++o) {
      const OfficeSample& os = s.offices[o];
      double treated = 0, control = 0;
      for (std::uint32_t c = 0; c < os.cols(); ++c)
        for (std::uint32_t r = 0; r < os.rows(); ++r) {
          if (!os.outcome(r, c)) continue;
          double w = 1.0 / os.weight(r, c);
          if (os.value(r, c)[1] == 1.0)
            treated += w;
          else
            control += w;
        }
      double cells = static_cast<double>(os.rows()) * os.cols();
      double slope = (treated - control) / cells;
      CHECK(agg.fits[o].estimate[1] == doctest::Approx(slope).epsilon(1e-10));
      // intercept is the weighted control mean
      CHECK(agg.fits[o].estimate[0] == doctest::Approx(control / cells).epsilon(1e-10));
    }
  }
}

TEST_CASE("pooled weighted Gram is invariant across group elements") {
  SyntheticWorld world = small_world(104, EstimatorKind::ipw);
  auto panels = assemble_world_panels(world);
  EstimationSample s = build_sample(panels, SampleMode::ipw);
  auto gram_of = [&](const OfficeSample& os,
                     const std::vector<std::uint32_t>& perm) {
    std::vector<double> g(static_cast<std::size_t>(os.dim) * os.dim, 0.0);
    for (std::uint32_t c = 0; c < os.cols(); ++c)
      for (std::uint32_t r = 0; r < os.rows(); ++r) {
        const double* v = os.value(perm[r], c);
        double w = 1.0 / os.weight(perm[r], c);
        for (std::uint32_t a = 0; a < os.dim; ++a)
          for (std::uint32_t b = 0; b < os.dim; ++b)
            g[a * os.dim + b] += w * v[a] * v[b];
      }
    return g;
  };
  for (const auto& os : s.offices) {
    std::vector<std::uint32_t> id(os.rows());
    for (std::uint32_t r = 0; r < os.rows(); ++r) id[r] = r;
    auto base = gram_of(os, id);
    for (std::uint64_t k = 0; k < 10; ++k) {
      Permutation pi = sample_rows_permutation({os.rows()}, 7, k);
      auto g = gram_of(os, pi.rows[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g[i] == doctest::Approx(base[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("aggregate: weighted averages across offices") {
  // single office: aggregate equals the office estimate
  AggregateFit one = aggregate({fit_with_est(EstimatorKind::within, 4, {0.0, 1.0})});
  CHECK(one.estimate[1] == 1.0);
  CHECK(one.fits[0].weight == 1.0);

  // equal weights: (0,1) and (0,3) -> (0,2)
  AggregateFit two = aggregate({fit_with_est(EstimatorKind::within, 3, {0.0, 1.0}),
                                fit_with_est(EstimatorKind::within, 3, {0.0, 3.0})});
  CHECK(two.estimate[1] == doctest::Approx(2.0).epsilon(1e-15));

  // weights 2/5 and 3/5 with estimates 5 and 0 -> 2
  AggregateFit wtd = aggregate({fit_with_est(EstimatorKind::within, 2, {5.0}),
                                fit_with_est(EstimatorKind::within, 3, {0.0})});
  CHECK(wtd.estimate[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(wtd.total_hires == 5);
  CHECK(wtd.office_count == 2);

  CHECK_THROWS_AS(aggregate({fit_with_est(EstimatorKind::within, 2, {1.0}),
                             fit_with_est(EstimatorKind::within, 2, {1.0, 2.0})}),
                  ValidationError);
  CHECK_THROWS_AS(aggregate({}), ValidationError);
}

TEST_CASE("memory guard: refit path matches the table path") {
  SyntheticWorld world = small_world(105, EstimatorKind::within);
  auto panels = assemble_world_panels(world);
  EstimationSample s = build_sample(panels, SampleMode::late);
  FitOptions tiny;
  tiny.table_budget = 1;  // force the guard
  AggregateFit lean = fit_all(s, EstimatorKind::within, tiny);
  CHECK_FALSE(lean.fits[0].has_table);
  REQUIRE(!lean.notes.empty());
  AggregateFit full = fit_all(s, EstimatorKind::within);
  for (std::uint64_t k = 0; k < 10; ++k) {
    Permutation pi = sample_rows_permutation(full.office_rows(), 3, k);
    auto a = permuted_aggregate(lean, s, pi);
    auto b = permuted_aggregate(full, s, pi);
    for (std::uint32_t c = 0; c < full.dim; ++c)
      CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
}

TEST_CASE("constant-effect null: shifted outcomes move the slope by delta") {
  SyntheticWorld world = small_world(106, EstimatorKind::within);
  auto panels = assemble_world_panels(world);
  EstimationSample s = build_sample(panels, SampleMode::late);
  AggregateFit base = fit_all(s, EstimatorKind::within);
  FitOptions shifted;
  shifted.shift = OutcomeShift{1, 0.25};
  AggregateFit moved = fit_all(s, EstimatorKind::within, shifted);
  CHECK(moved.estimate[1] ==
        doctest::Approx(base.estimate[1] - 0.25).epsilon(1e-10));
  // refit path honors the recorded shift
  for (std::uint32_t o = 0; o < s.offices.size(); ++o) {
    Permutation pi = sample_rows_permutation({s.offices[o].rows()}, 19, o);
    auto fast = permuted_estimate(moved.fits[o], pi.rows[0]);
    auto slow = permuted_refit(s, o, moved.fits[o], pi.rows[0]);
    for (std::uint32_t c = 0; c < moved.dim; ++c)
      CHECK(fast[c] == doctest::Approx(slow[c]).epsilon(1e-12));
  }
}
