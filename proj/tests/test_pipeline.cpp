#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "netform/pipeline.hpp"

using namespace netform;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/netform_" + name; }

void put(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_small_dataset() {
  put(tmp_path("nodes.csv"),
      "node_id,office,new_hire,female,top20\n"
      "h1,NY-2016,1,1,0\n"
      "h2,NY-2016,1,0,\n"
      "s1,,0,,\n"
      "s2,,0,,\n"
      "m1,,0,,\n");
  put(tmp_path("e1.csv"),
      "src,dst\n"
      "h1,m1\n"
      "m1,s1\n"
      "m1,s1\n");  // duplicate line
  put(tmp_path("e2.csv"),
      "src,dst\n"
      "h1,s1\n");
}

SyntheticWorld make_world(std::uint64_t seed) {
  WorldConfig cfg;
  cfg.office_sizes = {3, 4};
  cfg.seniors_per_office = 10;
  cfg.team_size_min = 3;
  cfg.team_size_max = 4;
  cfg.senior_edge_prob = 0.3;
  cfg.treatments = {{StatKind::indirect_flag, false, {}}};
  cfg.delta = {-0.7, 1.0};
  cfg.seed = seed;
  return generate_world(cfg);
}

}  // namespace

TEST_CASE("load_inputs: roster, strata, dedup counts") {
  write_small_dataset();
  LoadedData data = load_inputs(tmp_path("nodes.csv"), tmp_path("e1.csv"),
                                tmp_path("e2.csv"));
  CHECK(data.summary.nodes == 5);
  CHECK(data.summary.hires == 2);
  CHECK(data.summary.offices == 1);
  CHECK(data.summary.edges1_rows == 3);
  CHECK(data.summary.edges1_unique == 2);  // duplicate collapsed
  REQUIRE(data.plan.offices.size() == 1);
  CHECK(data.plan.offices[0].office_id == "NY-2016");
  CHECK(data.plan.offices[0].I.size() == 2);
  CHECK(data.plan.offices[0].J.size() == 3);
  // covariates parsed, empty cell means missing
  CHECK(data.net.node(0).covariates.at("female") == 1.0);
  CHECK(data.net.node(1).covariates.count("top20") == 0);
}

TEST_CASE("load_inputs: malformed rows carry line numbers") {
  write_small_dataset();
  put(tmp_path("bad_nodes.csv"),
      "node_id,office,new_hire\n"
      "h1,NY,1\n"
      "h2,NY\n");  // wrong field count at line 3
  CHECK_THROWS_WITH_AS(
      load_inputs(tmp_path("bad_nodes.csv"), tmp_path("e1.csv"), tmp_path("e2.csv")),
      doctest::Contains("line 3"), ValidationError);

  put(tmp_path("orphan.csv"),
      "node_id,office,new_hire\n"
      "h1,,1\n"
      "s1,,0\n");  // new hire without office at line 2
  CHECK_THROWS_WITH_AS(
      load_inputs(tmp_path("orphan.csv"), tmp_path("e1.csv"), tmp_path("e2.csv")),
      doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("estimate on an exported world matches the oracle's realized fit") {
  SyntheticWorld world = make_world(500);
  put(tmp_path("world.json"), world_to_json(world));

  RunConfig cfg;
  cfg.world_path = tmp_path("world.json");
  cfg.mode = SampleMode::late;
  cfg.enumerate = true;
  cfg.seed = world.config.seed;
  cfg.out_base = "";
  EstimateReport rep = run_estimate(cfg);

  OracleReport oracle = run_oracle(world, EstimatorKind::within);
  REQUIRE(rep.coefficients.size() == oracle.realized_estimate.size());
  for (std::size_t k = 0; k < oracle.realized_estimate.size(); ++k)
    CHECK(rep.coefficients[k].estimate == oracle.realized_estimate[k]);
  CHECK(rep.edges == oracle.retained_pairs);
  CHECK(rep.new_hires == oracle.total_hires);
  CHECK(rep.offices == oracle.office_count);
}

TEST_CASE("reports reproduce byte-for-byte and round-trip through JSON") {
  SyntheticWorld world = make_world(501);
  put(tmp_path("world2.json"), world_to_json(world));

  RunConfig cfg;
  cfg.world_path = tmp_path("world2.json");
  cfg.mode = SampleMode::late;
  cfg.permutations = 400;
  cfg.seed = 9;
  cfg.out_base = tmp_path("rep_a");
  cfg.format = "json";
  EstimateReport a = run_estimate(cfg);
  std::string json_first = slurp(tmp_path("rep_a.json"));
  EstimateReport b = run_estimate(cfg);  // identical config, fresh run
  std::string json_second = slurp(tmp_path("rep_a.json"));

  CHECK(render_report_csv(a) == render_report_csv(b));
  EstimateReport pa = parse_report_json(json_first);
  EstimateReport pb = parse_report_json(json_second);
  pa.generated_at = pb.generated_at = "";
  CHECK(render_report_json(pa) == render_report_json(pb));

  // exact round-trip of every floating value
  for (std::size_t k = 0; k < a.coefficients.size(); ++k) {
    CHECK(pa.coefficients[k].estimate == a.coefficients[k].estimate);
    CHECK(pa.coefficients[k].p_one_sided == a.coefficients[k].p_one_sided);
    CHECK(pa.coefficients[k].p_two_sided == a.coefficients[k].p_two_sided);
    REQUIRE(pa.coefficients[k].se.has_value());
    CHECK(*pa.coefficients[k].se == *a.coefficients[k].se);
    REQUIRE(pa.coefficients[k].ci.has_value());
    CHECK(pa.coefficients[k].ci->lo == a.coefficients[k].ci->lo);
    CHECK(pa.coefficients[k].ci->hi == a.coefficients[k].ci->hi);
  }
  // histogram files exist with the pinned schema
  std::string hist = slurp(a.coefficients[1].histogram_path);
  CHECK(hist.rfind("draw_index,statistic\n", 0) == 0);
}

TEST_CASE("drop-log conservation flows through the report") {
  WorldConfig wc;
  wc.office_sizes = {8, 8, 8};
  wc.seniors_per_office = 12;
  wc.team_size_min = 3;
  wc.team_size_max = 4;
  wc.senior_edge_prob = 0.3;
  wc.treatments = {{StatKind::indirect_flag, false, {}}};
  wc.delta = {-0.7, 1.0};
  wc.seed = 502;
  put(tmp_path("world3.json"), world_to_json(generate_world(wc)));
  RunConfig cfg;
  cfg.world_path = tmp_path("world3.json");
  cfg.mode = SampleMode::late;
  cfg.permutations = 50;
  cfg.filter_i = "grp_a=1";  // forces row_filtered drops
  EstimateReport rep = run_estimate(cfg);
  CHECK(rep.input_pairs == rep.edges + rep.dropped_pairs());
  bool saw_filter = false;
  for (const auto& d : rep.drop_log) saw_filter |= d.reason == "row_filtered";
  CHECK(saw_filter);
}

TEST_CASE("placebo report mirrors the placebo-table row shape") {
  SyntheticWorld world = make_world(503);
  put(tmp_path("world4.json"), world_to_json(world));
  RunConfig cfg;
  cfg.world_path = tmp_path("world4.json");
  cfg.mode = SampleMode::late;
  cfg.permutations = 200;
  cfg.placebo = "grp_a";
  EstimateReport rep = run_estimate(cfg);
  CHECK(rep.outcome == "grp_a");
  CHECK(rep.new_hires > 0);
  CHECK(rep.offices > 0);
  CHECK(rep.edges > 0);
  for (const auto& c : rep.coefficients) {
    CHECK(c.se.has_value());  // (SE)
    CHECK(c.p_one_sided >= 0.0);  // [p]
  }
  std::string csv = render_report_csv(rep);
  CHECK(csv.find("grp_a,") != std::string::npos);

  cfg.placebo = "missing_everywhere";
  CHECK_THROWS_AS(run_estimate(cfg), ValidationError);
}

TEST_CASE("single-office runs omit SE with a warning instead of failing") {
  WorldConfig wc;
  wc.office_sizes = {4};
  wc.seniors_per_office = 10;
  wc.senior_edge_prob = 0.3;
  wc.treatments = {{StatKind::indirect_flag, false, {}}};
  wc.delta = {-0.7, 1.0};
  wc.seed = 777;
  SyntheticWorld world = generate_world(wc);
  put(tmp_path("world5.json"), world_to_json(world));
  RunConfig cfg;
  cfg.world_path = tmp_path("world5.json");
  cfg.mode = SampleMode::late;
  cfg.enumerate = true;
  EstimateReport rep = run_estimate(cfg);
  CHECK_FALSE(rep.coefficients[0].se.has_value());
  CHECK_FALSE(rep.coefficients[0].ci.has_value());
  bool warned = false;
  for (const auto& w : rep.warnings)
    warned |= w.find("single office") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("validation failures surface as typed errors") {
  RunConfig none;
  CHECK_THROWS_AS(run_estimate(none), ValidationError);  // no inputs at all

  SyntheticWorld world = make_world(504);
  put(tmp_path("world6.json"), world_to_json(world));
  RunConfig cfg;
  cfg.world_path = tmp_path("world6.json");
  cfg.level = 1.2;
  CHECK_THROWS_AS(run_estimate(cfg), ValidationError);

  cfg.level = 0.95;
  cfg.enumerate = true;
  cfg.enum_cap = 2;  // group order 3!*4! = 144 exceeds this
  CHECK_THROWS_AS(run_estimate(cfg), CapExceededError);
}

TEST_CASE("simulate writes replayable worlds and oracle reports") {
  SimulateConfig sim;
  sim.world.office_sizes = {2, 3};
  sim.world.seniors_per_office = 8;
  sim.world.senior_edge_prob = 0.35;
  sim.world.treatments = {{StatKind::indirect_flag, false, {}}};
  sim.world.delta = {-0.6, 0.0};
  sim.world.seed = 41;
  sim.kind = EstimatorKind::within;
  sim.world.validate_ipw = false;
  sim.out_world = tmp_path("sim_world.json");
  sim.out_report = tmp_path("sim_oracle.json");
  SimulateResult res = run_simulate(sim);
  CHECK(res.oracle_ran);
  CHECK(res.oracle.group_order == 12);
  // sharp-null world: enumerated mean of the slope vanishes
  CHECK(std::abs(res.oracle.enumerated_mean[1]) <= 1e-10);

  // same seed, byte-identical world file
  SimulateResult res2 = run_simulate(sim);
  (void)res2;
  std::string w1 = slurp(tmp_path("sim_world.json"));
  SimulateConfig sim_b = sim;
  sim_b.out_world = tmp_path("sim_world_b.json");
  run_simulate(sim_b);
  CHECK(w1 == slurp(tmp_path("sim_world_b.json")));

  // a 4,4 design enumerates 576 permutations
  SimulateConfig ff = sim;
  ff.world.office_sizes = {4, 4};
  ff.world.seed = 43;
  ff.out_world = tmp_path("sim_ff.json");
  ff.out_report = "";
  SimulateResult res44 = run_simulate(ff);
  CHECK(res44.oracle.group_order == 576);

  // cap exceeded without the fallback flag
  SimulateConfig big = sim;
  big.world.office_sizes = {9, 9};
  big.enum_cap = 1000;
  big.out_world = tmp_path("sim_big.json");
  big.out_report = "";
  CHECK_THROWS_AS(run_simulate(big), CapExceededError);
  big.monte_carlo = true;
  big.permutations = 200;
  SimulateResult mc = run_simulate(big);
  CHECK(mc.oracle_ran);
  CHECK(mc.oracle.group_order == 0);  // sampled, not enumerated
}

TEST_CASE("reports are invariant to the worker count") {
  SyntheticWorld world = make_world(506);
  put(tmp_path("world8.json"), world_to_json(world));
  RunConfig cfg;
  cfg.world_path = tmp_path("world8.json");
  cfg.mode = SampleMode::late;
  cfg.permutations = 800;
  cfg.seed = 21;
  cfg.threads = 1;
  EstimateReport a = run_estimate(cfg);
  cfg.threads = 2;
  EstimateReport b = run_estimate(cfg);
  CHECK(render_report_csv(a) == render_report_csv(b));
  for (std::size_t k = 0; k < a.coefficients.size(); ++k) {
    CHECK(a.coefficients[k].estimate == b.coefficients[k].estimate);
    CHECK(a.coefficients[k].p_one_sided == b.coefficients[k].p_one_sided);
  }
}

TEST_CASE("Bonferroni cutoffs follow the family-size division") {
  SyntheticWorld world = make_world(505);
  put(tmp_path("world7.json"), world_to_json(world));
  RunConfig cfg;
  cfg.world_path = tmp_path("world7.json");
  cfg.mode = SampleMode::late;
  cfg.permutations = 100;
  cfg.level = 0.95;
  cfg.bonferroni = 9;
  EstimateReport rep = run_estimate(cfg);
  CHECK(rep.bonferroni_tests == 9);
  // two-sided test at the 5% level across 9 regressions
  CHECK(rep.bonferroni_lower == doctest::Approx(0.025 / 9).epsilon(1e-15));
  CHECK(rep.bonferroni_upper == doctest::Approx(1.0 - 0.025 / 9).epsilon(1e-15));
  // round-trips through JSON
  EstimateReport back = parse_report_json(render_report_json(rep));
  CHECK(back.bonferroni_lower == rep.bonferroni_lower);
  CHECK(back.bonferroni_upper == rep.bonferroni_upper);
}

TEST_CASE("predicate parsing") {
  write_small_dataset();
  LoadedData data = load_inputs(tmp_path("nodes.csv"), tmp_path("e1.csv"),
                                tmp_path("e2.csv"));
  auto female = parse_predicate("female=1", data.net);
  CHECK(female(0));
  CHECK_FALSE(female(1));
  auto office = parse_predicate("office=NY-2016", data.net);
  CHECK(office(0));
  CHECK_FALSE(office(2));
  auto both = parse_predicate("female=1,top20=0", data.net);
  CHECK(both(0));
  CHECK_FALSE(both(1));  // missing top20 fails the predicate
  CHECK_THROWS_AS(parse_predicate("female~1", data.net), ValidationError);
  CHECK_THROWS_AS(parse_predicate("office>NY", data.net), ValidationError);
}
