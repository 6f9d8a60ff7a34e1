#include "netform/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace netform {

namespace {

std::string now_iso8601() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write file: " + path);
  f << content;
}

struct Condition {
  std::string key, op;
  double num = 0.0;
  std::string text;
  bool numeric = true;
};

Condition parse_condition(const std::string& raw) {
  static const char* ops[] = {"!=", ">=", "<=", "=", ">", "<"};
  for (const char* op : ops) {
    auto pos = raw.find(op);
    if (pos == std::string::npos) continue;
    Condition c;
    c.key = raw.substr(0, pos);
    c.op = op;
    c.text = raw.substr(pos + std::string(op).size());
    try {
      c.num = std::stod(c.text);
    } catch (const std::exception&) {
      c.numeric = false;
    }
    if (c.key.empty() || c.text.empty())
      throw ValidationError("bad filter condition: " + raw);
    return c;
  }
  throw ValidationError("bad filter condition (no operator): " + raw);
}

bool compare(double lhs, const Condition& c) {
  if (c.op == "=") return lhs == c.num;
  if (c.op == "!=") return lhs != c.num;
  if (c.op == ">") return lhs > c.num;
  if (c.op == "<") return lhs < c.num;
  if (c.op == ">=") return lhs >= c.num;
  return lhs <= c.num;
}

}  // namespace

NodePredicate parse_predicate(const std::string& expr, const TemporalNetwork& net) {
  if (expr.empty()) return {};
  std::vector<Condition> conds;
  std::stringstream ss(expr);
  std::string tok;
  while (std::getline(ss, tok, ',')) conds.push_back(parse_condition(tok));
  for (const auto& c : conds)
    if (c.key == "office" && c.op != "=" && c.op != "!=")
      throw ValidationError("office filters support only = and != : " + expr);
  return [conds, &net](std::uint32_t u) {
    const NodeRecord& rec = net.node(u);
    for (const auto& c : conds) {
      if (c.key == "office") {
        bool eq = rec.office == c.text;
        if (c.op == "=" ? !eq : (c.op == "!=" ? eq : true))
          return false;  // only =/!= meaningful for strings
        continue;
      }
      double lhs;
      if (c.key == "new_hire") {
        lhs = rec.new_hire ? 1.0 : 0.0;
      } else {
        auto it = rec.covariates.find(c.key);
        if (it == rec.covariates.end()) return false;
        lhs = it->second;
      }
      if (!c.numeric) throw ValidationError("non-numeric filter value: " + c.text);
      if (!compare(lhs, c)) return false;
    }
    return true;
  };
}

std::string RunConfig::echo_json() const {
  nlohmann::json j;
  j["nodes"] = nodes_path;
  j["edges_t1"] = edges1_path;
  j["edges_t2"] = edges2_path;
  j["world"] = world_path;
  j["treatments"] = treatments;
  j["mode"] = mode == SampleMode::ipw ? "ipw" : "late";
  j["permutations"] = enumerate ? "enumerate" : std::to_string(permutations);
  j["enum_cap"] = enum_cap;
  j["seed"] = seed;
  j["level"] = level;
  j["format"] = format;
  j["filter_i"] = filter_i;
  j["filter_j"] = filter_j;
  j["placebo"] = placebo;
  j["null_shift"] = null_shift;
  j["count_hire_ties"] = count_hire_ties;
  j["bonferroni"] = bonferroni;
  return j.dump();
}

EstimateReport run_estimate(const RunConfig& config, const TemporalNetwork& net,
                            const DesignPlan& plan) {
  if (!(config.level > 0.0 && config.level < 1.0))
    throw ValidationError("confidence level must lie in (0,1)");
  if (!config.enumerate && config.permutations < 1)
    throw ValidationError("Monte Carlo mode requires at least one permutation");

  std::vector<TreatmentStat> stats = parse_treatment_list(config.treatments);
  TreatmentOptions topts;
  topts.count_hire_ties = config.count_hire_ties;
  PanelSet panel_set = assemble_panels(net, plan, stats, topts);

  EstimateReport report;
  report.outcome = config.placebo.empty() ? "tie_formed" : config.placebo;
  report.estimator = config.mode == SampleMode::ipw ? "ipw" : "within";
  report.level = config.level;
  report.seed = config.seed;
  report.config_echo = config.echo_json();
  report.generated_at = now_iso8601();

  for (std::size_t s = 0; s < stats.size(); ++s)
    if (panel_set.stats[s].binarize && !stats[s].threshold)
      report.warnings.push_back("median threshold resolved: " +
                                panel_set.stats[s].display_name() + " > " +
                                std::to_string(*panel_set.stats[s].threshold));

  if (!config.placebo.empty()) {
    std::uint64_t missing = 0;
    apply_placebo_outcome(panel_set.panels, net, config.placebo, &missing);
    if (missing > 0)
      report.warnings.push_back("placebo: " + std::to_string(missing) +
                                " hires dropped for missing covariate");
  }

  auto panels =
      std::make_shared<const std::vector<OfficePanel>>(std::move(panel_set.panels));
  EstimationSample sample = build_sample(panels, config.mode);
  if (!config.filter_i.empty() || !config.filter_j.empty())
    sample = restrict_sample(sample, parse_predicate(config.filter_i, net),
                             parse_predicate(config.filter_j, net));

  FitOptions fopts;
  if (!config.null_shift.empty()) {
    auto pos = config.null_shift.find('=');
    if (pos == std::string::npos)
      throw ValidationError("null shift must be <coefficient>=<delta>");
    std::string name = config.null_shift.substr(0, pos);
    double delta = std::stod(config.null_shift.substr(pos + 1));
    OutcomeShift shift;
    bool found = false;
    for (std::uint32_t k = 0; k < panel_set.coefficient_names.size(); ++k)
      if (panel_set.coefficient_names[k] == name) {
        shift.coef = k;
        found = true;
      }
    if (!found) throw ValidationError("unknown coefficient in null shift: " + name);
    shift.delta = delta;
    fopts.shift = shift;
    report.warnings.push_back("outcomes shifted for the constant-effect null: " +
                              config.null_shift);
  }

  EstimatorKind kind = config.mode == SampleMode::ipw ? EstimatorKind::ipw
                                                      : EstimatorKind::within;
  AggregateFit fit = fit_all(sample, kind, fopts, config.threads);
  for (const auto& note : fit.notes) report.warnings.push_back(note);

  PermPlan pplan;
  pplan.enumerate = config.enumerate;
  pplan.draws = config.permutations;
  pplan.cap = config.enum_cap;
  pplan.seed = config.seed;
  PermutationDraws draws = run_permutation_draws(fit, sample, pplan, config.threads);
  report.perm_mode = draws.mode == DrawMode::enumerated ? "enumerated" : "monte_carlo";
  report.n_draws = draws.n;

  std::vector<double> vhat;
  bool have_vhat = true;
  try {
    vhat = conservative_variance(fit);
  } catch (const ValidationError& e) {
    have_vhat = false;
    report.warnings.push_back(std::string(e.what()) +
                              "; SE and CI omitted from the report");
  }

  if (config.bonferroni > 0) {
    report.bonferroni_tests = config.bonferroni;
    double tail = (1.0 - config.level) / 2.0 / config.bonferroni;
    report.bonferroni_lower = tail;
    report.bonferroni_upper = 1.0 - tail;
  }
  report.new_hires = fit.total_hires;
  report.offices = fit.office_count;
  report.edges = sample.retained_pairs;
  report.input_pairs = sample.input_pairs;
  report.drop_log = summarize_drops(sample.drops);
  constexpr std::size_t kDetailCap = 200;
  for (std::size_t i = 0; i < sample.drops.size() && i < kDetailCap; ++i) {
    const DropRecord& rec = sample.drops[i];
    DropDetail d;
    d.office_id = rec.office_id;
    switch (rec.scope) {
      case DropScope::row:
        d.what = "hire " + net.node(rec.node).id;
        break;
      case DropScope::column:
        d.what = "candidate " + net.node(rec.node).id;
        break;
      case DropScope::office:
        d.what = "office";
        break;
    }
    d.reason = drop_reason_name(rec.reason);
    d.pairs = rec.pairs;
    report.drop_detail.push_back(std::move(d));
  }

  for (std::uint32_t k = 0; k < fit.dim; ++k) {
    PermutationResult pr = permutation_test(draws, k);
    CoefficientReport c;
    c.name = panel_set.coefficient_names[k];
    c.estimate = fit.estimate[k];
    c.p_one_sided = pr.p_one_sided;
    c.p_two_sided = pr.p_two_sided;
    if (have_vhat) {
      c.se = std::sqrt(vhat[k]);
      c.ci = confidence_interval(fit.estimate[k], vhat[k], config.level);
    }
    if (config.write_histograms && !config.out_base.empty()) {
      c.histogram_path = config.out_base + "_perm_" + c.name + ".csv";
      write_histogram_csv(c.histogram_path, draws.coordinate_slice(k));
    }
    report.coefficients.push_back(std::move(c));
  }

  if (!config.out_base.empty()) {
    if (config.format == "json") {
      write_file(config.out_base + ".json", render_report_json(report));
    } else if (config.format == "csv") {
      write_file(config.out_base + ".csv", render_report_csv(report));
      write_file(config.out_base + "_drops.csv", render_drops_csv(report));
    } else {
      throw ValidationError("unknown output format: " + config.format);
    }
  }
  return report;
}

EstimateReport run_estimate(const RunConfig& config) {
  if (!config.world_path.empty()) {
    std::ifstream f(config.world_path, std::ios::binary);
    if (!f) throw ValidationError("cannot open world file: " + config.world_path);
    std::stringstream ss;
    ss << f.rdbuf();
    SyntheticWorld world = world_from_json(ss.str());
    RunConfig cfg = config;
    // A world file pins its own treatment definitions unless overridden.
    if (cfg.treatments == "indirect_flag" && !world.config.treatments.empty()) {
      std::string toks;
      for (const auto& s : world.config.treatments) {
        if (!toks.empty()) toks += ",";
        toks += s.display_name();
        if (s.threshold) toks += ":" + std::to_string(*s.threshold);
      }
      cfg.treatments = toks;
    }
    return run_estimate(cfg, world.net, world.plan);
  }
  if (config.nodes_path.empty() || config.edges1_path.empty() ||
      config.edges2_path.empty())
    throw ValidationError("estimate needs --nodes/--edges-t1/--edges-t2 or --world");
  LoadedData data = load_inputs(config.nodes_path, config.edges1_path,
                                config.edges2_path);
  data.plan.master_seed = config.seed;
  return run_estimate(config, data.net, data.plan);
}

SimulateResult run_simulate(const SimulateConfig& config) {
  SimulateResult result;
  result.world = generate_world(config.world);

  if (!config.out_world.empty())
    write_file(config.out_world, world_to_json(result.world));
  if (!config.out_csv_base.empty())
    export_network_csv(result.world.net, config.out_csv_base);

  if (config.oracle) {
    std::uint64_t order = result.world.plan.group_order(config.enum_cap);
    if (order > config.enum_cap) {
      if (!config.monte_carlo)
        throw CapExceededError(
            "group order exceeds the enumeration cap; pass the Monte Carlo "
            "fallback flag to sample instead");
      // Monte Carlo summary: fit once, then R sampled permutation statistics.
      auto panels = assemble_world_panels(result.world);
      SampleMode mode = config.kind == EstimatorKind::ipw ? SampleMode::ipw
                                                          : SampleMode::late;
      EstimationSample sample = build_sample(panels, mode);
      AggregateFit fit = fit_all(sample, config.kind);
      PermPlan pplan;
      pplan.enumerate = false;
      pplan.draws = config.permutations;
      pplan.seed = result.world.config.seed;
      PermutationDraws draws = run_permutation_draws(fit, sample, pplan);
      OracleReport& rep = result.oracle;
      rep.kind = config.kind;
      rep.dim = fit.dim;
      rep.group_order = 0;
      rep.office_count = fit.office_count;
      rep.total_hires = fit.total_hires;
      rep.retained_pairs = sample.retained_pairs;
      rep.sharp_null = result.world.sharp_null();
      rep.realized_estimate = fit.estimate;
      rep.stat_variance = permutation_variance(fit, sample, VarianceMode::monte_carlo,
                                               pplan);
      rep.notes.push_back("monte_carlo fallback: enumerated quantities omitted");
      result.oracle_ran = true;
    } else {
      result.oracle = run_oracle(result.world, config.kind, config.enum_cap);
      result.oracle_ran = true;
    }
    if (!config.out_report.empty())
      write_file(config.out_report, oracle_report_to_json(result.oracle));
  }
  return result;
}

}  // namespace netform
