// netform: design-based causal inference for endogenous network formation.
//
// Subcommands:
//   estimate  fit the effect of initial network structure on tie formation
//   placebo   re-run estimation with a pre-determined covariate as outcome
//   simulate  generate a synthetic world and run the enumeration oracle
//   permtest  export the permutation distribution of one coefficient as CSV

#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "netform/pipeline.hpp"

namespace {

using namespace netform;

void add_data_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--nodes", cfg.nodes_path, "nodes CSV (node_id,office,new_hire,...)");
  cmd->add_option("--edges-t1", cfg.edges1_path, "period-1 edge CSV (src,dst)");
  cmd->add_option("--edges-t2", cfg.edges2_path, "period-2 edge CSV (src,dst)");
  cmd->add_option("--world", cfg.world_path, "world JSON produced by `simulate`");
}

void add_run_options(CLI::App* cmd, RunConfig& cfg, std::string& perms) {
  cmd->add_option("--treatments", cfg.treatments,
                  "comma list: indirect_flag|indirect_count|degree|high_degree|"
                  "density|high_density (explicit threshold: high_degree:75)");
  cmd->add_option("--mode", [&cfg](const std::vector<std::string>& v) {
        if (v[0] == "ipw")
          cfg.mode = SampleMode::ipw;
        else if (v[0] == "late")
          cfg.mode = SampleMode::late;
        else
          return false;
        return true;
      },
      "ipw | late")->expected(1);
  cmd->add_option("--permutations", perms, "draw count R, or 'enumerate'");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--level", cfg.level, "confidence level in (0,1)");
  cmd->add_option("--out", cfg.out_base, "output base path");
  cmd->add_option("--format", cfg.format, "csv | json");
  cmd->add_option("--filter-i", cfg.filter_i, "hire predicate, e.g. grp_a=1");
  cmd->add_option("--filter-j", cfg.filter_j, "candidate predicate");
  cmd->add_option("--null-shift", cfg.null_shift,
                  "constant-effect null '<coef>=<delta>' (shifted outcomes)");
  cmd->add_option("--bonferroni", cfg.bonferroni,
                  "family size for Bonferroni-adjusted significance cutoffs");
  cmd->add_option("--threads", cfg.threads, "worker cap (0 = hardware)");
  cmd->add_option("--enum-cap", cfg.enum_cap, "enumeration cap");
  cmd->add_flag("--exclude-hire-ties",
                [&cfg](std::int64_t) { cfg.count_hire_ties = false; },
                "exclude hire-to-hire ties from degree/density");
}

void resolve_permutations(const std::string& perms, RunConfig& cfg) {
  if (perms == "enumerate") {
    cfg.enumerate = true;
  } else if (!perms.empty()) {
    cfg.permutations = std::stoull(perms);
  }
}

void print_report(const EstimateReport& rep) {
  std::cout << render_report_csv(rep);
  if (!rep.warnings.empty())
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "pairs: " << rep.input_pairs << " in, " << rep.edges
            << " retained; hires " << rep.new_hires << ", offices " << rep.offices
            << "; draws " << rep.n_draws << " (" << rep.perm_mode << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design-based network formation estimator"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string perms;

  CLI::App* estimate = app.add_subcommand("estimate", "estimate treatment effects");
  add_data_options(estimate, cfg);
  add_run_options(estimate, cfg, perms);

  CLI::App* placebo = app.add_subcommand("placebo", "placebo run on a covariate");
  std::string placebo_cov;
  add_data_options(placebo, cfg);
  add_run_options(placebo, cfg, perms);
  placebo->add_option("--placebo", placebo_cov, "pre-determined binary covariate")
      ->required();

  CLI::App* permtest = app.add_subcommand(
      "permtest", "export the permutation distribution of one coefficient");
  std::string coef = "";
  add_data_options(permtest, cfg);
  add_run_options(permtest, cfg, perms);
  permtest->add_option("--coefficient", coef, "coefficient name (default: first slope)");

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic world");
  SimulateConfig sim;
  std::string sizes = "3,3";
  std::string delta = "-1,0";
  std::string sim_treatments = "indirect_flag";
  std::string sim_mode = "late";
  bool no_oracle = false;
  simulate->add_option("--offices", sizes, "comma list of office sizes, e.g. 2,3,4");
  simulate->add_option("--seniors", sim.world.seniors_per_office, "senior pool size");
  simulate->add_option("--team-size-min", sim.world.team_size_min, "");
  simulate->add_option("--team-size-max", sim.world.team_size_max, "");
  simulate->add_option("--senior-edge-prob", sim.world.senior_edge_prob, "");
  simulate->add_flag("--shared-candidates", sim.world.shared_candidates, "");
  simulate->add_flag("--clone-offices", sim.world.clone_offices, "");
  simulate->add_option("--delta", delta, "structural coefficients, intercept first");
  simulate->add_option("--homophily", sim.world.homophily_scale, "");
  simulate->add_option("--homophily-placement", sim.world.homophily_placement, "");
  simulate->add_option("--treatments", sim_treatments, "");
  simulate->add_option("--seed", sim.world.seed, "");
  simulate->add_option("--mode", sim_mode, "ipw | late");
  simulate->add_option("--permutations", sim.permutations, "Monte Carlo fallback draws");
  simulate->add_option("--enum-cap", sim.enum_cap, "");
  simulate->add_flag("--monte-carlo", sim.monte_carlo, "fallback above the cap");
  simulate->add_flag("--no-oracle", no_oracle, "write the world only");
  simulate->add_option("--out-world", sim.out_world, "world JSON path")->required();
  simulate->add_option("--out-report", sim.out_report, "oracle report JSON path");
  simulate->add_option("--export-csv", sim.out_csv_base, "also write nodes/edges CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) {
      resolve_permutations(perms, cfg);
      print_report(run_estimate(cfg));
      return kExitOk;
    }
    if (*placebo) {
      resolve_permutations(perms, cfg);
      cfg.placebo = placebo_cov;
      print_report(run_estimate(cfg));
      return kExitOk;
    }
    if (*permtest) {
      resolve_permutations(perms, cfg);
      if (cfg.out_base.empty())
        throw ValidationError("permtest needs --out for the histogram CSV");
      cfg.write_histograms = true;
      EstimateReport rep = run_estimate(cfg);
      std::string target = coef.empty()
                               ? (rep.coefficients.size() > 1 ? rep.coefficients[1].name
                                                              : rep.coefficients[0].name)
                               : coef;
      bool found = false;
      for (const auto& c : rep.coefficients)
        if (c.name == target) {
          std::cout << c.histogram_path << "\n";
          found = true;
        }
      if (!found) throw ValidationError("unknown coefficient: " + target);
      return kExitOk;
    }
    if (*simulate) {
      std::stringstream ss(sizes);
      std::string tok;
      sim.world.office_sizes.clear();
      while (std::getline(ss, tok, ','))
        sim.world.office_sizes.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
      sim.world.delta.clear();
      std::stringstream ds(delta);
      while (std::getline(ds, tok, ',')) sim.world.delta.push_back(std::stod(tok));
      sim.world.treatments = parse_treatment_list(sim_treatments);
      sim.kind = sim_mode == "ipw" ? EstimatorKind::ipw : EstimatorKind::within;
      sim.world.validate_ipw = sim.kind == EstimatorKind::ipw;
      sim.world.validate_late = sim.kind == EstimatorKind::within;
      sim.oracle = !no_oracle;
      SimulateResult res = run_simulate(sim);
      std::cerr << "world: " << res.world.net.n() << " nodes, attempt "
                << res.world.attempt << "\n";
      if (res.oracle_ran)
        std::cerr << "oracle: group order " << res.oracle.group_order << ", offices "
                  << res.oracle.office_count << "\n";
      return kExitOk;
    }
  } catch (const CapExceededError& e) {
    std::cerr << "error (cap): " << e.what() << "\n";
    return kExitCapExceeded;
  } catch (const NumericalError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error (validation): " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
