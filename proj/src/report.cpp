#include "netform/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

namespace netform {

std::uint64_t EstimateReport::dropped_pairs() const {
  std::uint64_t d = 0;
  for (const auto& s : drop_log) d += s.pairs;
  return d;
}

std::vector<DropSummary> summarize_drops(const std::vector<DropRecord>& drops) {
  std::map<std::string, DropSummary> by_reason;
  for (const auto& rec : drops) {
    auto& s = by_reason[drop_reason_name(rec.reason)];
    s.reason = drop_reason_name(rec.reason);
    ++s.count;
    s.pairs += rec.pairs;
  }
  std::vector<DropSummary> out;
  out.reserve(by_reason.size());
  for (auto& [_, s] : by_reason) out.push_back(std::move(s));
  return out;
}

std::string format_fixed5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

std::string render_report_csv(const EstimateReport& r) {
  std::string out =
      "outcome,new_hires,offices,edges,coefficient,estimate,se,p_one_sided,"
      "p_two_sided,ci_low,ci_high\n";
  for (const auto& c : r.coefficients) {
    out += r.outcome + "," + std::to_string(r.new_hires) + "," +
           std::to_string(r.offices) + "," + std::to_string(r.edges) + "," +
           c.name + "," + format_fixed5(c.estimate) + ",";
    out += c.se ? format_fixed5(*c.se) : std::string();
    out += "," + format_fixed5(c.p_one_sided) + "," + format_fixed5(c.p_two_sided) + ",";
    if (c.ci) {
      out += format_fixed5(c.ci->lo) + "," + format_fixed5(c.ci->hi);
    } else {
      out += ",";
    }
    out += "\n";
  }
  return out;
}

std::string render_drops_csv(const EstimateReport& r) {
  std::string out = "reason,count,pairs\n";
  for (const auto& s : r.drop_log)
    out += s.reason + "," + std::to_string(s.count) + "," + std::to_string(s.pairs) + "\n";
  return out;
}

namespace {

nlohmann::json coefficient_to_json(const CoefficientReport& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["estimate"] = c.estimate;
  if (c.se)
    j["se"] = *c.se;
  else
    j["se"] = nullptr;
  j["p_one_sided"] = c.p_one_sided;
  j["p_two_sided"] = c.p_two_sided;
  if (c.ci) {
    j["ci_low"] = c.ci->lo;
    j["ci_high"] = c.ci->hi;
  } else {
    j["ci_low"] = nullptr;
    j["ci_high"] = nullptr;
  }
  j["histogram_path"] = c.histogram_path;
  return j;
}

CoefficientReport coefficient_from_json(const nlohmann::json& j) {
  CoefficientReport c;
  c.name = j.at("name").get<std::string>();
  c.estimate = j.at("estimate").get<double>();
  if (!j.at("se").is_null()) c.se = j.at("se").get<double>();
  c.p_one_sided = j.at("p_one_sided").get<double>();
  c.p_two_sided = j.at("p_two_sided").get<double>();
  if (!j.at("ci_low").is_null())
    c.ci = Interval{j.at("ci_low").get<double>(), j.at("ci_high").get<double>()};
  c.histogram_path = j.at("histogram_path").get<std::string>();
  return c;
}

}  // namespace

std::string render_report_json(const EstimateReport& r) {
  nlohmann::json j;
  j["outcome"] = r.outcome;
  j["estimator"] = r.estimator;
  j["perm_mode"] = r.perm_mode;
  j["n_draws"] = r.n_draws;
  j["new_hires"] = r.new_hires;
  j["offices"] = r.offices;
  j["edges"] = r.edges;
  j["input_pairs"] = r.input_pairs;
  j["level"] = r.level;
  j["seed"] = r.seed;
  nlohmann::json coefs = nlohmann::json::array();
  for (const auto& c : r.coefficients) coefs.push_back(coefficient_to_json(c));
  j["coefficients"] = coefs;
  nlohmann::json drops = nlohmann::json::array();
  for (const auto& s : r.drop_log)
    drops.push_back({{"reason", s.reason}, {"count", s.count}, {"pairs", s.pairs}});
  j["drop_log"] = drops;
  nlohmann::json detail = nlohmann::json::array();
  for (const auto& d : r.drop_detail)
    detail.push_back({{"office", d.office_id},
                      {"what", d.what},
                      {"reason", d.reason},
                      {"pairs", d.pairs}});
  j["drop_detail"] = detail;
  j["warnings"] = r.warnings;
  j["bonferroni_tests"] = r.bonferroni_tests;
  j["bonferroni_lower"] = r.bonferroni_lower;
  j["bonferroni_upper"] = r.bonferroni_upper;
  j["config_echo"] = r.config_echo;
  j["generated_at"] = r.generated_at;
  return j.dump(2);
}

EstimateReport parse_report_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  EstimateReport r;
  r.outcome = j.at("outcome").get<std::string>();
  r.estimator = j.at("estimator").get<std::string>();
  r.perm_mode = j.at("perm_mode").get<std::string>();
  r.n_draws = j.at("n_draws").get<std::uint64_t>();
  r.new_hires = j.at("new_hires").get<std::uint32_t>();
  r.offices = j.at("offices").get<std::uint32_t>();
  r.edges = j.at("edges").get<std::uint64_t>();
  r.input_pairs = j.at("input_pairs").get<std::uint64_t>();
  r.level = j.at("level").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& cj : j.at("coefficients"))
    r.coefficients.push_back(coefficient_from_json(cj));
  for (const auto& dj : j.at("drop_log"))
    r.drop_log.push_back({dj.at("reason").get<std::string>(),
                          dj.at("count").get<std::uint64_t>(),
                          dj.at("pairs").get<std::uint64_t>()});
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.bonferroni_tests = j.at("bonferroni_tests").get<std::uint32_t>();
  r.bonferroni_lower = j.at("bonferroni_lower").get<double>();
  r.bonferroni_upper = j.at("bonferroni_upper").get<double>();
  r.config_echo = j.at("config_echo").get<std::string>();
  r.generated_at = j.at("generated_at").get<std::string>();
  return r;
}

}  // namespace netform
