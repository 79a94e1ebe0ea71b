#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cookieflow/analytics.hpp"
#include "cookieflow/cookie_jar.hpp"
#include "cookieflow/crawl_log.hpp"
#include "cookieflow/detector.hpp"
#include "cookieflow/ecosystem.hpp"
#include "cookieflow/filterlist.hpp"
#include "cookieflow/psl.hpp"
#include "cookieflow/report.hpp"
#include "cookieflow/simulator.hpp"

namespace cf = cookieflow;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInvariant = 2;

bool g_json_errors = false;

int exit_code_for(cf::ErrorCode code) {
  return code == cf::ErrorCode::SequenceViolation ? kExitInvariant : kExitInput;
}

void report_diagnostic(const cf::Diagnostic& d, const std::string& file = {}) {
  if (g_json_errors) {
    Json j{{"code", cf::to_string(d.code)}, {"line", d.line}, {"message", d.message}};
    if (!file.empty()) j["file"] = file;
    std::cerr << j.dump() << '\n';
    return;
  }
  std::cerr << (file.empty() ? "" : file + ":") << d.line << ": " << cf::to_string(d.code) << ": " << d.message
            << '\n';
}

void report_error(const cf::Error& e) {
  if (g_json_errors) {
    std::cerr << Json{{"code", cf::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return;
  }
  std::cerr << "error: " << e.what() << '\n';
}

void report_warnings(const cf::Diagnostics& warnings, const std::string& file) {
  for (const auto& w : warnings) {
    if (g_json_errors) {
      report_diagnostic(w, file);
    } else {
      std::cerr << "warning: ";
      report_diagnostic(w, file);
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cf::Error(cf::ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw cf::Error(cf::ErrorCode::IoError, "cannot write " + path);
}

// Parses a log; collected problems go to stderr and become an Error with
// the first problem's class.
std::vector<cf::CrawlEvent> load_log(const std::string& path) {
  const std::string text = read_file(path);
  auto result = cf::parse_log_collect(text);
  if (result.ok()) return std::move(result.events);
  for (const auto& d : result.errors) report_diagnostic(d, path);
  const auto& first = result.errors.front();
  throw cf::Error(first.code, path + ": " + std::to_string(result.errors.size()) + " problem(s)");
}

struct PipelineConfig {
  std::string psl_path;
  std::vector<std::string> plain_lists;
  std::vector<std::string> adblock_lists;
  std::string extra_trackers;
  std::string jar_path;
  std::vector<std::string> log_paths;
  std::string report_dir;
  std::size_t sample_n = 0;
  std::uint64_t sample_seed = 0;
  bool sample = false;
  std::vector<std::uint32_t> tiers;

  static PipelineConfig load(const std::string& path) {
    PipelineConfig c;
    try {
      const auto j = nlohmann::json::parse(read_file(path));
      auto str = [&](const char* f) { return j.contains(f) ? j.at(f).get<std::string>() : std::string(); };
      c.psl_path = str("psl_path");
      c.extra_trackers = str("extra_tracker_domains_path");
      c.jar_path = str("jar_path");
      c.report_dir = str("report_dir");
      if (j.contains("filter_list_paths")) {
        const auto& f = j.at("filter_list_paths");
        if (f.contains("plain")) c.plain_lists = f.at("plain").get<std::vector<std::string>>();
        if (f.contains("adblock")) c.adblock_lists = f.at("adblock").get<std::vector<std::string>>();
      }
      if (j.contains("log_paths")) c.log_paths = j.at("log_paths").get<std::vector<std::string>>();
      if (j.contains("sample") && !j.at("sample").is_null()) {
        c.sample = true;
        c.sample_n = j.at("sample").at("n").get<std::size_t>();
        c.sample_seed = j.at("sample").at("seed").get<std::uint64_t>();
      }
      if (j.contains("tier_cutoffs")) c.tiers = j.at("tier_cutoffs").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw cf::Error(cf::ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    for (const auto* p : {&c.psl_path, &c.extra_trackers, &c.jar_path})
      if (!p->empty() && !std::filesystem::exists(*p))
        throw cf::Error(cf::ErrorCode::InvalidConfig, path + ": referenced path does not exist: " + *p);
    for (const auto* list : {&c.plain_lists, &c.adblock_lists, &c.log_paths})
      for (const auto& p : *list)
        if (!std::filesystem::exists(p))
          throw cf::Error(cf::ErrorCode::InvalidConfig, path + ": referenced path does not exist: " + p);
    return c;
  }
};

cf::TrackerDomainSet load_trackers(const std::vector<std::string>& plain, const std::vector<std::string>& adblock,
                                   const std::string& extra) {
  cf::TrackerDomainSet set("combined");
  auto add_plain = [&](const std::string& path) {
    auto parsed = cf::parse_domain_list(read_file(path), path);
    report_warnings(parsed.errors, path);
    set.merge(parsed.set);
  };
  for (const auto& p : plain) add_plain(p);
  for (const auto& p : adblock) set.merge(cf::extract_domains_from_adblock(read_file(p), p).set);
  if (!extra.empty()) add_plain(extra);
  return set;
}

Json truth_to_json(const cf::GroundTruth& t) {
  auto findings = [](const std::set<cf::ExpectedFinding>& s) {
    Json out = Json::array();
    for (const auto& f : s)
      out.push_back({{"name", f.key.name},
                     {"host", f.key.host},
                     {"sender_site", f.sender_site.str()},
                     {"stage", cf::to_string(f.stage)}});
    return out;
  };
  Json keys = Json::array();
  for (const auto& k : t.expected_jar_keys) {
    Json j{{"name", k.name}, {"host", k.host}};
    if (k.partition) j["partition"] = k.partition->str();
    keys.push_back(std::move(j));
  }
  return {{"expected_findings", findings(t.expected_findings)},
          {"expected_staged", findings(t.expected_staged)},
          {"expected_jar_keys", std::move(keys)}};
}

std::vector<std::uint32_t> parse_tiers(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(static_cast<std::uint32_t>(std::stoul(part)));
    } catch (const std::exception&) {
      throw cf::Error(cf::ErrorCode::InvalidConfig, "bad tier cutoff '" + part + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intractable-cookie measurement pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string pipeline_config;
  std::string errors_format = "text";
  app.add_option("--config", pipeline_config, "pipeline config (JSON); simulate reads it as the ecosystem config");
  app.add_option("--errors", errors_format, "diagnostic format")->check(CLI::IsMember({"text", "json"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a crawl log from an ecosystem config");
  std::uint64_t sim_seed = 0;
  std::string sim_out, sim_truth, sim_trackers_out, sim_config_out;
  bool sim_gpc = false;
  std::size_t random_sites = 0, random_trackers = 12;
  double random_gpc_share = 0.0, random_drop = 0.25;
  sim->add_option("--seed", sim_seed)->required();
  sim->add_option("--out", sim_out, "log path ('-' for stdout)")->required();
  sim->add_flag("--gpc", sim_gpc, "enable GPC for the stateless phase");
  sim->add_option("--truth", sim_truth, "write the ground-truth oracle as JSON");
  sim->add_option("--trackers-out", sim_trackers_out, "write the listed tracker domains");
  sim->add_option("--random-sites", random_sites, "generate a random ecosystem of this many sites instead of --config");
  sim->add_option("--random-trackers", random_trackers);
  sim->add_option("--random-gpc-share", random_gpc_share);
  sim->add_option("--random-drop", random_drop);
  sim->add_option("--config-out", sim_config_out, "write the ecosystem config used");

  // build-jar
  auto* bj = app.add_subcommand("build-jar", "replay phase-1 visits of a log into a jar snapshot");
  std::string bj_log, bj_out;
  bj->add_option("--log", bj_log);
  bj->add_option("--out", bj_out);

  // detect
  auto* det = app.add_subcommand("detect", "match stateless-phase sends against the jar");
  std::string det_jar, det_psl, det_extra, det_out;
  std::vector<std::string> det_logs, det_plain, det_adblock;
  std::size_t det_sample_n = 0;
  std::uint64_t det_sample_seed = 0;
  bool det_serial = false;
  det->add_option("--jar", det_jar);
  det->add_option("--log", det_logs);
  det->add_option("--psl", det_psl);
  det->add_option("--trackers", det_plain, "plain domain list");
  det->add_option("--adblock", det_adblock, "adblock-syntax filter list");
  det->add_option("--extra-trackers", det_extra);
  det->add_option("--out", det_out, "findings path ('-' for stdout)");
  auto* sample_opt = det->add_option("--sample-n", det_sample_n, "normalize the jar to n sampled accepted sites");
  det->add_option("--sample-seed", det_sample_seed);
  det->add_flag("--serial", det_serial, "use the serial reference kernel");

  // report
  auto* rep = app.add_subcommand("report", "aggregate findings into CSV tables");
  std::string rep_findings, rep_gpc, rep_jar, rep_psl, rep_extra, rep_out, rep_tiers;
  std::vector<std::string> rep_plain, rep_adblock;
  rep->add_option("--findings", rep_findings)->required();
  rep->add_option("--gpc-findings", rep_gpc);
  rep->add_option("--jar", rep_jar);
  rep->add_option("--psl", rep_psl);
  rep->add_option("--trackers", rep_plain);
  rep->add_option("--adblock", rep_adblock);
  rep->add_option("--extra-trackers", rep_extra);
  rep->add_option("--out", rep_out);
  rep->add_option("--tiers", rep_tiers, "comma-separated rank cutoffs");

  // filter-convert
  auto* fc = app.add_subcommand("filter-convert", "adblock list to plain domain list");
  std::string fc_in, fc_out = "-";
  fc->add_option("--in", fc_in)->required();
  fc->add_option("--out", fc_out);

  // validate-log
  auto* vl = app.add_subcommand("validate-log", "check log records and visit sequencing");
  std::string vl_log;
  vl->add_option("--log", vl_log);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  g_json_errors = errors_format == "json";

  try {
    PipelineConfig pc;
    if (!pipeline_config.empty() && !sim->parsed()) pc = PipelineConfig::load(pipeline_config);
    auto need = [](const std::string& value, const char* what) {
      if (value.empty()) throw cf::Error(cf::ErrorCode::InvalidConfig, std::string("missing ") + what);
      return value;
    };

    if (sim->parsed()) {
      cf::EcosystemConfig eco;
      if (random_sites > 0) {
        cf::RandomEcosystemParams params;
        params.sites = random_sites;
        params.trackers = random_trackers;
        params.gpc_honor_fraction = random_gpc_share;
        params.drop_after_reject_prob = random_drop;
        eco = cf::random_ecosystem(params, sim_seed);
      } else {
        eco = cf::load_ecosystem(need(pipeline_config, "--config (ecosystem config) or --random-sites"));
      }
      if (sim_gpc) eco.schedule.gpc_enabled = true;
      write_file(sim_out, cf::generate_log_text(eco, sim_seed));
      if (!sim_truth.empty()) write_file(sim_truth, truth_to_json(cf::ground_truth(eco, sim_seed)).dump(2) + '\n');
      if (!sim_config_out.empty()) write_file(sim_config_out, cf::ecosystem_to_json(eco));
      if (!sim_trackers_out.empty()) {
        std::string body;
        for (const auto& d : cf::listed_trackers(eco).domains()) body += d + '\n';
        write_file(sim_trackers_out, body);
      }
      return kExitOk;
    }

    if (bj->parsed()) {
      const std::string log = bj_log.empty() && !pc.log_paths.empty() ? pc.log_paths.front() : bj_log;
      const std::string out = bj_out.empty() ? pc.jar_path : bj_out;
      const auto events = load_log(need(log, "--log"));
      cf::Diagnostics warnings;
      const auto jar = cf::build_jar(events, &warnings);
      report_warnings(warnings, log);
      jar.save(need(out, "--out"));
      return kExitOk;
    }

    if (det->parsed()) {
      const std::string jar_path = det_jar.empty() ? pc.jar_path : det_jar;
      const auto logs = det_logs.empty() ? pc.log_paths : det_logs;
      const std::string psl_path = det_psl.empty() ? pc.psl_path : det_psl;
      if (logs.empty()) throw cf::Error(cf::ErrorCode::InvalidConfig, "missing --log");
      auto jar = cf::CookieJar::load(need(jar_path, "--jar"));
      if (sample_opt->count() > 0) {
        jar = jar.normalize_sample(det_sample_n, det_sample_seed);
      } else if (pc.sample) {
        jar = jar.normalize_sample(pc.sample_n, pc.sample_seed);
      }
      const auto psl = cf::load_psl_file(need(psl_path, "--psl"));
      const auto trackers = load_trackers(det_plain.empty() ? pc.plain_lists : det_plain,
                                          det_adblock.empty() ? pc.adblock_lists : det_adblock,
                                          det_extra.empty() ? pc.extra_trackers : det_extra);
      std::vector<cf::CrawlEvent> events;
      for (const auto& path : logs) {
        auto part = load_log(path);
        if (events.empty()) {
          events = std::move(part);
        } else {
          // Later logs are appended after renumbering so visit ids stay distinct.
          const std::uint64_t offset = events.size();
          cf::VisitId max_visit = 0;
          for (const auto& ev : events) max_visit = std::max(max_visit, ev.visit_id());
          for (auto& ev : part) {
            ev.event_index += offset;
            std::visit([&](auto& p) { p.visit_id += max_visit; }, ev.payload);
            events.push_back(std::move(ev));
          }
        }
      }
      const auto result = cf::detect(jar, events, psl, trackers, {.parallel = !det_serial});
      report_warnings(result.warnings, logs.front());
      std::ostringstream out;
      cf::write_findings(out, result);
      write_file(det_out.empty() ? "-" : det_out, out.str());
      return kExitOk;
    }

    if (rep->parsed()) {
      std::ifstream fin(rep_findings);
      if (!fin) throw cf::Error(cf::ErrorCode::IoError, "cannot read " + rep_findings);
      const auto findings = cf::read_findings(fin);
      std::optional<cf::DetectionResult> gpc;
      if (!rep_gpc.empty()) {
        std::ifstream gin(rep_gpc);
        if (!gin) throw cf::Error(cf::ErrorCode::IoError, "cannot read " + rep_gpc);
        gpc = cf::read_findings(gin);
      }
      std::optional<cf::CookieJar> jar;
      const std::string jar_path = rep_jar.empty() ? pc.jar_path : rep_jar;
      if (!jar_path.empty()) jar = cf::CookieJar::load(jar_path);
      std::optional<cf::PslRuleSet> psl;
      const std::string psl_path = rep_psl.empty() ? pc.psl_path : rep_psl;
      if (!psl_path.empty()) psl = cf::load_psl_file(psl_path);
      const auto plain = rep_plain.empty() ? pc.plain_lists : rep_plain;
      const auto adblock = rep_adblock.empty() ? pc.adblock_lists : rep_adblock;
      const auto extra = rep_extra.empty() ? pc.extra_trackers : rep_extra;
      std::optional<cf::TrackerDomainSet> trackers;
      if (!plain.empty() || !adblock.empty() || !extra.empty()) trackers = load_trackers(plain, adblock, extra);

      cf::ReportInputs in;
      in.findings = &findings;
      in.gpc_findings = gpc ? &*gpc : nullptr;
      in.jar = jar ? &*jar : nullptr;
      in.psl = psl ? &*psl : nullptr;
      in.trackers = trackers ? &*trackers : nullptr;
      if (!rep_tiers.empty()) {
        in.tier_cutoffs = parse_tiers(rep_tiers);
      } else if (!pc.tiers.empty()) {
        in.tier_cutoffs = pc.tiers;
      }
      cf::write_report(need(rep_out.empty() ? pc.report_dir : rep_out, "--out"), cf::build_report(in));
      return kExitOk;
    }

    if (fc->parsed()) {
      const auto extraction = cf::extract_domains_from_adblock(read_file(fc_in), fc_in);
      std::string body;
      for (const auto& d : extraction.set.domains()) body += d + '\n';
      write_file(fc_out, body);
      if (!g_json_errors) std::cerr << extraction.set.size() << " domains, " << extraction.ignored_lines << " lines ignored\n";
      return kExitOk;
    }

    if (vl->parsed()) {
      const std::string log = vl_log.empty() && !pc.log_paths.empty() ? pc.log_paths.front() : vl_log;
      const std::string text = read_file(need(log, "--log"));
      auto result = cf::parse_log_collect(text);
      auto headers = cf::validate_cookie_headers(result.events, result.lines);
      cf::Diagnostics all = std::move(result.errors);
      all.insert(all.end(), headers.begin(), headers.end());
      std::stable_sort(all.begin(), all.end(), [](const cf::Diagnostic& a, const cf::Diagnostic& b) {
        return a.line < b.line;
      });
      if (all.empty()) return kExitOk;
      for (const auto& d : all) report_diagnostic(d, log);
      return exit_code_for(all.front().code);
    }
  } catch (const cf::Error& e) {
    report_error(e);
    return exit_code_for(e.code());
  }
  return kExitOk;
}
