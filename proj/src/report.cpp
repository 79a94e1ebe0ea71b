#include "cookieflow/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cookieflow/error.hpp"
#include "json_util.hpp"

namespace cookieflow {

using detail::OrderedJson;

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_number(std::optional<double> value) {
  if (!value) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *value);
  return buf;
}

namespace {

class Csv {
 public:
  explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) { row(columns_); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) body_ += ',';
      body_ += csv_field(fields[i]);
    }
    body_ += '\n';
    ++rows_;
  }

  const std::string& body() const { return body_; }
  std::size_t data_rows() const { return rows_ - 1; }
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
  std::string body_;
  std::size_t rows_ = 0;
};

std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(std::optional<double> v) { return csv_number(v); }
std::string num(double v) { return csv_number(v); }
std::string empty_flag(bool empty) { return empty ? "EMPTY" : ""; }

std::string key_host(const CookieKey& k) { return k.host; }

OrderedJson json_number(std::optional<double> v) { return v ? OrderedJson(*v) : OrderedJson(nullptr); }

}  // namespace

std::map<std::string, std::string> build_report(const ReportInputs& in) {
  if (in.findings == nullptr) throw Error(ErrorCode::InvalidConfig, "report needs a findings file");
  const DetectionResult& d = *in.findings;
  std::map<std::string, std::string> files;
  OrderedJson tables = OrderedJson::array();
  OrderedJson skipped = OrderedJson::array();
  OrderedJson summary = OrderedJson::object();

  auto add = [&](const std::string& name, const Csv& csv) {
    files[name] = csv.body();
    tables.push_back({{"file", name}, {"rows", csv.data_rows()}, {"columns", csv.columns()}});
  };
  auto skip = [&](const std::string& name, const char* needs) { skipped.push_back({{"file", name}, {"needs", needs}}); };

  const auto per_site = findings_per_rejected_site(d);
  {
    Csv csv({"intractable_cookies", "cumulative_fraction"});
    for (const auto& p : ecdf(per_site)) csv.row({num(p.x), num(p.fraction)});
    add("intractable_ecdf.csv", csv);
  }
  {
    const auto c = stage_counts(d);
    Csv csv({"stage", "sends"});
    csv.row({"BEFORE_INTERACTION", num(c.before_interaction)});
    csv.row({"AFTER_REJECT", num(c.after_reject)});
    csv.row({"AFTER_RELOADED_REJECT", num(c.after_reloaded_reject)});
    csv.row({"AFTER_ACCEPT", num(c.after_accept)});
    add("stage_counts.csv", csv);
    summary["reload_reduction"] = json_number(c.reload_reduction);
  }
  {
    Csv csv({"tracker_domain", "total_cookies", "unique_cookies", "senders"});
    for (const auto& r : tracker_table(d.intractable.canonical))
      csv.row({r.tracker_domain.str(), num(r.total_cookies), num(r.unique_cookies), num(r.senders)});
    add("tracker_table.csv", csv);
  }
  {
    const auto split = channel_split(d.intractable.canonical);
    Csv csv({"channel", "fraction", "flag"});
    csv.row({"RESOURCE_FETCH", num(split.resource_fraction), empty_flag(split.empty)});
    csv.row({"API_CALL", num(split.api_fraction), empty_flag(split.empty)});
    add("channel_split.csv", csv);
  }
  {
    Csv csv({"name", "host", "origin_tracker", "destination_tracker", "parameter", "carrying_url"});
    for (const auto& s : d.syncs)
      csv.row({s.source_key.name, key_host(s.source_key), s.origin_tracker.str(), s.destination_tracker.str(),
               s.parameter_name, s.carrying_url});
    add("syncs.csv", csv);
  }
  {
    const auto b = in.jar ? banner_type_report(d, *in.jar) : banner_type_report(d, CookieJar{});
    Csv csv({"banner_type", "rejected_sites", "avg_intractable", "flag"});
    csv.row({"CMP", num(static_cast<std::uint64_t>(b.cmp_sites)), num(b.cmp_avg), empty_flag(!b.cmp_avg)});
    csv.row({"NATIVE", num(static_cast<std::uint64_t>(b.native_sites)), num(b.native_avg), empty_flag(!b.native_avg)});
    csv.row({"CMP_TO_NATIVE_RATIO", "", num(b.ratio), b.ratio ? "" : "NATIVE_ZERO"});
    add("banner_types.csv", csv);
    if (in.jar) {
      Csv pw({"threshold", "sites", "findings", "paywall_share"});
      for (const auto& p : b.paywall_share)
        pw.row({num(p.threshold), num(static_cast<std::uint64_t>(p.sites)), num(p.findings), num(p.share)});
      add("paywall_share.csv", pw);
    } else {
      skip("paywall_share.csv", "jar");
    }
  }

  if (in.jar) {
    const CookieJar& jar = *in.jar;
    {
      Csv csv({"expiry_bucket", "setter_bucket", "count"});
      for (const auto& c : renewal_heatmap(jar, d.intractable.canonical, jar.accepted_sites().size()))
        csv.row({std::string(to_string(c.expiry)), std::string(to_string(c.setters)), num(c.count)});
      add("renewal_heatmap.csv", csv);
    }
    {
      Csv csv({"rank_lower_exclusive", "rank_upper_inclusive", "rejected_sites", "avg_sent", "sent_min", "sent_q1",
               "sent_median", "sent_q3", "sent_max", "accepted_sites", "avg_set", "set_min", "set_q1", "set_median",
               "set_q3", "set_max", "flag"});
      for (const auto& t : rank_tier_averages(d, jar, in.tier_cutoffs)) {
        auto five = [](const std::optional<FiveNumber>& f) -> std::vector<std::string> {
          if (!f) return {"", "", "", "", ""};
          return {num(f->min), num(f->q1), num(f->median), num(f->q3), num(f->max)};
        };
        std::vector<std::string> row{num(static_cast<std::uint64_t>(t.lower)),
                                     t.upper ? num(static_cast<std::uint64_t>(*t.upper)) : "",
                                     num(static_cast<std::uint64_t>(t.rejected_sites)), num(t.avg_sent)};
        for (auto& f : five(t.sent_summary)) row.push_back(std::move(f));
        row.push_back(num(static_cast<std::uint64_t>(t.accepted_sites)));
        row.push_back(num(t.avg_set));
        for (auto& f : five(t.set_summary)) row.push_back(std::move(f));
        row.push_back(!t.avg_sent && !t.avg_set ? "EMPTY_TIER" : "");
        csv.row(row);
      }
      add("rank_tiers.csv", csv);
    }
    summary["jar_entries"] = jar.entries().size();
    summary["accepted_sites"] = jar.accepted_sites().size();
  } else {
    skip("renewal_heatmap.csv", "jar");
    skip("rank_tiers.csv", "jar");
  }

  if (in.jar && in.psl && in.trackers) {
    {
      const auto s = partitioned_summary(*in.jar, *in.trackers, *in.psl);
      Csv csv({"cookie_type", "total_unique", "partitioned", "along_with_np"});
      csv.row({"ALL", num(s.total_unique), num(s.partitioned), ""});
      csv.row({"TRACKING", num(s.tracking_unique), num(s.tracking_partitioned), num(s.along_with_np)});
      add("partitioned_summary.csv", csv);
    }
    {
      Csv csv({"database", "column", "aggregate", "unique", "average"});
      for (const auto& c : accounting_table(d, *in.jar, *in.psl, *in.trackers))
        csv.row({std::string(c.database), std::string(c.column), num(c.aggregate), num(c.unique), num(c.average)});
      add("accounting.csv", csv);
    }
  } else {
    skip("partitioned_summary.csv", "jar, psl, trackers");
    skip("accounting.csv", "jar, psl, trackers");
  }

  if (in.gpc_findings) {
    const auto g = gpc_report(d, *in.gpc_findings);
    Csv csv({"metric", "value"});
    csv.row({"matched_sites", num(static_cast<std::uint64_t>(g.matched_sites))});
    csv.row({"baseline_findings", num(g.baseline_findings)});
    csv.row({"gpc_findings", num(g.gpc_findings)});
    csv.row({"reduction_fraction", num(g.reduction_fraction)});
    csv.row({"overlap_with_reloaded_reject", num(g.overlap_with_reloaded_reject)});
    add("gpc.csv", csv);
    summary["gpc_reduction"] = json_number(g.reduction_fraction);
  } else {
    skip("gpc.csv", "gpc findings");
  }

  std::uint64_t rejected = 0;
  for (const auto& [id, v] : d.visits)
    if (v.rejected_measurement()) ++rejected;
  summary["rejected_sites"] = rejected;
  summary["canonical_findings"] = d.intractable.canonical.size();
  summary["staged_findings"] = d.intractable.staged.size();
  summary["resets"] = d.resets.size();
  summary["syncs"] = d.syncs.size();

  OrderedJson manifest{{"format_version", kReportFormatVersion},
                       {"content", "report"},
                       {"tables", std::move(tables)},
                       {"skipped", std::move(skipped)},
                       {"summary", std::move(summary)}};
  files["manifest.json"] = manifest.dump(2) + '\n';
  return files;
}

void write_report(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, body] : files) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

}  // namespace cookieflow
