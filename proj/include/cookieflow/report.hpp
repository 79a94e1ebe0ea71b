#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cookieflow/analytics.hpp"

namespace cookieflow {

inline constexpr int kReportFormatVersion = 1;

struct ReportInputs {
  const DetectionResult* findings = nullptr;  // required
  const DetectionResult* gpc_findings = nullptr;
  const CookieJar* jar = nullptr;
  const PslRuleSet* psl = nullptr;
  const TrackerDomainSet* trackers = nullptr;
  std::vector<std::uint32_t> tier_cutoffs{1000, 5000, 10000};
};

// File name -> CSV body, plus "manifest.json". Tables whose inputs are
// missing are left out and listed under "skipped" in the manifest.
std::map<std::string, std::string> build_report(const ReportInputs& inputs);

// Writes every file of build_report into `dir` (created if needed).
// Throws Error{IoError}.
void write_report(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);
// Fixed six-decimal rendering; empty for none.
std::string csv_number(std::optional<double> value);

}  // namespace cookieflow
