#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dcms/monitor.hpp"

namespace dcms {

struct ReportFormats {
  bool json = true;
  bool csv = true;
  bool svg = true;
};

/// {"ordinal":int,"image_cms":float,"cluster_cms":[...],"product_cms":float,
///  "gap":float,"mmd2":float|null,"corollary_violation":bool}
nlohmann::ordered_json to_json(const SnapshotReport& r);
nlohmann::ordered_json header_json(const MonitorResult& result);

std::string render_jsonl(const MonitorResult& result);
std::string render_csv(const MonitorResult& result);
std::string render_svg(const MonitorResult& result);

/// Writes reports.jsonl + header.json, reports.csv and reports.svg into out_dir
/// (created if missing) according to `formats`.
void report_emit(const MonitorResult& result, const std::filesystem::path& out_dir,
                 ReportFormats formats = {});

}  // namespace dcms
