#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fatnet/evaluation.hpp"
#include "fatnet/replication.hpp"

// File formats. Accuracies are percentages printed with 2 decimals; stuck
// values with %.6g. Fault-site ordinals ("layer") start at 0.
//
//   report CSV   layer,target_kind,target_index,epsilon,accuracy
//                target_index = channel, or row * width + col for pixels
//   summary CSV  layer,targets,min_s@<e>,max_s@<e>,... for every stuck value e
//   report JSON  full-precision report (schema "fatnet.sweep", version 1)
//   frontier CSV k,triplicated_channels_list_hash,cost,worst_case_error,dominated
//   scatter CSV  network,min_acc,max_acc,error_free
namespace fatnet {

std::string format_report_csv(const SweepReport& report);
std::string format_summary_csv(const SweepReport& report);
std::string format_report_json(const SweepReport& report);
std::string format_frontier_csv(const std::vector<FrontierPoint>& points);
std::string format_scatter_csv(const std::vector<ScatterPoint>& points);

struct ReportCsvRow {
  std::size_t layer = 0;
  std::string target_kind;
  std::size_t target_index = 0;
  float epsilon = 0.0f;
  double accuracy = 0.0;
};

std::vector<ReportCsvRow> parse_report_csv(const std::string& text);
std::vector<std::vector<std::string>> parse_summary_csv(const std::string& text);
SweepReport parse_report_json(const std::string& text);
std::vector<FrontierPoint> parse_frontier_csv(const std::string& text);
std::vector<ScatterPoint> parse_scatter_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fatnet
