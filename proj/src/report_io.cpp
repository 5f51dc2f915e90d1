#include "fatnet/report_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fatnet/errors.hpp"

namespace fatnet {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.2f", v); }
std::string eps_str(float v) { return fmt("%.6g", static_cast<double>(v)); }

std::vector<std::vector<std::string>> split_csv(const std::string& text, const std::string& header,
                                                std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(header, 0) != 0) {
    throw FormatError("expected CSV header '" + header + "'", 0);
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) cols.push_back(field);
      if (!line.empty() && line.back() == ',') cols.emplace_back();
      if (columns != 0 && cols.size() != columns) {
        throw FormatError("CSV row has " + std::to_string(cols.size()) + " columns, expected " +
                              std::to_string(columns),
                          offset);
      }
      rows.push_back(std::move(cols));
    }
    offset += line.size() + 1;
  }
  return rows;
}

template <typename F>
auto parse_field(F&& f, std::size_t row) {
  try {
    return f();
  } catch (const std::exception&) {
    throw FormatError("bad numeric field in CSV row " + std::to_string(row), 0);
  }
}

std::vector<float> ordered_values(const SweepReport& r) {
  std::vector<float> values;
  for (const auto& x : r.extremes) {
    if (std::find(values.begin(), values.end(), x.value) == values.end()) values.push_back(x.value);
  }
  std::sort(values.begin(), values.end());
  return values;
}

}  // namespace

std::string format_report_csv(const SweepReport& r) {
  std::string out = "layer,target_kind,target_index,epsilon,accuracy\n";
  for (const SweepEntry& e : r.entries) {
    const Shape4& shape = r.sites.at(e.fault.site).shape;
    out += std::to_string(e.fault.site) + "," + to_string(e.fault.target) + "," +
           std::to_string(e.fault.target_index(shape)) + "," + eps_str(e.fault.value) + "," +
           pct(e.accuracy) + "\n";
  }
  return out;
}

std::string format_summary_csv(const SweepReport& r) {
  const auto values = ordered_values(r);
  std::string out = "layer,targets";
  for (float v : values) out += ",min_s@" + eps_str(v) + ",max_s@" + eps_str(v);
  out += "\n";
  for (const SummaryRow& row : summarize(r).rows) {
    out += std::to_string(row.site) + "," + std::to_string(row.targets);
    for (float v : values) {
      const auto it = std::find(row.values.begin(), row.values.end(), v);
      if (it == row.values.end()) {
        out += ",,";
      } else {
        const auto k = static_cast<std::size_t>(it - row.values.begin());
        out += "," + pct(row.min_accuracy[k]) + "," + pct(row.max_accuracy[k]);
      }
    }
    out += "\n";
  }
  return out;
}

std::string format_report_json(const SweepReport& r) {
  json j;
  j["schema"] = "fatnet.sweep";
  j["version"] = SweepReport::kSchemaVersion;
  j["mode"] = to_string(r.mode);
  j["network_id"] = r.network_id;
  j["dataset"] = r.dataset;
  j["eval_samples"] = r.eval_samples;
  j["error_free"] = {{"accuracy", r.error_free}, {"correct", r.error_free_correct}};
  j["variance"] = r.variance;
  json sites = json::array();
  for (const SiteInfo& s : r.sites) {
    sites.push_back({{"site", s.site},
                     {"layer", s.layer},
                     {"shape", {s.shape.c, s.shape.h, s.shape.w}},
                     {"values", s.values}});
  }
  j["sites"] = sites;
  json entries = json::array();
  for (const SweepEntry& e : r.entries) {
    entries.push_back({e.fault.site, e.fault.target_index(r.sites.at(e.fault.site).shape), e.fault.value,
                       e.correct, e.accuracy});
  }
  j["entries_columns"] = {"site", "target_index", "epsilon", "correct", "accuracy"};
  j["entries"] = entries;
  json ext = json::array();
  for (const LayerExtremes& x : r.extremes) {
    ext.push_back({{"site", x.site},
                   {"epsilon", x.value},
                   {"targets", x.targets},
                   {"min", x.min_accuracy},
                   {"max", x.max_accuracy}});
  }
  j["extremes"] = ext;
  return j.dump(1) + "\n";
}

SweepReport parse_report_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("report JSON: ") + e.what(), e.byte);
  }
  try {
    if (j.at("schema") != "fatnet.sweep") throw FormatError("not a fatnet sweep report", 0);
    if (j.at("version").get<int>() != SweepReport::kSchemaVersion) {
      throw FormatError("unsupported sweep report version", 0);
    }
    SweepReport r;
    r.mode = parse_sweep_mode(j.at("mode").get<std::string>());
    r.network_id = j.at("network_id").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.eval_samples = j.at("eval_samples").get<std::size_t>();
    r.error_free = j.at("error_free").at("accuracy").get<double>();
    r.error_free_correct = j.at("error_free").at("correct").get<std::size_t>();
    for (const json& s : j.at("sites")) {
      const auto shape = s.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 3) throw FormatError("site shape needs 3 dims", 0);
      r.sites.push_back({s.at("site").get<std::size_t>(), s.at("layer").get<std::size_t>(),
                         Shape4{1, shape[0], shape[1], shape[2]}, s.at("values").get<std::vector<float>>()});
    }
    for (const json& e : j.at("entries")) {
      SweepEntry entry;
      entry.fault.site = e.at(0).get<std::size_t>();
      if (entry.fault.site >= r.sites.size()) throw FormatError("entry names an unknown site", 0);
      entry.fault.target = r.mode;
      const auto t = e.at(1).get<std::size_t>();
      const Shape4& shape = r.sites[entry.fault.site].shape;
      if (r.mode == SweepMode::channel) {
        entry.fault.channel = t;
      } else {
        entry.fault.row = t / shape.w;
        entry.fault.col = t % shape.w;
      }
      entry.fault.value = e.at(2).get<float>();
      entry.correct = e.at(3).get<std::size_t>();
      entry.accuracy = e.at(4).get<double>();
      r.entries.push_back(entry);
    }
    finalize_report(r);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what(), 0);
  }
}

std::string format_frontier_csv(const std::vector<FrontierPoint>& points) {
  std::string out = "k,triplicated_channels_list_hash,cost,worst_case_error,dominated\n";
  char buf[160];
  for (const FrontierPoint& p : points) {
    std::snprintf(buf, sizeof(buf), "%zu,%016" PRIx64 ",%.1f,%.2f,%s\n", p.k, p.plan_hash, p.cost,
                  p.worst_case_error, p.dominated ? "true" : "false");
    out += buf;
  }
  return out;
}

std::vector<FrontierPoint> parse_frontier_csv(const std::string& text) {
  std::vector<FrontierPoint> out;
  std::size_t i = 0;
  for (const auto& c : split_csv(text, "k,triplicated_channels_list_hash,cost,worst_case_error,dominated", 5)) {
    out.push_back(parse_field(
        [&] {
          if (c[4] != "true" && c[4] != "false") throw std::invalid_argument("dominated");
          return FrontierPoint{std::stoul(c[0]), std::stoull(c[1], nullptr, 16), std::stod(c[2]),
                               std::stod(c[3]), c[4] == "true"};
        },
        i++));
  }
  return out;
}

std::string format_scatter_csv(const std::vector<ScatterPoint>& points) {
  std::string out = "network,min_acc,max_acc,error_free\n";
  for (const ScatterPoint& p : points) {
    out += p.network + "," + pct(p.min_accuracy) + "," + pct(p.max_accuracy) + "," + pct(p.error_free) + "\n";
  }
  return out;
}

std::vector<ScatterPoint> parse_scatter_csv(const std::string& text) {
  std::vector<ScatterPoint> out;
  std::size_t i = 0;
  for (const auto& c : split_csv(text, "network,min_acc,max_acc,error_free", 4)) {
    out.push_back(parse_field(
        [&] { return ScatterPoint{c[0], std::stod(c[1]), std::stod(c[2]), std::stod(c[3])}; }, i++));
  }
  return out;
}

std::vector<ReportCsvRow> parse_report_csv(const std::string& text) {
  std::vector<ReportCsvRow> out;
  std::size_t i = 0;
  for (const auto& c : split_csv(text, "layer,target_kind,target_index,epsilon,accuracy", 5)) {
    out.push_back(parse_field(
        [&] {
          if (c[1] != "channel" && c[1] != "pixel") throw std::invalid_argument("target_kind");
          return ReportCsvRow{std::stoul(c[0]), c[1], std::stoul(c[2]), std::stof(c[3]), std::stod(c[4])};
        },
        i++));
  }
  return out;
}

std::vector<std::vector<std::string>> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  if (header.rfind("layer,targets", 0) != 0) throw FormatError("expected summary CSV header", 0);
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  if ((columns - 2) % 2 != 0) throw FormatError("summary CSV needs min/max column pairs", 0);
  auto rows = split_csv(text, "layer,targets", columns);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& cell : rows[i]) {
      if (!cell.empty()) parse_field([&] { return std::stod(cell); }, i);
    }
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace fatnet
