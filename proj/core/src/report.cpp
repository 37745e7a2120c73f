#include <cmath>
#include <fstream>
#include <locale>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "urcd/harness.hpp"

namespace urcd {
namespace {

constexpr std::size_t kColumnCount = std::size(kReportColumns);

std::string format_value(double v, int precision) {
  if (std::abs(v) < 1e-20) return "0";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(precision);
  os << v;
  return os.str();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_value(*v, 3) : "-";
}

std::vector<std::string> cells(const ReportRow& r) {
  const Metrics& m = r.metrics;
  return {r.model,
          format_value(m.w1_lo, 10),
          format_value(m.w1, 10),
          format_value(m.w1_hi, 10),
          format_value(m.m_lo, 10),
          format_value(m.m, 10),
          format_value(m.m_hi, 10),
          std::to_string(m.n_par),
          format_optional(m.train_time),
          format_optional(m.test_time_ratio)};
}

double parse_double(const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  if (is.fail() || !is.eof()) throw std::invalid_argument("report: malformed number '" + s + "'");
  return v;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s == "-") return std::nullopt;
  return parse_double(s);
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "' (expected csv or json)");
}

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out;
    for (std::size_t c = 0; c < kColumnCount; ++c) out += (c ? "," : "") + std::string(kReportColumns[c]);
    out += '\n';
    for (const auto& row : report.rows) {
      const auto values = cells(row);
      for (std::size_t c = 0; c < values.size(); ++c) out += (c ? "," : "") + values[c];
      out += '\n';
    }
    return out;
  }

  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["generator"] = report.generator_description;
  j["config"] = report.config_snapshot;
  j["columns"] = nlohmann::ordered_json::array();
  for (const char* c : kReportColumns) j["columns"].push_back(c);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    const auto values = cells(row);
    nlohmann::ordered_json r;
    for (std::size_t c = 0; c < kColumnCount; ++c) r[kReportColumns[c]] = values[c];
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

void write_report(const ExperimentReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file '" + path + "' for writing");
  out << emit_report(report, format);
  if (!out) throw std::runtime_error("failed writing report file '" + path + "'");
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("report: empty CSV");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != kColumnCount) {
      throw std::invalid_argument("report: expected " + std::to_string(kColumnCount) + " columns, got " +
                                  std::to_string(f.size()));
    }
    ReportRow r;
    r.model = f[0];
    r.metrics.w1_lo = parse_double(f[1]);
    r.metrics.w1 = parse_double(f[2]);
    r.metrics.w1_hi = parse_double(f[3]);
    r.metrics.m_lo = parse_double(f[4]);
    r.metrics.m = parse_double(f[5]);
    r.metrics.m_hi = parse_double(f[6]);
    r.metrics.n_par = static_cast<std::size_t>(std::stoull(f[7]));
    r.metrics.train_time = parse_optional(f[8]);
    r.metrics.test_time_ratio = parse_optional(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace urcd
