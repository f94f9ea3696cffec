#include "spmpc/report.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spmpc {
namespace {

void append_footer(std::ostringstream& out, const std::vector<ReportRow>& rows) {
  std::set<std::string> schemes;
  for (const auto& r : rows) schemes.insert(r.scheme);
  for (const auto& s : schemes) {
    const Aggregate a = aggregate_iterations(rows, s);
    out << s << ",avg," << a.avg << ",,,\n";
    out << s << ",median," << a.med << ",,,\n";
    out << s << ",max," << a.max << ",,,\n";
    out << s << ",min," << a.min << ",,,\n";
  }
}

}  // namespace

std::string render_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  std::ostringstream out;
  out.precision(17);
  if (format == ReportFormat::csv) {
    out << "scheme,instance,iterations,restarts,residual,wall_us\n";
    for (const auto& r : rows)
      out << r.scheme << ',' << r.instance << ',' << r.iterations << ',' << r.restarts
          << ',' << r.residual << ',' << r.wall_us << '\n';
    append_footer(out, rows);
  } else {
    out << "{\n  \"rows\": [\n";
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      out << "    {\"scheme\": \"" << r.scheme << "\", \"instance\": " << r.instance
          << ", \"iterations\": " << r.iterations << ", \"restarts\": " << r.restarts
          << ", \"residual\": " << r.residual << ", \"wall_us\": " << r.wall_us << '}'
          << (i + 1 < rows.size() ? "," : "") << '\n';
    }
    out << "  ],\n  \"aggregates\": {\n";
    std::set<std::string> schemes;
    for (const auto& r : rows) schemes.insert(r.scheme);
    size_t i = 0;
    for (const auto& s : schemes) {
      const Aggregate a = aggregate_iterations(rows, s);
      out << "    \"" << s << "\": {\"avg\": " << a.avg << ", \"median\": " << a.med
          << ", \"max\": " << a.max << ", \"min\": " << a.min << '}'
          << (++i < schemes.size() ? "," : "") << '\n';
    }
    out << "  }\n}\n";
  }
  return out.str();
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("emit_report: cannot open " + path);
  f << render_report(rows, format);
  if (!f) throw std::runtime_error("emit_report: write failed for " + path);
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::vector<ReportRow> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    ReportRow r;
    std::getline(ls, r.scheme, ',');
    std::getline(ls, field, ',');
    if (field == "avg" || field == "median" || field == "max" || field == "min")
      continue;  // aggregate footer
    r.instance = std::stol(field);
    std::getline(ls, field, ',');
    r.iterations = std::stol(field);
    std::getline(ls, field, ',');
    r.restarts = std::stol(field);
    std::getline(ls, field, ',');
    r.residual = std::stod(field);
    std::getline(ls, field, ',');
    r.wall_us = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace spmpc
