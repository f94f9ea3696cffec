#pragma once

#include "spmpc/bench.hpp"

#include <string>

namespace spmpc {

enum class ReportFormat { csv, json };

/// CSV columns: scheme,instance,iterations,restarts,residual,wall_us with
/// avg/median/max/min footer rows per scheme; JSON mirrors the records.
/// Wall time is reported but excluded from determinism comparisons.
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::string& path);

std::string render_report(const std::vector<ReportRow>& rows, ReportFormat format);

std::vector<ReportRow> parse_report_csv(const std::string& text);

}  // namespace spmpc
