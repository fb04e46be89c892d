#pragma once

#include "handkin/eval/experiment.hpp"

#include <filesystem>
#include <string>

namespace handkin::eval {

struct ReportFiles {
  std::filesystem::path results_csv;     // one row per CvResult
  std::filesystem::path aggregates_csv;  // mean/std per (model, domain, window)
  std::filesystem::path table_txt;       // participants x windows x domains x axes
  std::filesystem::path chart_svg;       // mean CV bars grouped by window
};

ReportFiles emit_report(const ReportTable& rt, const std::filesystem::path& out_dir);

std::string results_csv(const std::vector<CvResult>& rows);
std::vector<CvResult> parse_results_csv(const std::string& text);
std::string aggregates_csv(const std::vector<AggregateRow>& rows);
std::string text_table(const ReportTable& rt);
std::string svg_chart(const ReportTable& rt);

}  // namespace handkin::eval
