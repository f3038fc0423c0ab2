#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowmatch/bench.hpp"

namespace flowmatch {

enum class ReportFormat { Csv, Json, Svg };

ReportFormat parse_report_format(const std::string& name);

/// summary.csv: header `case,solver,seed,metric,value`, one row per record.
/// value is the best epsilon (epsilon records) or the TTS in seconds (tts
/// records; empty when absent). Infinite values are written as `inf`.
std::string format_summary_csv(const std::vector<BenchRecord>& records);

/// Inverse of format_summary_csv; rebuilt records carry only the CSV columns.
std::vector<BenchRecord> parse_summary_csv(const std::string& text);

/// Writes summary.{csv,json,svg} into out_dir and returns the path.
/// Throws EmptyInput for an empty record set.
std::filesystem::path emit_report(const std::vector<BenchRecord>& records, ReportFormat format,
                                  const std::filesystem::path& out_dir, double eps_threshold = 0.05);

std::string format_rho_sweep_csv(const std::vector<RhoSweepRow>& rows);
std::string format_sa_sweep_csv(const std::vector<SaSweepRow>& rows);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_low;   // optional error band, same size as y or empty
  std::vector<double> y_high;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::string> x_ticks;  // categorical labels at x = 0, 1, ...; empty for numeric axes
  bool log_y = false;
};

struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> values;  // rows x columns; non-finite cells render grey
};

std::string render_svg(const LineChart& chart);
std::string render_svg(const Heatmap& map);

/// One chart per metric: median over seeds per case and solver, with the
/// 25-75% band.
std::string summary_svg(const std::vector<BenchRecord>& records, double eps_threshold = 0.05);
std::string rho_sweep_svg(const std::vector<RhoSweepRow>& rows);
std::string sa_sweep_svg(const std::vector<SaSweepRow>& rows);

}  // namespace flowmatch
