#pragma once

#include <string>
#include <vector>

#include "pcnlab/experiments.hpp"

namespace pcnlab {

// SVG emission for the standard reports. Fixed canvas, fixed palette, fixed
// number formatting: regenerating from the same results is byte-identical.

struct CurveSeries {
  std::string name;
  std::string color;
  bool dashed = false;
  std::vector<double> values;  // NaN entries are skipped
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<CurveSeries>& series,
                           double y_min, double y_max);

std::string svg_histogram_chart(const std::string& title, const Histogram& hist);

struct AblationSeries {
  std::string name;
  std::string color;
  std::vector<DepthStats> stats;
};

// grouped bars with error bars, one group per ablation depth
std::string svg_ablation_chart(const std::string& title,
                               const std::vector<AblationSeries>& series);

std::string text_summary(const std::vector<RunResult>& results);

// color assigned to each task in combined charts
std::string task_color(const std::string& task);

// Loads every result dir, writes curves.svg, per-task histogram and ablation
// charts, and summary.txt into out_dir. Throws on missing/corrupt results.
void write_report(const std::vector<std::string>& result_dirs, const std::string& out_dir);

}  // namespace pcnlab
