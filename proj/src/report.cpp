#include "pcnlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace pcnlab {

namespace {

constexpr int kWidth = 880;
constexpr int kHeight = 520;
constexpr int kMarginL = 70, kMarginR = 170, kMarginT = 44, kMarginB = 54;
constexpr int kPlotW = kWidth - kMarginL - kMarginR;
constexpr int kPlotH = kHeight - kMarginT - kMarginB;

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void svg_open(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  s << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
       "text-anchor=\"middle\">"
    << title << "</text>\n";
}

void svg_axes(std::ostringstream& s, const std::string& x_label, const std::string& y_label) {
  s << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << kPlotW
    << "\" height=\"" << kPlotH << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text x=\"" << kMarginL + kPlotW / 2 << "\" y=\"" << kHeight - 12
    << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << x_label
    << "</text>\n";
  s << "<text x=\"18\" y=\"" << kMarginT + kPlotH / 2
    << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 18 "
    << kMarginT + kPlotH / 2 << ")\">" << y_label << "</text>\n";
}

double x_at(double frac) { return kMarginL + frac * kPlotW; }
double y_at(double frac) { return kMarginT + (1.0 - frac) * kPlotH; }

void y_ticks(std::ostringstream& s, double y_min, double y_max, int n) {
  for (int i = 0; i <= n; ++i) {
    double v = y_min + (y_max - y_min) * i / n;
    double y = y_at(static_cast<double>(i) / n);
    s << "<line x1=\"" << kMarginL - 4 << "\" y1=\"" << f2(y) << "\" x2=\"" << kMarginL
      << "\" y2=\"" << f2(y) << "\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << kMarginL - 8 << "\" y=\"" << f2(y + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << f3(v)
      << "</text>\n";
    if (i > 0 && i < n)
      s << "<line x1=\"" << kMarginL << "\" y1=\"" << f2(y) << "\" x2=\"" << kMarginL + kPlotW
        << "\" y2=\"" << f2(y) << "\" stroke=\"#ddd\"/>\n";
  }
}

void legend_entry(std::ostringstream& s, int slot, const std::string& color, bool dashed,
                  const std::string& name) {
  double y = kMarginT + 14 + slot * 20;
  double x = kMarginL + kPlotW + 12;
  s << "<line x1=\"" << f2(x) << "\" y1=\"" << f2(y) << "\" x2=\"" << f2(x + 26) << "\" y2=\""
    << f2(y) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
    << (dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
  s << "<text x=\"" << f2(x + 32) << "\" y=\"" << f2(y + 4)
    << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
}

}  // namespace

std::string task_color(const std::string& task) {
  if (task == "digit1") return "#d62728";         // red
  if (task == "groups") return "#1f77b4";         // blue
  if (task == "barred") return "#2c2c2c";         // near-black
  if (task == "onehot_bottom") return "#9467bd";  // purple
  return "#ff7f0e";
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<CurveSeries>& series,
                           double y_min, double y_max) {
  std::ostringstream s;
  svg_open(s, title);
  svg_axes(s, x_label, y_label);
  y_ticks(s, y_min, y_max, 5);

  size_t max_len = 1;
  for (const auto& sr : series) max_len = std::max(max_len, sr.values.size());
  // x ticks
  for (int i = 0; i <= 5; ++i) {
    double frac = static_cast<double>(i) / 5;
    double x = x_at(frac);
    s << "<line x1=\"" << f2(x) << "\" y1=\"" << kMarginT + kPlotH << "\" x2=\"" << f2(x)
      << "\" y2=\"" << kMarginT + kPlotH + 4 << "\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << f2(x) << "\" y=\"" << kMarginT + kPlotH + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
      << static_cast<long>(frac * (max_len > 1 ? max_len - 1 : 1)) << "</text>\n";
  }

  int slot = 0;
  for (const auto& sr : series) {
    bool all_nan = std::all_of(sr.values.begin(), sr.values.end(),
                               [](double v) { return std::isnan(v); });
    if (sr.values.empty() || all_nan) continue;
    std::ostringstream pts;
    for (size_t i = 0; i < sr.values.size(); ++i) {
      if (std::isnan(sr.values[i])) continue;
      double xf = max_len > 1 ? static_cast<double>(i) / (max_len - 1) : 0.0;
      double yf = (sr.values[i] - y_min) / (y_max - y_min);
      yf = std::clamp(yf, 0.0, 1.0);
      pts << f2(x_at(xf)) << "," << f2(y_at(yf)) << " ";
    }
    s << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.5\""
      << (sr.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    legend_entry(s, slot++, sr.color, sr.dashed, sr.name);
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_histogram_chart(const std::string& title, const Histogram& hist) {
  std::ostringstream s;
  svg_open(s, title);
  svg_axes(s, "action node value", "count");
  int64_t maxc = 1;
  for (int64_t c : hist.counts) maxc = std::max(maxc, c);
  y_ticks(s, 0, static_cast<double>(maxc), 5);
  int nbins = static_cast<int>(hist.counts.size());
  double bw = static_cast<double>(kPlotW) / nbins;
  for (int b = 0; b < nbins; ++b) {
    double h = static_cast<double>(hist.counts[b]) / maxc * kPlotH;
    s << "<rect x=\"" << f2(kMarginL + b * bw) << "\" y=\"" << f2(kMarginT + kPlotH - h)
      << "\" width=\"" << f2(bw) << "\" height=\"" << f2(h)
      << "\" fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  for (int i = 0; i <= 6; ++i) {
    double v = hist.lo + (hist.hi - hist.lo) * i / 6;
    double x = x_at(static_cast<double>(i) / 6);
    s << "<text x=\"" << f2(x) << "\" y=\"" << kMarginT + kPlotH + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << f2(v)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_ablation_chart(const std::string& title,
                               const std::vector<AblationSeries>& series) {
  std::ostringstream s;
  svg_open(s, title);
  svg_axes(s, "ablated layers", "action accuracy");
  y_ticks(s, 0, 1, 5);

  std::vector<int> depths;
  for (const auto& sr : series)
    for (const auto& st : sr.stats)
      if (std::find(depths.begin(), depths.end(), st.depth) == depths.end())
        depths.push_back(st.depth);
  std::sort(depths.begin(), depths.end());

  int groups = static_cast<int>(depths.size());
  int per = static_cast<int>(series.size());
  double gw = static_cast<double>(kPlotW) / std::max(groups, 1);
  double bw = gw * 0.7 / std::max(per, 1);

  int slot = 0;
  for (int si = 0; si < per; ++si) {
    const auto& sr = series[si];
    for (const auto& st : sr.stats) {
      int gi = static_cast<int>(std::find(depths.begin(), depths.end(), st.depth) -
                                depths.begin());
      double x = kMarginL + gi * gw + gw * 0.15 + si * bw;
      double h = std::clamp(st.mean_action_acc, 0.0, 1.0) * kPlotH;
      s << "<rect x=\"" << f2(x) << "\" y=\"" << f2(kMarginT + kPlotH - h) << "\" width=\""
        << f2(bw * 0.9) << "\" height=\"" << f2(h) << "\" fill=\"" << sr.color << "\"/>\n";
      // error bar
      double cx = x + bw * 0.45;
      double y0 = y_at(std::clamp(st.mean_action_acc - st.dispersion, 0.0, 1.0));
      double y1 = y_at(std::clamp(st.mean_action_acc + st.dispersion, 0.0, 1.0));
      s << "<line x1=\"" << f2(cx) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(cx) << "\" y2=\""
        << f2(y1) << "\" stroke=\"#222\" stroke-width=\"1.5\"/>\n";
      s << "<line x1=\"" << f2(cx - 4) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(cx + 4)
        << "\" y2=\"" << f2(y0) << "\" stroke=\"#222\"/>\n";
      s << "<line x1=\"" << f2(cx - 4) << "\" y1=\"" << f2(y1) << "\" x2=\"" << f2(cx + 4)
        << "\" y2=\"" << f2(y1) << "\" stroke=\"#222\"/>\n";
    }
    legend_entry(s, slot++, sr.color, false, sr.name);
  }
  for (int gi = 0; gi < groups; ++gi) {
    s << "<text x=\"" << f2(kMarginL + gi * gw + gw / 2) << "\" y=\"" << kMarginT + kPlotH + 18
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << depths[gi]
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string text_summary(const std::vector<RunResult>& results) {
  std::ostringstream s;
  s << "task            kind        seed  depth  label_acc  action_acc\n";
  s << "--------------------------------------------------------------\n";
  char line[160];
  for (const auto& r : results) {
    std::string task = r.task + (r.noise_top ? "(noise)" : "");
    std::snprintf(line, sizeof(line), "%-15s %-10s %5llu  %5d  %9.4f  %10.4f\n", task.c_str(),
                  r.kind.c_str(), static_cast<unsigned long long>(r.seed), r.ablation_depth,
                  r.final_label_acc, r.final_action_acc);
    s << line;
    for (const auto& st : r.depth_stats) {
      std::snprintf(line, sizeof(line), "    depth %d: mean action %.4f +- %.4f (%s, n=%d)\n",
                    st.depth, st.mean_action_acc, st.dispersion, st.dispersion_kind.c_str(),
                    st.n);
      s << line;
    }
  }
  return s.str();
}

void write_report(const std::vector<std::string>& result_dirs, const std::string& out_dir) {
  if (result_dirs.empty())
    throw std::runtime_error("report: no result directories given (expected dirs containing "
                             "result.json)");
  std::vector<RunResult> results;
  for (const std::string& dir : result_dirs) results.push_back(load_result(dir));
  fs::create_directories(out_dir);

  // combined accuracy curves, label + action per task, as in the three-task figure
  std::vector<CurveSeries> curves;
  for (const auto& r : results) {
    if (r.action_acc_curve.empty()) continue;
    std::string base = r.task + (r.noise_top ? "(noise)" : "");
    curves.push_back({base + " action", task_color(r.task), false, r.action_acc_curve});
    curves.push_back({base + " label", task_color(r.task), true, r.label_acc_curve});
  }
  {
    std::ofstream f(fs::path(out_dir) / "curves.svg", std::ios::trunc);
    f << svg_line_chart("Inference accuracy by iteration", "inference iteration", "accuracy",
                        curves, 0.0, 1.0);
  }

  std::map<std::string, std::vector<AblationSeries>> ablation_by_task;
  for (const auto& r : results) {
    if (!r.depth_stats.empty())
      ablation_by_task[r.task].push_back(
          {r.task + (r.noise_top ? "(noise)" : ""), task_color(r.task), r.depth_stats});
    if (r.action_histogram.total() > 0) {
      std::ofstream f(fs::path(out_dir) /
                          ("actions_hist_" + r.task + (r.noise_top ? "-noise" : "") + ".svg"),
                      std::ios::trunc);
      f << svg_histogram_chart("Final action node values: " + r.task, r.action_histogram);
    }
  }
  for (const auto& [task, series] : ablation_by_task) {
    std::ofstream f(fs::path(out_dir) / ("ablation_" + task + ".svg"), std::ios::trunc);
    f << svg_ablation_chart("Action accuracy vs ablation depth: " + task, series);
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.txt", std::ios::trunc);
    f << text_summary(results);
  }
}

}  // namespace pcnlab
