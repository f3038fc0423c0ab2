#include "flowmatch/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "flowmatch/error.hpp"
#include "flowmatch/io.hpp"

namespace flowmatch {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::MalformedFile, "not a number: '" + s + "'", line);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double from, double to) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return from + t * (to - from);
  }
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo && v <= hi) out.push_back(v);
      }
      return out;
    }
    for (int k = 0; k <= 5; ++k) out.push_back(lo + (hi - lo) * k / 5.0);
    return out;
  }
};

Axis fit_axis(std::vector<double> values, bool log) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [&](double v) { return !std::isfinite(v) || (log && v <= 0.0); }),
               values.end());
  Axis a;
  a.log = log;
  if (values.empty()) return a.log ? Axis{1, 10, true} : a;
  a.lo = *std::min_element(values.begin(), values.end());
  a.hi = *std::max_element(values.begin(), values.end());
  if (log) {
    a.lo = std::pow(10.0, std::floor(std::log10(a.lo)));
    a.hi = std::pow(10.0, std::ceil(std::log10(a.hi)));
    if (a.hi <= a.lo) a.hi = a.lo * 10.0;
  } else {
    if (a.hi == a.lo) {
      a.lo -= 0.5;
      a.hi += 0.5;
    }
    const double pad = 0.05 * (a.hi - a.lo);
    a.lo -= pad;
    a.hi += pad;
  }
  return a;
}

std::string svg_open() {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out.str();
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", const char* extra = "") {
  std::ostringstream out;
  out << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\"" << extra << '>' << xml_escape(s)
      << "</text>\n";
  return out.str();
}

std::string labels(const std::string& title, const std::string& x_label, const std::string& y_label) {
  const double cy = kTop + (kHeight - kTop - kBottom) / 2;
  std::ostringstream rot;
  rot << " transform=\"rotate(-90 18 " << cy << ")\"";
  return text(kWidth / 2, 22, title, "middle", " font-size=\"15\"") +
         text(kLeft + (kWidth - kLeft - kRight) / 2, kHeight - 15, x_label) +
         text(18, cy, y_label, "middle", rot.str().c_str());
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "svg") return ReportFormat::Svg;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + name + "' (csv, json, svg)");
}

std::string format_summary_csv(const std::vector<BenchRecord>& records) {
  std::string out = "case,solver,seed,metric,value\n";
  for (const auto& r : records) {
    std::string value;
    if (r.metric == "tts") {
      if (r.tts) value = num(*r.tts);
    } else {
      value = num(r.epsilon.empty() ? std::numeric_limits<double>::infinity() : r.epsilon.front());
    }
    out += r.case_name + ',' + r.solver + ',' + std::to_string(r.seed) + ',' + r.metric + ',' + value + '\n';
  }
  return out;
}

std::vector<BenchRecord> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "case,solver,seed,metric,value") {
    throw Error(ErrorCode::MalformedFile, "expected header 'case,solver,seed,metric,value'", line_no);
  }
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw Error(ErrorCode::MalformedFile, "expected 5 columns", line_no);
    BenchRecord r;
    r.case_name = cells[0];
    r.solver = cells[1];
    try {
      std::size_t used = 0;
      r.seed = std::stoull(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("seed");
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedFile, "bad seed '" + cells[2] + "'", line_no);
    }
    r.metric = cells[3];
    if (r.metric == "tts") {
      if (!cells[4].empty()) r.tts = parse_number(cells[4], line_no);
    } else if (r.metric == "epsilon") {
      r.epsilon.push_back(parse_number(cells[4], line_no));
    } else {
      throw Error(ErrorCode::MalformedFile, "unknown metric '" + r.metric + "'", line_no);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::filesystem::path emit_report(const std::vector<BenchRecord>& records, ReportFormat format,
                                  const std::filesystem::path& out_dir, double eps_threshold) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no bench records to report");
  switch (format) {
    case ReportFormat::Csv: {
      const auto path = out_dir / "summary.csv";
      write_text_file(path, format_summary_csv(records));
      return path;
    }
    case ReportFormat::Json: {
      nlohmann::json doc;
      doc["records"] = nlohmann::json::array();
      for (const auto& r : records) doc["records"].push_back(record_to_json(r));
      doc["summary"] = nlohmann::json::array();
      for (const auto& row : aggregate(records, eps_threshold)) {
        auto finite = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        doc["summary"].push_back({{"case", row.case_name},
                                  {"solver", row.solver},
                                  {"metric", row.metric},
                                  {"median", finite(row.median)},
                                  {"q25", finite(row.q25)},
                                  {"q75", finite(row.q75)},
                                  {"runs", row.runs},
                                  {"valid", row.valid},
                                  {"within_threshold", row.within_threshold}});
      }
      const auto path = out_dir / "summary.json";
      write_text_file(path, doc.dump(2) + "\n");
      return path;
    }
    case ReportFormat::Svg: {
      const auto path = out_dir / "summary.svg";
      write_text_file(path, summary_svg(records, eps_threshold));
      return path;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown report format");
}

std::string format_rho_sweep_csv(const std::vector<RhoSweepRow>& rows) {
  std::string out =
      "case,seed,alpha,rho,p2p_fees,residual_fees,total_dso_fees,baseline_fees,p2p_ratio,"
      "mean_consumer_tariff,mean_producer_tariff,objective,proven_optimal\n";
  for (const auto& r : rows) {
    out += r.case_name + ',' + std::to_string(r.seed) + ',' + num(r.alpha) + ',' + num(r.rho) + ',' +
           num(r.report.p2p_fees) + ',' + num(r.report.residual_fees) + ',' + num(r.report.total_dso_fees) + ',' +
           num(r.report.baseline_fees) + ',' + num(r.report.p2p_ratio) + ',' + num(r.mean_consumer_tariff) + ',' +
           num(r.mean_producer_tariff) + ',' + num(r.objective) + ',' + (r.proven_optimal ? "1" : "0") + '\n';
  }
  return out;
}

std::string format_sa_sweep_csv(const std::vector<SaSweepRow>& rows) {
  std::string out = "kind,num_sweeps,beta_start,beta_end,tts_median,tts_q75,valid_instances\n";
  for (const auto& r : rows) {
    out += r.kind + ',' + std::to_string(r.num_sweeps) + ',' + num(r.beta_start) + ',' + num(r.beta_end) + ',' +
           num(r.tts_median) + ',' + num(r.tts_q75) + ',' + std::to_string(r.valid_instances) + '\n';
  }
  return out;
}

std::string render_svg(const LineChart& chart) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::vector<double> xs, ys;
  for (const auto& s : chart.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.y_low.begin(), s.y_low.end());
    ys.insert(ys.end(), s.y_high.begin(), s.y_high.end());
  }
  Axis ax = fit_axis(xs, false);
  if (!chart.x_ticks.empty()) ax = {-0.5, chart.x_ticks.size() - 0.5, false};
  const Axis ay = fit_axis(ys, chart.log_y);

  std::ostringstream out;
  out << svg_open() << labels(chart.title, chart.x_label, chart.y_label);
  out << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\""
      << y0 << "\"/><line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/></g>\n";
  for (double t : ay.ticks()) {
    const double y = ay.map(t, y0, y1);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << x1 << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n"
        << text(x0 - 6, y + 4, short_num(t), "end");
  }
  if (chart.x_ticks.empty()) {
    for (double t : ax.ticks()) out << text(ax.map(t, x0, x1), y0 + 16, short_num(t));
  } else {
    for (std::size_t k = 0; k < chart.x_ticks.size(); ++k) {
      out << text(ax.map(static_cast<double>(k), x0, x1), y0 + 16, chart.x_ticks[k]);
    }
  }
  auto valid = [&](double v) { return std::isfinite(v) && (!ay.log || v > 0.0); };
  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::string points;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!valid(s.y[k])) continue;
      const double px = ax.map(s.x[k], x0, x1), py = ay.map(s.y[k], y0, y1);
      points += short_num(px) + ',' + short_num(py) + ' ';
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (k < s.y_low.size() && k < s.y_high.size() && valid(s.y_low[k]) && valid(s.y_high[k])) {
        out << "<line x1=\"" << px << "\" y1=\"" << ay.map(s.y_low[k], y0, y1) << "\" x2=\"" << px << "\" y2=\""
            << ay.map(s.y_high[k], y0, y1) << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    if (!points.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
          << "\"/>\n";
    }
    const double ly = kTop + 10 + 18 * static_cast<double>(si);
    out << "<rect x=\"" << x1 + 15 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"12\" fill=\"" << color
        << "\"/>\n"
        << text(x1 + 32, ly + 2, s.label, "start");
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_svg(const Heatmap& map) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double cw = (x1 - x0) / std::max<std::size_t>(1, map.columns.size());
  const double ch = (y0 - y1) / std::max<std::size_t>(1, map.rows.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : map.values) {
    for (double v : row) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  std::ostringstream out;
  out << svg_open() << labels(map.title, map.x_label, map.y_label);
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    for (std::size_t c = 0; c < map.columns.size(); ++c) {
      const double v = r < map.values.size() && c < map.values[r].size() ? map.values[r][c]
                                                                            : std::numeric_limits<double>::quiet_NaN();
      std::string fill = "#bbbbbb";
      if (std::isfinite(v)) {
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        char buf[16];
        // low = dark blue, high = yellow
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(40 + 215 * t), static_cast<int>(40 + 180 * t),
                      static_cast<int>(120 - 90 * t));
        fill = buf;
      }
      const double px = x0 + cw * static_cast<double>(c), py = y0 - ch * static_cast<double>(r + 1);
      out << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
          << fill << "\" stroke=\"white\"/>\n";
      if (std::isfinite(v)) out << text(px + cw / 2, py + ch / 2 + 4, short_num(v), "middle", " font-size=\"9\"");
    }
  }
  for (std::size_t c = 0; c < map.columns.size(); ++c) {
    out << text(x0 + cw * (static_cast<double>(c) + 0.5), y0 + 16, map.columns[c]);
  }
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    out << text(x0 - 6, y0 - ch * (static_cast<double>(r) + 0.5) + 4, map.rows[r], "end");
  }
  if (std::isfinite(lo)) {
    out << text(x1 + 15, kTop + 10, "min " + short_num(lo), "start")
        << text(x1 + 15, kTop + 28, "max " + short_num(hi), "start");
  }
  out << "</svg>\n";
  return out.str();
}

std::string summary_svg(const std::vector<BenchRecord>& records, double eps_threshold) {
  const auto rows = aggregate(records, eps_threshold);
  std::vector<std::string> cases;
  for (const auto& r : records) {
    if (std::find(cases.begin(), cases.end(), r.case_name) == cases.end()) cases.push_back(r.case_name);
  }
  std::set<std::string> metrics;
  for (const auto& r : rows) metrics.insert(r.metric);

  // Several metrics stack vertically as nested <svg> panels in one document.
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight * static_cast<double>(metrics.size()) << "\">\n";
  double offset = 0;
  for (const auto& metric : metrics) {
    LineChart chart;
    chart.title = metric == "tts" ? "Median time to solution" : "Median relative error";
    chart.x_label = "case";
    chart.y_label = metric == "tts" ? "TTS [s]" : "epsilon";
    chart.x_ticks = cases;
    chart.log_y = metric == "tts";
    std::map<std::string, Series> by_solver;
    for (const auto& r : rows) {
      if (r.metric != metric) continue;
      auto& s = by_solver[r.solver];
      s.label = r.solver;
      const auto pos = std::find(cases.begin(), cases.end(), r.case_name) - cases.begin();
      s.x.push_back(static_cast<double>(pos));
      s.y.push_back(r.median);
      s.y_low.push_back(r.q25);
      s.y_high.push_back(r.q75);
    }
    for (auto& [name, s] : by_solver) chart.series.push_back(std::move(s));
    std::string panel = render_svg(chart);
    panel.erase(0, panel.find("<svg"));
    panel.insert(4, " y=\"" + short_num(offset) + "\"");
    out << panel;
    offset += kHeight;
  }
  out << "</svg>\n";
  return out.str();
}

std::string rho_sweep_svg(const std::vector<RhoSweepRow>& rows) {
  std::set<double> alphas;
  for (const auto& r : rows) alphas.insert(r.alpha);
  LineChart chart;
  chart.title = "DSO fees versus grid fee parameter";
  chart.x_label = "rho [ct/kWh]";
  chart.y_label = "fees [ct]";
  bool baseline_added = false;
  for (double a : alphas) {
    const auto curve = fee_curve(rows, a);
    Series p2p{"P2P fees, alpha " + short_num(a), {}, {}, {}, {}};
    Series total{"total fees, alpha " + short_num(a), {}, {}, {}, {}};
    Series base{"baseline fees", {}, {}, {}, {}};
    for (const auto& pt : curve) {
      p2p.x.push_back(pt.rho);
      p2p.y.push_back(pt.p2p_fees);
      total.x.push_back(pt.rho);
      total.y.push_back(pt.total_fees);
      base.x.push_back(pt.rho);
      base.y.push_back(pt.baseline_fees);
    }
    chart.series.push_back(std::move(p2p));
    chart.series.push_back(std::move(total));
    if (!baseline_added) {
      chart.series.push_back(std::move(base));
      baseline_added = true;
    }
  }
  return render_svg(chart);
}

std::string sa_sweep_svg(const std::vector<SaSweepRow>& rows) {
  std::vector<double> starts, ends;
  for (const auto& r : rows) {
    if (r.kind != "schedule") continue;
    if (std::find(starts.begin(), starts.end(), r.beta_start) == starts.end()) starts.push_back(r.beta_start);
    if (std::find(ends.begin(), ends.end(), r.beta_end) == ends.end()) ends.push_back(r.beta_end);
  }
  if (starts.empty()) {
    LineChart chart;
    chart.title = "SA time to solution versus sweeps";
    chart.x_label = "num_sweeps";
    chart.y_label = "TTS [s]";
    chart.log_y = true;
    Series median{"median", {}, {}, {}, {}};
    Series q75{"75% quantile", {}, {}, {}, {}};
    for (const auto& r : rows) {
      median.x.push_back(r.num_sweeps);
      median.y.push_back(r.tts_median);
      q75.x.push_back(r.num_sweeps);
      q75.y.push_back(r.tts_q75);
    }
    chart.series = {median, q75};
    return render_svg(chart);
  }
  std::sort(starts.begin(), starts.end());
  std::sort(ends.begin(), ends.end());
  Heatmap map;
  map.title = "SA 75% quantile TTS [s]";
  map.x_label = "beta_end";
  map.y_label = "beta_start";
  for (double e : ends) map.columns.push_back(short_num(e));
  for (double s : starts) map.rows.push_back(short_num(s));
  map.values.assign(starts.size(), std::vector<double>(ends.size(), std::numeric_limits<double>::quiet_NaN()));
  for (const auto& r : rows) {
    if (r.kind != "schedule") continue;
    const auto i = std::find(starts.begin(), starts.end(), r.beta_start) - starts.begin();
    const auto j = std::find(ends.begin(), ends.end(), r.beta_end) - ends.begin();
    map.values[i][j] = r.tts_q75;
  }
  return render_svg(map);
}

}  // namespace flowmatch
