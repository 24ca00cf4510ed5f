#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "playclone/cli.hpp"

namespace playclone::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Data lines with their header's column index.
struct Table {
  std::map<std::string, std::size_t> col;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> meta;  // "# key=value" lines

  const std::string& at(const std::vector<std::string>& r, const std::string& name) const {
    const auto it = col.find(name);
    if (it == col.end()) throw Error(ErrorKind::Schema, "plot: CSV has no '" + name + "' column");
    if (it->second >= r.size()) throw Error(ErrorKind::Schema, "plot: short CSV row");
    return r[it->second];
  }
};

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string k = line.substr(1, eq - 1);
        k.erase(0, k.find_first_not_of(' '));
        t.meta[k] = line.substr(eq + 1);
      }
      continue;
    }
    auto cells = split_csv(line);
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i) t.col[cells[i]] = i;
      header = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (!header) throw Error(ErrorKind::Schema, "plot: CSV has no header line");
  return t;
}

double number(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Schema, "plot: '" + s + "' is not a number");
  }
}

struct Series {
  std::string label;
  std::vector<double> x, y, err;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1000) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool markers) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.err.empty() ? 0.0 : s.err[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (!std::isfinite(x0)) throw Error(ErrorKind::Schema, "plot: nothing to draw");
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  y1 += 0.05 * (y1 - y0);
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5, yv = y0 + (y1 - y0) * i / 5;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << tick_label(xv)
      << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
      << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << W - R << "\" y2=\"" << num(py(yv))
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << escape(xlabel)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << escape(ylabel) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kColors[si % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.err.empty() && s.err[i] > 0) {
        o << "<line x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(s.y[i] - s.err[i])) << "\" x2=\""
          << num(px(s.x[i])) << "\" y2=\"" << num(py(s.y[i] + s.err[i])) << "\" stroke=\"" << color << "\"/>\n";
      }
      if (markers) {
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3.5\" fill=\"" << color
          << "\"/>\n";
      }
    }
    const double ly = T + 14 + 16.0 * static_cast<double>(si);
    o << "<rect x=\"" << L + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
    o << "<text x=\"" << L + 30 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string x_label(const std::string& kind) {
  if (kind == "clone_length") return "clone episode length (s)";
  if (kind == "capacity") return "Play-BC capacity index";
  if (kind == "random_baseline") return "extra random-play hours";
  return "extra cloned-play hours";
}

}  // namespace

std::string render_sweep_svg(const std::vector<std::pair<std::string, std::string>>& inputs,
                             const std::string& title) {
  std::vector<Series> series;
  std::string kind;
  for (const auto& [label, text] : inputs) {
    const Table t = parse_table(text);
    if (kind.empty() && t.meta.count("sweep")) kind = t.meta.at("sweep");
    std::vector<bench::SweepRow> rows;
    for (const auto& r : t.rows) {
      bench::SweepRow row;
      row.point = number(t.at(r, "point"));
      row.ok = t.at(r, "status") == "ok";
      if (row.ok) row.report.average = number(t.at(r, "average"));
      rows.push_back(row);
    }
    Series s;
    s.label = label;
    for (const bench::PointSummary& p : bench::summarize(rows)) {
      if (p.seeds == 0) continue;
      s.x.push_back(p.point);
      s.y.push_back(100.0 * p.mean);
      s.err.push_back(100.0 * p.std_error);
    }
    series.push_back(std::move(s));
  }
  return line_chart(title.empty() ? "18-task average success" : title, x_label(kind), "success (%)", series, true);
}

std::string render_coverage_svg(const std::vector<std::pair<std::string, std::string>>& inputs,
                                const std::string& title) {
  std::vector<Series> series;
  for (const auto& [label, text] : inputs) {
    const Table t = parse_table(text);
    // One polyline per segment so the reference and cloned parts stand apart.
    std::vector<Series> parts;
    for (const auto& r : t.rows) {
      const std::string& tag = t.at(r, "segment_tag");
      if (parts.empty() || parts.back().label != (inputs.size() > 1 ? label + ":" : "") + tag) {
        Series s;
        s.label = (inputs.size() > 1 ? label + ":" : "") + tag;
        if (!parts.empty()) {
          s.x.push_back(parts.back().x.back());
          s.y.push_back(parts.back().y.back());
        }
        parts.push_back(std::move(s));
      }
      parts.back().x.push_back(number(t.at(r, "hours")));
      parts.back().y.push_back(number(t.at(r, "cumulative_unique")));
    }
    for (auto& p : parts) series.push_back(std::move(p));
  }
  return line_chart(title.empty() ? "state-space coverage" : title, "hours of play", "cumulative unique bins",
                    series, false);
}

}  // namespace playclone::cli
