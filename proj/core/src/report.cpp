#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nestedaa/bench.hpp"
#include "nestedaa/errors.hpp"

namespace nestedaa {

namespace {

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  os << text;
  os.flush();
  if (!os) {
    throw IoError("failed writing " + path.string());
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Linear map from data coordinates to a pixel rectangle.
struct Panel {
  double x0, y0, w, h;         // pixels
  double xmin, xmax, ymin, ymax; // data

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void axes(std::ostringstream &os, const Panel &p, const std::string &xlabel,
          const std::string &ylabel, int xticks, int yticks) {
  os << "<rect x=\"" << num(p.x0) << "\" y=\"" << num(p.y0) << "\" width=\"" << num(p.w)
     << "\" height=\"" << num(p.h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= xticks; ++i) {
    const double x = p.xmin + (p.xmax - p.xmin) * i / xticks;
    os << "<text x=\"" << num(p.px(x)) << "\" y=\"" << num(p.y0 + p.h + 14)
       << "\" font-size=\"10\" text-anchor=\"middle\">" << label(x) << "</text>\n";
  }
  for (int i = 0; i <= yticks; ++i) {
    const double y = p.ymin + (p.ymax - p.ymin) * i / yticks;
    os << "<text x=\"" << num(p.x0 - 4) << "\" y=\"" << num(p.py(y) + 3)
       << "\" font-size=\"10\" text-anchor=\"end\">" << label(y) << "</text>\n";
  }
  os << "<text x=\"" << num(p.x0 + p.w / 2) << "\" y=\"" << num(p.y0 + p.h + 30)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"" << num(p.x0 - 40) << "\" y=\"" << num(p.y0 + p.h / 2)
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(p.x0 - 40)
     << " " << num(p.y0 + p.h / 2) << ")\">" << ylabel << "</text>\n";
}

std::string polyline(const std::vector<std::pair<double, double>> &pts, const Panel &p,
                     const std::string &style) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << (i ? " " : "") << num(p.px(pts[i].first)) << "," << num(p.py(pts[i].second));
  }
  os << "\"/>\n";
  return os.str();
}

// Binned summary: mean and median lines, mean +- sigma band, histogram below.
std::string binned_svg(const ExperimentTable &table, const std::string &xlabel) {
  std::vector<const SummaryRow *> rows;
  double width = 0.1;
  for (const auto &r : table.summary) {
    rows.push_back(&r);
    if (std::isfinite(r.hi)) {
      width = r.hi - r.lo;
    }
  }
  auto mid = [&](const SummaryRow &r) {
    return std::isfinite(r.hi) ? 0.5 * (r.lo + r.hi) : r.lo + 0.5 * width;
  };
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 0.0;
  std::size_t cmax = 1;
  for (const auto *r : rows) {
    xmax = std::max(xmax, std::isfinite(r->hi) ? r->hi : r->lo + width);
    cmax = std::max(cmax, r->count);
    if (r->count > 0) {
      ymin = std::min({ymin, r->mean - r->stddev, r->median});
      ymax = std::max({ymax, r->mean + r->stddev, r->median});
    }
  }
  if (ymax - ymin < 1e-9) {
    ymax = ymin + 1.0;
  }
  const Panel top{70, 30, 560, 260, 0.0, xmax, ymin, ymax};
  const Panel hist{70, 340, 560, 100, 0.0, xmax, 0.0, static_cast<double>(cmax)};

  std::vector<std::pair<double, double>> means, medians, upper, lower;
  for (const auto *r : rows) {
    if (r->count == 0) {
      continue;
    }
    means.emplace_back(mid(*r), r->mean);
    medians.emplace_back(mid(*r), r->median);
    upper.emplace_back(mid(*r), r->mean + r->stddev);
    lower.emplace_back(mid(*r), r->mean - r->stddev);
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\"480\">\n";
  os << "<rect width=\"680\" height=\"480\" fill=\"white\"/>\n";
  os << "<text x=\"340\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << table.name
     << "</text>\n";
  if (!means.empty()) {
    os << "<polygon class=\"sigma-band\" fill=\"#9ecae1\" fill-opacity=\"0.5\" points=\"";
    for (const auto &[x, y] : upper) {
      os << num(top.px(x)) << "," << num(top.py(y)) << " ";
    }
    for (auto it = lower.rbegin(); it != lower.rend(); ++it) {
      os << num(top.px(it->first)) << "," << num(top.py(it->second)) << " ";
    }
    os << "\"/>\n";
    os << "<g class=\"mean\">" << polyline(means, top, "stroke=\"#08519c\" stroke-width=\"2\"")
       << "</g>\n";
    os << "<g class=\"median\">"
       << polyline(medians, top, "stroke=\"#d94801\" stroke-width=\"2\" stroke-dasharray=\"5,3\"")
       << "</g>\n";
  }
  if (ymin < 0.0 && ymax > 0.0) {
    os << "<line x1=\"" << num(top.x0) << "\" x2=\"" << num(top.x0 + top.w) << "\" y1=\""
       << num(top.py(0)) << "\" y2=\"" << num(top.py(0)) << "\" stroke=\"#999\"/>\n";
  }
  axes(os, top, xlabel, "c_rel", 6, 5);

  os << "<g class=\"histogram\">\n";
  for (const auto *r : rows) {
    if (r->count == 0) {
      continue;
    }
    const double lo = r->lo;
    const double hi = std::isfinite(r->hi) ? r->hi : r->lo + width;
    os << "<rect x=\"" << num(hist.px(lo)) << "\" y=\"" << num(hist.py(static_cast<double>(r->count)))
       << "\" width=\"" << num(hist.px(hi) - hist.px(lo)) << "\" height=\""
       << num(hist.py(0) - hist.py(static_cast<double>(r->count)))
       << "\" fill=\"#bdbdbd\" stroke=\"#636363\"/>\n";
  }
  os << "</g>\n";
  axes(os, hist, xlabel, "count", 6, 2);
  os << "</svg>\n";
  return os.str();
}

// One point per (protocol, t) with a +-sigma error bar.
std::string errorbar_svg(const ExperimentTable &table) {
  double xmin = INFINITY;
  double xmax = -INFINITY;
  for (const auto &r : table.summary) {
    xmin = std::min(xmin, r.lo);
    xmax = std::max(xmax, r.lo);
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (xmax - xmin < 1e-9) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double pad = 0.1 * (xmax - xmin);
  const Panel p{70, 30, 560, 300, xmin - pad, xmax + pad, -0.1, 1.1};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\"400\">\n";
  os << "<rect width=\"680\" height=\"400\" fill=\"white\"/>\n";
  os << "<text x=\"340\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << table.name
     << "</text>\n";
  std::vector<std::string> groups;
  for (const auto &r : table.summary) {
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) {
      groups.push_back(r.group);
    }
  }
  const char *colors[] = {"#08519c", "#d94801", "#238b45", "#6a51a3"};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const char *c = colors[g % 4];
    const double shift = (static_cast<double>(g) - 0.5 * static_cast<double>(groups.size() - 1)) *
                         0.02 * (p.xmax - p.xmin);
    std::vector<std::pair<double, double>> pts;
    for (const auto &r : table.summary) {
      if (r.group != groups[g]) {
        continue;
      }
      const double x = r.lo + shift;
      pts.emplace_back(x, r.mean);
      os << "<line x1=\"" << num(p.px(x)) << "\" x2=\"" << num(p.px(x)) << "\" y1=\""
         << num(p.py(r.mean - r.stddev)) << "\" y2=\"" << num(p.py(r.mean + r.stddev))
         << "\" stroke=\"" << c << "\"/>\n";
      os << "<circle cx=\"" << num(p.px(x)) << "\" cy=\"" << num(p.py(r.mean))
         << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    }
    os << polyline(pts, p, std::string("stroke=\"") + c + "\"");
    os << "<text x=\"" << num(p.x0 + 10) << "\" y=\"" << num(p.y0 + 16 + 14 * g)
       << "\" font-size=\"11\" fill=\"" << c << "\">" << groups[g] << "</text>\n";
  }
  axes(os, p, "t", "gamma", 4, 6);
  os << "</svg>\n";
  return os.str();
}

} // namespace

std::string summary_to_csv(const std::vector<SummaryRow> &summary) {
  std::ostringstream os;
  os << "group,lo,hi,count,mean,median,stddev\n";
  for (const auto &r : summary) {
    os << r.group << ',' << format_real(r.lo) << ',' << format_real(r.hi) << ',' << r.count << ','
       << format_real(r.mean) << ',' << format_real(r.median) << ',' << format_real(r.stddev)
       << '\n';
  }
  return os.str();
}

std::string render_svg(const ExperimentTable &table) {
  if (table.name == "capweight") {
    return binned_svg(table, "capweight");
  }
  if (table.name == "rvtr") {
    return binned_svg(table, "RVTR");
  }
  return errorbar_svg(table);
}

std::vector<std::string> emit_outputs(const ExperimentTable &table, OutputFormat format,
                                      const std::string &out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create " + out_dir + ": " + ec.message());
  }
  const fs::path dir(out_dir);
  std::vector<std::string> written;
  if (format == OutputFormat::Csv || format == OutputFormat::Both) {
    const fs::path rows = dir / (table.name + ".csv");
    write_file(rows, to_csv(table.rows));
    written.push_back(rows.string());
    const fs::path summary = dir / (table.name + "_summary.csv");
    write_file(summary, summary_to_csv(table.summary));
    written.push_back(summary.string());
  }
  if (format == OutputFormat::Svg || format == OutputFormat::Both) {
    const fs::path svg = dir / (table.name + ".svg");
    write_file(svg, render_svg(table));
    written.push_back(svg.string());
  }
  return written;
}

} // namespace nestedaa
