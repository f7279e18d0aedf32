#include "reachzono/report.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace reachzono {

double mean_hull_width(const IntervalBox& b) { return b.mean_width(); }

double mean_hull_width(const Zonotope& z) { return interval_hull(z).mean_width(); }

std::string table_to_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "step,mc_width,model_width,tf_qhat_width,dd_width,coverage\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.mc_width << ',' << r.model_width << ',' << r.tf_width << ','
       << r.dd_width << ',' << r.coverage << '\n';
  }
  return os.str();
}

std::vector<Vector> polygon_outline(const Zonotope& z, int directions) {
  if (z.dim() < 2) throw DimensionError("polygon_outline: need at least 2 dimensions");
  const Zonotope z2 = project(z, 0, 2);
  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(directions));
  for (int i = 0; i < directions; ++i) {
    const double th = 2.0 * std::numbers::pi * i / directions;
    const Vector d = Vector{{std::cos(th), std::sin(th)}};
    Vector p = z2.center();
    for (Index j = 0; j < z2.num_generators(); ++j) {
      const double s = d.dot(z2.generator(j));
      if (s > 0) p += z2.generator(j);
      else if (s < 0) p -= z2.generator(j);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string render_svg(const std::string& title, const std::vector<SvgLayer>& layers, int width,
                       int height) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  auto grow = [&](const Vector& p) {
    xmin = std::min(xmin, p(0));
    xmax = std::max(xmax, p(0));
    ymin = std::min(ymin, p(1));
    ymax = std::max(ymax, p(1));
  };
  for (const auto& l : layers) {
    for (const auto& p : l.polygon) grow(p);
    for (const auto& p : l.points) grow(p);
  }
  if (!std::isfinite(xmin)) xmin = ymin = -1.0, xmax = ymax = 1.0;
  const double pad = 0.05 * std::max({xmax - xmin, ymax - ymin, 1e-9});
  xmin -= pad;
  xmax += pad;
  ymin -= pad;
  ymax += pad;
  const double margin = 40.0;
  const double sx = (width - 2 * margin) / (xmax - xmin);
  const double sy = (height - 2 * margin) / (ymax - ymin);
  auto px = [&](const Vector& p) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << margin + (p(0) - xmin) * sx << ',' << height - margin - (p(1) - ymin) * sy;
    return os.str();
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
     << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"#999\"/>\n";
  int legend_y = static_cast<int>(margin) + 16;
  for (const auto& l : layers) {
    for (const auto& p : l.points) {
      const std::string xy = px(p);
      const size_t comma = xy.find(',');
      os << "<circle cx=\"" << xy.substr(0, comma) << "\" cy=\"" << xy.substr(comma + 1)
         << "\" r=\"1\" fill=\"" << l.color << "\" fill-opacity=\"0.4\"/>\n";
    }
    if (!l.polygon.empty()) {
      os << "<polygon fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < l.polygon.size(); ++i) os << (i ? " " : "") << px(l.polygon[i]);
      os << "\"/>\n";
    }
    os << "<text x=\"" << width - margin - 120 << "\" y=\"" << legend_y
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << l.color << "\">" << l.label
       << "</text>\n";
    legend_y += 14;
  }
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
     << "\" font-family=\"sans-serif\" font-size=\"11\">y1</text>\n";
  os << "<text x=\"8\" y=\"" << height / 2 << "\" font-family=\"sans-serif\" font-size=\"11\">y2</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace reachzono
