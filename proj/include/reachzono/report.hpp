#ifndef REACHZONO_REPORT_HPP_
#define REACHZONO_REPORT_HPP_

#include <string>
#include <vector>

#include "reachzono/setalg.hpp"

namespace reachzono {

/// Mean over coordinates of the interval hull width.
double mean_hull_width(const Zonotope& z);
double mean_hull_width(const IntervalBox& b);

struct TableRow {
  int step = 0;
  double mc_width = 0.0;
  double model_width = 0.0;
  double tf_width = 0.0;
  double dd_width = 0.0;
  double coverage = 0.0;
};

std::string table_to_csv(const std::vector<TableRow>& rows);

/// Boundary of a 2-D zonotope as the support points of `directions`
/// evenly spaced unit directions, counter-clockwise.
std::vector<Vector> polygon_outline(const Zonotope& z, int directions = 64);

struct SvgLayer {
  std::string label;
  std::string color;
  std::vector<Vector> polygon;  // empty for point clouds
  std::vector<Vector> points;
};

/// Overlay plot in the first two coordinates.
std::string render_svg(const std::string& title, const std::vector<SvgLayer>& layers,
                       int width = 480, int height = 480);

}  // namespace reachzono

#endif  // REACHZONO_REPORT_HPP_
