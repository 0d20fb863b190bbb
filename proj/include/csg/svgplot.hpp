#ifndef CSG_SVGPLOT_HPP
#define CSG_SVGPLOT_HPP

#include <string>
#include <utility>
#include <vector>

namespace csg {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Static SVG line chart (one polyline per series, legend, axis ticks).
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<PlotSeries>& series);

struct PlotBar {
    std::string label;
    double value = 0;
};

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotBar>& bars);

}  // namespace csg

#endif
