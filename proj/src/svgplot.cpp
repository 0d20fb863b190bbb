#include "csg/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "csg/errors.hpp"

namespace csg {

namespace {

constexpr int kWidth = 640, kHeight = 480;
constexpr int kLeft = 70, kRight = 30, kTop = 40, kBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Frame {
    double xmin, xmax, ymin, ymax;
    double px(double x) const {
        return kLeft + (x - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        return kHeight - kBottom - (y - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom);
    }
};

void pad_range(double& lo, double& hi) {
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
}

void open_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
              const std::string& ylabel) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">"
       << escape(title) << "</text>\n"
       << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << escape(xlabel) << "</text>\n"
       << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
          "transform=\"rotate(-90 18 "
       << (kTop + kHeight - kBottom) / 2 << ")\">" << escape(ylabel) << "</text>\n";
}

void draw_axes(std::ostream& os, const Frame& f) {
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
       << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
       << "\" stroke=\"black\"/>\n<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\""
       << kLeft << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double tx = f.xmin + (f.xmax - f.xmin) * i / ticks;
        const double ty = f.ymin + (f.ymax - f.ymin) * i / ticks;
        os << "<line x1=\"" << f.px(tx) << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
           << f.px(tx) << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << f.px(tx) << "\" y=\"" << kHeight - kBottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tx
           << "</text>\n"
           << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << f.py(ty) << "\" x2=\"" << kLeft
           << "\" y2=\"" << f.py(ty) << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << kLeft - 8 << "\" y=\"" << f.py(ty) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << ty
           << "</text>\n";
    }
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<PlotSeries>& series) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open plot for writing: " + path);

    Frame f{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            f.xmin = std::min(f.xmin, x);
            f.xmax = std::max(f.xmax, x);
            f.ymin = std::min(f.ymin, y);
            f.ymax = std::max(f.ymax, y);
            any = true;
        }
    if (!any) {
        f = {0, 1, 0, 1};
    }
    pad_range(f.xmin, f.xmax);
    pad_range(f.ymin, f.ymax);

    open_svg(os, title, xlabel, ylabel);
    draw_axes(os, f);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::ostringstream pts;
        for (const auto& [x, y] : series[i].points) pts << f.px(x) << ',' << f.py(y) << ' ';
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
              "points=\""
           << pts.str() << "\"/>\n";
        os << "<text x=\"" << kWidth - kRight - 6 << "\" y=\"" << kTop + 16 * (int(i) + 1)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
           << color << "\">" << escape(series[i].label) << "</text>\n";
    }
    os << "</svg>\n";
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotBar>& bars) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open plot for writing: " + path);

    double ymax = 0;
    for (const auto& b : bars) ymax = std::max(ymax, b.value);
    if (ymax <= 0) ymax = 1;
    Frame f{0, double(std::max<std::size_t>(bars.size(), 1)), 0, ymax * 1.1};

    open_svg(os, title, xlabel, ylabel);
    draw_axes(os, f);
    const double slot = (kWidth - kLeft - kRight) / double(std::max<std::size_t>(bars.size(), 1));
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x0 = kLeft + slot * (double(i) + 0.15);
        const double w = slot * 0.7;
        const double y0 = f.py(bars[i].value);
        os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\""
           << (kHeight - kBottom) - y0 << "\" fill=\""
           << kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))] << "\"/>\n"
           << "<text x=\"" << x0 + w / 2 << "\" y=\"" << kHeight - kBottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << escape(bars[i].label) << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace csg
