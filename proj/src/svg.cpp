#include "tpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tpc/errors.hpp"

namespace tpc {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

/// Round a span to a pleasant tick step (1/2/5 times a power of ten).
double nice_step(double span, int target_ticks) {
    if (span <= 0) return 1.0;
    const double raw = span / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step = 10.0;
    if (frac <= 1.0) step = 1.0;
    else if (frac <= 2.0) step = 2.0;
    else if (frac <= 5.0) step = 5.0;
    return step * mag;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y, bool dashed) {
    if (x.size() != y.size())
        throw DataError("SvgPlot: series x/y length mismatch");
    series_.push_back({name, x, y, dashed});
}

std::string SvgPlot::render() const {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) { ymax += 0.5; ymin -= 0.5; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double pw = kWidth - kMarginLeft - kMarginRight;
    const double ph = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kMarginTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
        << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title_ << "</text>\n";

    // axes with grid lines
    const double xstep = nice_step(xmax - xmin, 6);
    const double ystep = nice_step(ymax - ymin, 6);
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-12;
         x += xstep) {
        out << "<line x1=\"" << px(x) << "\" y1=\"" << kMarginTop << "\" x2=\""
            << px(x) << "\" y2=\"" << kMarginTop + ph
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << kMarginTop + ph + 16
            << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
    }
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-12;
         y += ystep) {
        out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py(y)
            << "\" x2=\"" << kMarginLeft + pw << "\" y2=\"" << py(y)
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << py(y) + 4
            << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + pw / 2 << "\" y=\""
        << kHeight - 10 << "\" text-anchor=\"middle\">" << x_label_
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << kMarginTop + ph / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << kMarginTop + ph / 2 << ")\">" << y_label_ << "</text>\n";
    out << "</g>\n";
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
        << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";

    // series polylines
    for (size_t i = 0; i < series_.size(); ++i) {
        const auto& s = series_[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(*kPalette))];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (size_t j = 0; j < s.x.size(); ++j)
            out << fmt(px(s.x[j])) << ',' << fmt(py(s.y[j])) << ' ';
        out << "\"/>\n";
    }

    // legend
    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (size_t i = 0; i < series_.size(); ++i) {
        const auto& s = series_[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(*kPalette))];
        const double lx = kMarginLeft + 12;
        const double ly = kMarginTop + 14 + 16.0 * i;
        out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22
            << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << "/>\n";
        out << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4 << "\">"
            << s.name << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void SvgPlot::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write plot file: " + path);
    out << render();
}

}  // namespace tpc
