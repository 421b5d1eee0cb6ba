#pragma once

#include <string>
#include <vector>

namespace tpc {

/// Minimal self-contained SVG line chart: auto-scaled axes, a handful of
/// colored series, and a legend. Enough for telemetry plots without pulling
/// in a plotting dependency.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label);

    void add_series(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y, bool dashed = false);

    std::string render() const;
    void write(const std::string& path) const;

private:
    struct Series {
        std::string name;
        std::vector<double> x, y;
        bool dashed;
    };

    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace tpc
