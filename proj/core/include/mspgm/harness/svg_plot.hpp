#pragma once

#include <string>
#include <vector>

namespace mspgm::harness {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    /// Symmetric error bars; empty for none.
    std::vector<double> err;
    std::string color = "#1f77b4";
    bool markers = true;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 720;
    int height = 480;
};

/// Static line chart with optional error bars, axes, ticks and a legend. Output depends
/// only on the plot description.
std::string render_svg(const PlotSpec& spec);

}  // namespace mspgm::harness
