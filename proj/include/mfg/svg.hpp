#pragma once

// Minimal polyline plots, enough for mode curves and oracle overlays.

#include <string>
#include <vector>

namespace mfg::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y; ///< NaN entries break the line
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 720;
    int height = 440;
};

std::string render(const PlotSpec& spec, const std::vector<Series>& series);

void write(const std::string& path, const PlotSpec& spec, const std::vector<Series>& series);

} // namespace mfg::svg
