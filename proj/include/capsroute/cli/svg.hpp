#pragma once

#include <string>
#include <vector>

#include "capsroute/experiments.hpp"

namespace capsroute::cli {

/// Polyline chart of each series against its index.
std::string svg_line_plot(const std::string& title, const std::vector<NamedSeries>& series);

/// Prediction scatter (small circles, one colour per capsule) with the final
/// outputs drawn as star markers.
std::string svg_scatter_plot(const std::string& title, const std::vector<ScatterPoint>& points,
                             const std::vector<ScatterPoint>& markers);

}  // namespace capsroute::cli
