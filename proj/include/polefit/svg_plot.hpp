#pragma once

#include <string>
#include <vector>

#include "polefit/freq_response.hpp"
#include "polefit/rational_model.hpp"

namespace polefit {

struct PlotPole {
    Complex pole;
    PoleKind kind = PoleKind::real;
};

// Reads a pole or zero CSV. Accepted headers: `re_radps,im_radps[,kind]` and
// the pole-map layout `iteration,pole_re_radps,pole_im_radps,...`. A missing
// kind column means every row is real when im == 0, a pair member otherwise.
[[nodiscard]] std::vector<PlotPole> load_plot_points(const std::string& path);

struct PoleMapPlot {
    std::vector<PlotPole> poles;
    // Real poles here are drawn blue; other kinds fall back to the sign colors.
    std::vector<PlotPole> low_band_poles;
    std::vector<Complex> zeros;
    std::string title;
};

// Self-contained SVG: x is Re(p)/2pi and y is Im(p)/2pi, both in GHz. Each
// pole is one `pole-marker` path (red for re > 0, green otherwise, blue for
// low-band real poles) and each zero one `zero-marker` circle.
[[nodiscard]] std::string pole_map_svg(const PoleMapPlot& plot);

}  // namespace polefit
