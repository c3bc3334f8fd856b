#pragma once

#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polefit {

using Complex = std::complex<double>;

enum class GridScale { linear, log };

// Strictly increasing, positive frequency points in Hz (at least two).
class FrequencyGrid {
public:
    FrequencyGrid(std::vector<double> points_hz, GridScale scale);

    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }
    [[nodiscard]] GridScale scale() const noexcept { return scale_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double front() const noexcept { return points_.front(); }
    [[nodiscard]] double back() const noexcept { return points_.back(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return points_[i]; }

    // Geometric mean of the end points on log grids, arithmetic mean on
    // linear ones.
    [[nodiscard]] double center_hz() const noexcept;

private:
    std::vector<double> points_;
    GridScale scale_;
};

// Sampled transfer function H(j 2 pi f) on a grid.
class FrequencyResponse {
public:
    FrequencyResponse(FrequencyGrid grid, std::vector<Complex> samples, std::string label = {});

    [[nodiscard]] const FrequencyGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<Complex>& samples() const noexcept { return samples_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }

private:
    FrequencyGrid grid_;
    std::vector<Complex> samples_;
    std::string label_;
};

// Points at 10^(log10(f_start) + k / (ppd - 1)) up to f_stop; f_stop is
// appended when the last generated point is not already on it.
[[nodiscard]] FrequencyGrid make_log_grid(double f_start_hz, double f_stop_hz, int points_per_decade);

[[nodiscard]] FrequencyGrid make_linear_grid(double f_start_hz, double f_stop_hz, int points);

// CSV with exact header `freq_hz,re,im`.
[[nodiscard]] FrequencyResponse load_csv(const std::string& path);
void save_csv(const FrequencyResponse& response, const std::string& path);

// Low part holds every point below f_cut plus the first point at or above it;
// the high part starts at that shared boundary point.
[[nodiscard]] std::pair<FrequencyResponse, FrequencyResponse> band_split(const FrequencyResponse& response,
                                                                         double f_cut_hz);

// Sub-band [f_lo, f_hi] built from two band splits, so both edges are anchored
// on grid points the same way band_split anchors its cut.
[[nodiscard]] FrequencyResponse band_select(const FrequencyResponse& response, double f_lo_hz, double f_hi_hz);

}  // namespace polefit
