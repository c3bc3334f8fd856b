#include "polefit/freq_response.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polefit/errors.hpp"

namespace polefit {

namespace {

constexpr double kGridEndpointRelTol = 1e-12;

void validate_points(const std::vector<double>& points) {
    if (points.size() < 2) {
        throw ArgumentError("frequency grid needs at least 2 points");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i] > 0.0) || !std::isfinite(points[i])) {
            throw ArgumentError("frequency grid point " + std::to_string(i) + " is not a positive finite value");
        }
        if (i > 0 && !(points[i] > points[i - 1])) {
            throw ArgumentError("frequency grid is non-monotonic at point " + std::to_string(i));
        }
    }
}

// Coefficient of variation; zero for constant (or single) sequences.
double spread(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
}

GridScale infer_scale(const std::vector<double>& f) {
    std::vector<double> diffs;
    std::vector<double> ratios;
    for (std::size_t i = 1; i < f.size(); ++i) {
        diffs.push_back(f[i] - f[i - 1]);
        ratios.push_back(f[i] / f[i - 1]);
    }
    return spread(ratios) < spread(diffs) ? GridScale::log : GridScale::linear;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double parse_cell(const std::string& cell, std::size_t row, const char* column) {
    const std::string t = trim(cell);
    double value = 0.0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw FormatError("row " + std::to_string(row) + ": non-numeric " + column + " cell '" + t + "'");
    }
    return value;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

FrequencyGrid::FrequencyGrid(std::vector<double> points_hz, GridScale scale)
    : points_(std::move(points_hz)), scale_(scale) {
    validate_points(points_);
}

double FrequencyGrid::center_hz() const noexcept {
    if (scale_ == GridScale::log) {
        return std::sqrt(front() * back());
    }
    return 0.5 * (front() + back());
}

FrequencyResponse::FrequencyResponse(FrequencyGrid grid, std::vector<Complex> samples, std::string label)
    : grid_(std::move(grid)), samples_(std::move(samples)), label_(std::move(label)) {
    if (samples_.size() != grid_.size()) {
        throw ArgumentError("response has " + std::to_string(samples_.size()) + " samples for " +
                            std::to_string(grid_.size()) + " grid points");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i].real()) || !std::isfinite(samples_[i].imag())) {
            throw ArgumentError("response sample " + std::to_string(i) + " is not finite");
        }
    }
}

FrequencyGrid make_log_grid(double f_start_hz, double f_stop_hz, int points_per_decade) {
    if (!(f_start_hz > 0.0) || !(f_stop_hz > f_start_hz) || !std::isfinite(f_stop_hz)) {
        throw ArgumentError("log grid needs 0 < f_start < f_stop");
    }
    if (points_per_decade < 2) {
        throw ArgumentError("log grid needs at least 2 points per decade");
    }
    const double step = 1.0 / static_cast<double>(points_per_decade - 1);
    const double start = std::log10(f_start_hz);
    const double limit = f_stop_hz * (1.0 + kGridEndpointRelTol);

    std::vector<double> points{f_start_hz};
    for (long k = 1;; ++k) {
        const double f = std::pow(10.0, start + static_cast<double>(k) * step);
        if (f > limit) break;
        points.push_back(f);
    }
    if (std::abs(points.back() - f_stop_hz) <= kGridEndpointRelTol * f_stop_hz) {
        points.back() = f_stop_hz;
    } else {
        points.push_back(f_stop_hz);
    }
    return FrequencyGrid(std::move(points), GridScale::log);
}

FrequencyGrid make_linear_grid(double f_start_hz, double f_stop_hz, int points) {
    if (!(f_start_hz > 0.0) || !(f_stop_hz > f_start_hz) || !std::isfinite(f_stop_hz)) {
        throw ArgumentError("linear grid needs 0 < f_start < f_stop");
    }
    if (points < 2) {
        throw ArgumentError("linear grid needs at least 2 points");
    }
    std::vector<double> f(static_cast<std::size_t>(points));
    const double step = (f_stop_hz - f_start_hz) / static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) {
        f[static_cast<std::size_t>(i)] = f_start_hz + step * static_cast<double>(i);
    }
    f.back() = f_stop_hz;
    return FrequencyGrid(std::move(f), GridScale::linear);
}

FrequencyResponse load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line) || trim(line) != "freq_hz,re,im") {
        throw FormatError(path + ": expected header 'freq_hz,re,im'");
    }

    std::vector<double> freqs;
    std::vector<Complex> samples;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3) {
            throw FormatError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " columns, expected 3");
        }
        const double f = parse_cell(cells[0], row, "freq_hz");
        const double re = parse_cell(cells[1], row, "re");
        const double im = parse_cell(cells[2], row, "im");
        if (!freqs.empty() && !(f > freqs.back())) {
            throw FormatError(path + ": non-monotonic frequency at row " + std::to_string(row));
        }
        freqs.push_back(f);
        samples.emplace_back(re, im);
    }
    if (freqs.size() < 2) {
        throw FormatError(path + ": need at least 2 data rows");
    }
    if (!(freqs.front() > 0.0)) {
        throw FormatError(path + ": frequencies must be positive");
    }
    const GridScale scale = infer_scale(freqs);
    return FrequencyResponse(FrequencyGrid(std::move(freqs), scale), std::move(samples), path);
}

void save_csv(const FrequencyResponse& response, const std::string& path) {
    if (path.empty()) {
        throw IoError("empty output path");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << "freq_hz,re,im\n";
    const auto& f = response.grid().points();
    const auto& h = response.samples();
    for (std::size_t i = 0; i < f.size(); ++i) {
        out << format_number(f[i]) << ',' << format_number(h[i].real()) << ',' << format_number(h[i].imag())
            << '\n';
    }
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

std::pair<FrequencyResponse, FrequencyResponse> band_split(const FrequencyResponse& response, double f_cut_hz) {
    const auto& f = response.grid().points();
    if (!(f_cut_hz > f.front()) || !(f_cut_hz <= f.back())) {
        throw ArgumentError("band_split cut " + format_number(f_cut_hz) + " Hz outside (" +
                            format_number(f.front()) + ", " + format_number(f.back()) + "]");
    }
    const auto boundary =
        static_cast<std::size_t>(std::lower_bound(f.begin(), f.end(), f_cut_hz) - f.begin());
    if (boundary + 1 < 2 || f.size() - boundary < 2) {
        throw ArgumentError("band_split at " + format_number(f_cut_hz) + " Hz leaves a part with fewer than 2 points");
    }

    const auto& h = response.samples();
    const auto scale = response.grid().scale();
    std::vector<double> f_low(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(boundary + 1));
    std::vector<Complex> h_low(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(boundary + 1));
    std::vector<double> f_high(f.begin() + static_cast<std::ptrdiff_t>(boundary), f.end());
    std::vector<Complex> h_high(h.begin() + static_cast<std::ptrdiff_t>(boundary), h.end());
    return {FrequencyResponse(FrequencyGrid(std::move(f_low), scale), std::move(h_low), response.label()),
            FrequencyResponse(FrequencyGrid(std::move(f_high), scale), std::move(h_high), response.label())};
}

FrequencyResponse band_select(const FrequencyResponse& response, double f_lo_hz, double f_hi_hz) {
    if (!(f_hi_hz > f_lo_hz)) {
        throw ArgumentError("band_select needs f_lo < f_hi");
    }
    FrequencyResponse out = response;
    if (f_lo_hz > out.grid().front()) {
        out = band_split(out, f_lo_hz).second;
    }
    if (f_hi_hz < out.grid().back()) {
        out = band_split(out, f_hi_hz).first;
    }
    return out;
}

}  // namespace polefit
