#include "polefit/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "polefit/errors.hpp"

namespace polefit {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr double kMarker = 5.0;

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        cells.push_back(cell);
    }
    return cells;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw FormatError(path + ": row " + std::to_string(row) + ": non-numeric value '" + cell + "'");
    }
    return v;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Axis range padded by 10% and widened to include zero.
std::pair<double, double> axis_range(const std::vector<double>& values) {
    double lo = 0.0;
    double hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 0.0) {
        lo = -1.0;
        hi = 1.0;
    }
    const double pad = 0.1 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string cross(double x, double y, const char* color, const char* cls) {
    const std::string d = "M" + num(x - kMarker) + "," + num(y - kMarker) + "L" + num(x + kMarker) + "," +
                          num(y + kMarker) + "M" + num(x - kMarker) + "," + num(y + kMarker) + "L" +
                          num(x + kMarker) + "," + num(y - kMarker);
    return std::string("<path class=\"") + cls + "\" stroke=\"" + color + "\" stroke-width=\"2\" fill=\"none\" d=\"" +
           d + "\"/>\n";
}

const char* pole_color(const PlotPole& p, bool low_band) {
    if (low_band && p.kind == PoleKind::real) return "blue";
    return p.pole.real() > 0.0 ? "red" : "green";
}

}  // namespace

std::vector<PlotPole> load_plot_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(path + ": empty file");
    }
    const auto header = split_row(line);
    auto column = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    int re_col = column("re_radps");
    int im_col = column("im_radps");
    if (re_col < 0 || im_col < 0) {
        re_col = column("pole_re_radps");
        im_col = column("pole_im_radps");
    }
    if (re_col < 0 || im_col < 0) {
        throw FormatError(path + ": expected columns re_radps,im_radps or pole_re_radps,pole_im_radps");
    }
    const int kind_col = column("kind");

    std::vector<PlotPole> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw FormatError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " columns, expected " + std::to_string(header.size()));
        }
        PlotPole p;
        p.pole = Complex(parse_number(cells[static_cast<std::size_t>(re_col)], path, row),
                         parse_number(cells[static_cast<std::size_t>(im_col)], path, row));
        if (kind_col >= 0) {
            try {
                p.kind = pole_kind_from_string(cells[static_cast<std::size_t>(kind_col)]);
            } catch (const Error&) {
                throw FormatError(path + ": row " + std::to_string(row) + ": unknown kind '" +
                                  cells[static_cast<std::size_t>(kind_col)] + "'");
            }
        } else {
            p.kind = p.pole.imag() == 0.0 ? PoleKind::real : PoleKind::complex_pair;
        }
        out.push_back(p);
    }
    return out;
}

std::string pole_map_svg(const PoleMapPlot& plot) {
    const double to_ghz = 1.0 / (2.0 * std::numbers::pi * 1e9);
    std::vector<double> xs;
    std::vector<double> ys;
    auto collect = [&](Complex p) {
        xs.push_back(p.real() * to_ghz);
        ys.push_back(p.imag() * to_ghz);
    };
    for (const auto& p : plot.poles) collect(p.pole);
    for (const auto& p : plot.low_band_poles) collect(p.pole);
    for (const auto& z : plot.zeros) collect(z);
    const auto [x_lo, x_hi] = axis_range(xs);
    const auto [y_lo, y_hi] = axis_range(ys);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    if (!plot.title.empty()) {
        svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
            << escape(plot.title) << "</text>\n";
    }

    svg << "<rect class=\"frame\" x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w)
        << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<line class=\"axis\" x1=\"" << num(px(0.0)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(0.0))
        << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
    svg << "<line class=\"axis\" x1=\"" << num(kLeft) << "\" y1=\"" << num(py(0.0)) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(py(0.0)) << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
        svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + plot_h + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(xv) << "</text>\n";
        svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 3)
            << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(yv) << "</text>\n";
    }
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 16)
        << "\" text-anchor=\"middle\" font-size=\"12\">Real part (GHz)</text>\n";
    svg << "<text x=\"18\" y=\"" << num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << num(kTop + plot_h / 2) << ")\">Imaginary part (GHz)</text>\n";

    for (const auto& p : plot.poles) {
        svg << cross(px(p.pole.real() * to_ghz), py(p.pole.imag() * to_ghz), pole_color(p, false), "pole-marker");
    }
    for (const auto& p : plot.low_band_poles) {
        svg << cross(px(p.pole.real() * to_ghz), py(p.pole.imag() * to_ghz), pole_color(p, true), "pole-marker");
    }
    for (const auto& z : plot.zeros) {
        svg << "<circle class=\"zero-marker\" cx=\"" << num(px(z.real() * to_ghz)) << "\" cy=\""
            << num(py(z.imag() * to_ghz)) << "\" r=\"" << num(kMarker) << "\" stroke=\"black\" fill=\"none\"/>\n";
    }

    const double lx = kWidth - kRight + 16;
    double ly = kTop + 10;
    auto legend_cross = [&](const char* color, const char* text) {
        svg << cross(lx, ly, color, "legend");
        svg << "<text x=\"" << num(lx + 12) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">" << text
            << "</text>\n";
        ly += 20;
    };
    legend_cross("green", "stable pole");
    legend_cross("red", "unstable pole");
    legend_cross("blue", "low-band real pole");
    svg << "<circle class=\"legend\" cx=\"" << num(lx) << "\" cy=\"" << num(ly) << "\" r=\"" << num(kMarker)
        << "\" stroke=\"black\" fill=\"none\"/>\n";
    svg << "<text x=\"" << num(lx + 12) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">zero</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace polefit
