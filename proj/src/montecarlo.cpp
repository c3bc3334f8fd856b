#include "polefit/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "polefit/errors.hpp"

namespace polefit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double draw_factor(double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
        const double factor = 1.0 + sigma * normal(rng);
        if (factor > 0.0) return factor;
    }
}

McIteration run_iteration(const CircuitTemplate& tmpl, const DispersionSpec& dispersion, const FrequencyGrid& grid,
                          const McSettings& settings, int index) {
    McIteration it;
    it.index = index;
    it.seed = iteration_seed(dispersion.seed, index);
    try {
        std::mt19937_64 rng(it.seed);
        const CircuitTemplate drawn = disperse(tmpl, dispersion.relative_sigma, rng);
        FrequencyResponse response = synth_response(drawn, grid, dispersion.seed);
        if (settings.analysis_band) {
            response = band_select(response, settings.analysis_band->f_min_hz, settings.analysis_band->f_max_hz);
        }
        const RationalModel model = select_order(response, settings.mode, settings.selection);
        const PruneResult pruned = prune(model, response, settings.rho_threshold, settings.selection.fit_options);
        it.order = pruned.model.order();
        it.phase_error_deg = pruned.model.phase_error_deg;
        it.converged = model.converged;
        const RhoReport report = rho_report(pruned.model, settings.rho_threshold);
        for (std::size_t k = 0; k < pruned.model.terms.size(); ++k) {
            const auto& term = pruned.model.terms[k];
            it.poles.push_back(
                MapPole{term.pole, term.kind, report.records[k].rho, classify_pole(term.pole, settings.critical_tol)});
        }
    } catch (const std::exception& e) {
        it.failed = true;
        it.error = e.what();
        it.poles.clear();
    }
    return it;
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void DispersionSpec::validate() const {
    if (!(relative_sigma >= 0.0) || !std::isfinite(relative_sigma)) {
        throw ArgumentError("relative sigma must be a finite value >= 0");
    }
    if (iterations < 1) {
        throw ArgumentError("Monte-Carlo needs at least 1 iteration");
    }
}

void McSettings::validate() const {
    selection.validate();
    if (!(rho_threshold >= 0.0)) {
        throw ArgumentError("rho threshold must be non-negative");
    }
    if (!(critical_tol >= 0.0)) {
        throw ArgumentError("critical tolerance must be non-negative");
    }
    if (analysis_band && !(analysis_band->f_min_hz < analysis_band->f_max_hz)) {
        throw ArgumentError("analysis band needs f_min < f_max");
    }
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::critical: return "critical";
    }
    return "critical";
}

Stability classify_pole(Complex pole, double critical_tol) {
    if (pole.real() > critical_tol) return Stability::unstable;
    if (pole.real() < -critical_tol) return Stability::stable;
    return Stability::critical;
}

StabilityCounts classify_stability(std::span<const Complex> poles, double critical_tol) {
    if (!(critical_tol >= 0.0)) {
        throw ArgumentError("critical tolerance must be non-negative");
    }
    StabilityCounts counts;
    for (const auto& p : poles) {
        switch (classify_pole(p, critical_tol)) {
            case Stability::stable: ++counts.stable; break;
            case Stability::unstable: ++counts.unstable; break;
            case Stability::critical: ++counts.critical; break;
        }
    }
    return counts;
}

int PoleMap::failed_count() const {
    return static_cast<int>(std::count_if(iterations.begin(), iterations.end(), [](const McIteration& it) { return it.failed; }));
}

std::uint64_t iteration_seed(std::uint64_t seed, int iteration) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(iteration));
}

CircuitTemplate disperse(const CircuitTemplate& tmpl, double relative_sigma, std::mt19937_64& rng) {
    CircuitTemplate out = tmpl;
    for (auto* cells : {&out.thermal_cells, &out.trap_cells}) {
        for (auto& cell : *cells) {
            cell.r *= draw_factor(relative_sigma, rng);
            cell.c *= draw_factor(relative_sigma, rng);
        }
    }
    for (auto& r : out.resonators) {
        r.f0_hz *= draw_factor(relative_sigma, rng);
        r.q *= draw_factor(relative_sigma, rng);
        r.gain *= draw_factor(relative_sigma, rng);
    }
    return out;
}

PoleMap run_mc(const CircuitTemplate& tmpl, const DispersionSpec& dispersion, const FrequencyGrid& grid,
               const McSettings& settings) {
    tmpl.validate();
    dispersion.validate();
    settings.validate();

    PoleMap map;
    map.mode = settings.mode;
    map.band = settings.analysis_band.value_or(Band{grid.front(), grid.back()});
    map.iterations.resize(static_cast<std::size_t>(dispersion.iterations));

    unsigned threads = settings.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : settings.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(dispersion.iterations));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < dispersion.iterations; i = next++) {
            map.iterations[static_cast<std::size_t>(i)] = run_iteration(tmpl, dispersion, grid, settings, i);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return map;
}

ScatterStats scatter_stats(const PoleMap& map, double f_lo_hz, double f_hi_hz, std::optional<PoleKind> kind) {
    if (!(f_lo_hz <= f_hi_hz)) {
        throw ArgumentError("scatter band needs f_lo <= f_hi");
    }
    std::vector<Complex> sel;
    for (const auto& it : map.iterations) {
        for (const auto& p : it.poles) {
            if (kind && p.kind != *kind) continue;
            const double f = std::abs(p.pole.imag()) / (2.0 * std::numbers::pi);
            if (f >= f_lo_hz && f <= f_hi_hz) sel.push_back(p.pole);
        }
    }
    if (sel.empty()) {
        throw ArgumentError("no pole of the map lies in the band [" + fmt(f_lo_hz) + ", " + fmt(f_hi_hz) + "] Hz");
    }
    // Moments about the first sample, so identical samples give exactly zero.
    const Complex shift = sel.front();
    ScatterStats st;
    st.count = static_cast<int>(sel.size());
    double sum_re = 0.0, sum_im = 0.0, sq_re = 0.0, sq_im = 0.0;
    for (const auto& p : sel) {
        const Complex x = p - shift;
        sum_re += x.real();
        sum_im += x.imag();
        sq_re += x.real() * x.real();
        sq_im += x.imag() * x.imag();
    }
    st.mean_re = shift.real() + sum_re / st.count;
    st.mean_im = shift.imag() + sum_im / st.count;
    if (st.count > 1) {
        st.std_re = std::sqrt(std::max(0.0, (sq_re - sum_re * sum_re / st.count) / (st.count - 1)));
        st.std_im = std::sqrt(std::max(0.0, (sq_im - sum_im * sum_im / st.count) / (st.count - 1)));
    }
    return st;
}

std::string pole_map_csv(const PoleMap& map) {
    std::ostringstream out;
    out << "iteration,pole_re_radps,pole_im_radps,kind,rho,stability\n";
    for (const auto& it : map.iterations) {
        for (const auto& p : it.poles) {
            const std::string tail = "," + to_string(p.kind) + "," + fmt(p.rho) + "," + to_string(p.stability) + "\n";
            out << it.index << ',' << fmt(p.pole.real()) << ',' << fmt(p.pole.imag()) << tail;
            if (p.kind == PoleKind::complex_pair) {
                out << it.index << ',' << fmt(p.pole.real()) << ',' << fmt(-p.pole.imag()) << tail;
            }
        }
    }
    return out.str();
}

void save_pole_map_csv(const PoleMap& map, const std::string& path) {
    std::ofstream out(path);
    if (path.empty() || !out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << pole_map_csv(map);
}

}  // namespace polefit
