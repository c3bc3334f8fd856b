#include "polefit/synth_circuits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "polefit/errors.hpp"

namespace polefit {

namespace {

using json = nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex resonator_value(const Resonator& r, Complex s) {
    const double w0 = kTwoPi * r.f0_hz;
    const double beta = w0 / r.q;
    return r.gain * beta * s / (s * s + beta * s + w0 * w0);
}

Complex pair_value(Complex pole, Complex residue, Complex s) {
    return residue / (s - pole) + std::conj(residue) / (s - std::conj(pole));
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw FormatError("template document: " + where + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw FormatError("template document: unknown key '" + key + "' in " + where);
        }
    }
}

std::vector<ThermalCell> cells_from(const json& doc, const char* key) {
    std::vector<ThermalCell> cells;
    if (!doc.contains(key)) return cells;
    for (const auto& c : doc.at(key)) {
        check_keys(c, {"r", "c"}, key);
        cells.push_back(ThermalCell{c.at("r").get<double>(), c.at("c").get<double>()});
    }
    return cells;
}

json cells_to(const std::vector<ThermalCell>& cells) {
    json arr = json::array();
    for (const auto& c : cells) arr.push_back({{"r", c.r}, {"c", c.c}});
    return arr;
}

ThermalCell cell_with_cutoff(double r, double cutoff_hz) {
    return ThermalCell{r, 1.0 / (r * kTwoPi * cutoff_hz)};
}

}  // namespace

void ThermalCell::validate() const {
    if (!(r > 0.0) || !(c > 0.0) || !std::isfinite(r) || !std::isfinite(c)) {
        throw ArgumentError("RC cell needs R > 0 and C > 0");
    }
}

void Resonator::validate() const {
    if (!(f0_hz > 0.0) || !(q > 0.0) || !std::isfinite(gain)) {
        throw ArgumentError("resonator needs f0 > 0 and Q > 0");
    }
}

void FloquetImageSpec::validate() const {
    if (!(f_in_hz > 0.0) || n_max < 0 || !(observability_scale >= 0.0) || !std::isfinite(cancellation_offset)) {
        throw ArgumentError("Floquet spec needs f_in > 0, n_max >= 0, observability_scale >= 0");
    }
}

void CircuitTemplate::validate() const {
    for (const auto& c : thermal_cells) c.validate();
    for (const auto& c : trap_cells) c.validate();
    for (const auto& r : resonators) r.validate();
    if (floquet) floquet->validate();
    if (!std::isfinite(direct_term)) {
        throw ArgumentError("direct term must be finite");
    }
    if (std::isnan(noise_floor_db) || noise_floor_db == std::numeric_limits<double>::infinity()) {
        throw ArgumentError("noise floor must be a dB value or -infinity");
    }
}

std::vector<PoleResidue> thermal_cell_poles(const std::vector<ThermalCell>& cells) {
    std::vector<PoleResidue> out;
    for (const auto& c : cells) {
        c.validate();
        out.push_back(PoleResidue{-1.0 / (c.r * c.c), 1.0 / c.c});
    }
    return out;
}

std::vector<Complex> floquet_images(double epsilon, const FloquetImageSpec& spec) {
    if (!(epsilon > 0.0)) {
        throw ArgumentError("Floquet images need epsilon > 0");
    }
    spec.validate();
    std::vector<Complex> poles{Complex(-epsilon, 0.0)};
    for (int n = 1; n <= spec.n_max; ++n) {
        const double w = kTwoPi * n * spec.f_in_hz;
        poles.emplace_back(-epsilon, w);
        poles.emplace_back(-epsilon, -w);
    }
    return poles;
}

std::optional<ThermalCell> imaged_thermal_cell(const CircuitTemplate& tmpl) {
    if (tmpl.thermal_cells.empty()) return std::nullopt;
    return *std::max_element(tmpl.thermal_cells.begin(), tmpl.thermal_cells.end(),
                             [](const ThermalCell& a, const ThermalCell& b) { return a.r * a.c < b.r * b.c; });
}

RationalModel template_model(const CircuitTemplate& tmpl) {
    tmpl.validate();
    RationalModel model;
    model.d = tmpl.direct_term;
    for (const auto& pr : thermal_cell_poles(tmpl.thermal_cells)) model.terms.push_back(PoleTerm::real(pr.pole, pr.residue));
    for (const auto& pr : thermal_cell_poles(tmpl.trap_cells)) model.terms.push_back(PoleTerm::real(pr.pole, pr.residue));
    for (const auto& r : tmpl.resonators) {
        const double w0 = kTwoPi * r.f0_hz;
        const double beta = w0 / r.q;
        const double disc = beta * beta / 4.0 - w0 * w0;
        if (std::abs(disc) <= 1e-12 * w0 * w0) {
            throw ArgumentError("critically damped resonator (Q = 1/2) has a double pole");
        }
        if (disc < 0.0) {
            const Complex p(-beta / 2.0, std::sqrt(-disc));
            model.terms.push_back(PoleTerm::pair(p, r.gain * beta * p / (p - std::conj(p))));
        } else {
            const double p1 = -beta / 2.0 + std::sqrt(disc);
            const double p2 = -beta / 2.0 - std::sqrt(disc);
            model.terms.push_back(PoleTerm::real(p1, r.gain * beta * p1 / (p1 - p2)));
            model.terms.push_back(PoleTerm::real(p2, r.gain * beta * p2 / (p2 - p1)));
        }
    }
    const auto cell = imaged_thermal_cell(tmpl);
    if (tmpl.floquet && cell) {
        const auto& spec = *tmpl.floquet;
        const double eps = 1.0 / (cell->r * cell->c);
        const double residue = spec.observability_scale / cell->c * spec.cancellation_offset;
        const auto images = floquet_images(eps, spec);
        for (std::size_t i = 1; i < images.size(); i += 2) {
            model.terms.push_back(PoleTerm::pair(images[i], Complex(residue, 0.0)));
        }
    }
    return model;
}

FrequencyResponse synth_response(const CircuitTemplate& tmpl, const FrequencyGrid& grid, std::uint64_t seed) {
    tmpl.validate();
    const auto thermal = thermal_cell_poles(tmpl.thermal_cells);
    const auto trap = thermal_cell_poles(tmpl.trap_cells);

    std::vector<Complex> image_poles;
    double image_residue = 0.0;
    double cancel = 0.0;
    if (const auto cell = imaged_thermal_cell(tmpl); tmpl.floquet && cell) {
        const auto images = floquet_images(1.0 / (cell->r * cell->c), *tmpl.floquet);
        for (std::size_t i = 1; i < images.size(); i += 2) image_poles.push_back(images[i]);
        image_residue = tmpl.floquet->observability_scale / cell->c;
        cancel = tmpl.floquet->cancellation_offset;
    }

    std::vector<Complex> h;
    h.reserve(grid.size());
    for (double f : grid.points()) {
        const Complex s(0.0, kTwoPi * f);
        Complex v(tmpl.direct_term, 0.0);
        for (const auto& pr : thermal) v += pr.residue / (s - pr.pole);
        for (const auto& pr : trap) v += pr.residue / (s - pr.pole);
        for (const auto& r : tmpl.resonators) v += resonator_value(r, s);
        for (const auto& p : image_poles) {
            const Complex image = pair_value(p, image_residue, s);
            // Scaled copy of the image subtracted: leaves a zero next to the pole.
            v += image - (1.0 - cancel) * image;
        }
        h.push_back(v);
    }

    if (std::isfinite(tmpl.noise_floor_db)) {
        double peak = 0.0;
        for (const auto& v : h) peak = std::max(peak, std::abs(v));
        const double sigma = std::pow(10.0, tmpl.noise_floor_db / 20.0) * peak / std::numbers::sqrt2;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : h) {
            const double re = normal(rng);
            const double im = normal(rng);
            v += sigma * Complex(re, im);
        }
    }
    return FrequencyResponse(grid, std::move(h), tmpl.label);
}

std::vector<std::string> preset_names() {
    return {"doherty_low", "gan_hemt", "gan_hemt_nothermal"};
}

Preset preset(const std::string& name) {
    if (name == "doherty_low") {
        Preset p;
        p.tmpl.label = "doherty_low";
        p.tmpl.thermal_cells = {cell_with_cutoff(1.0, 300e3)};
        p.tmpl.trap_cells = {cell_with_cutoff(0.25, 2.5e6)};
        p.tmpl.resonators = {Resonator{3e9, 3.0, 0.1}};
        p.tmpl.floquet = FloquetImageSpec{10.95e9, 1, 1e-3, 1e-3};
        p.tmpl.direct_term = 0.05;
        p.tmpl.noise_floor_db = -100.0;
        p.f_start_hz = 50e3;
        p.f_stop_hz = 10e6;
        p.points_per_decade = 101;
        p.f_cut_hz = 10e6;
        return p;
    }
    if (name == "gan_hemt" || name == "gan_hemt_nothermal") {
        Preset p;
        p.tmpl.label = name;
        if (name == "gan_hemt") p.tmpl.thermal_cells = {cell_with_cutoff(1.0, 1e6)};
        p.tmpl.resonators = {Resonator{400e6, 2.0, 0.02}};
        p.tmpl.floquet = FloquetImageSpec{1e9, 1, 1e-3, 1e-3};
        p.tmpl.direct_term = 0.001;
        p.tmpl.noise_floor_db = -100.0;
        p.f_start_hz = 101e3;
        p.f_stop_hz = 1.2e9;
        p.points_per_decade = 101;
        p.f_cut_hz = 10e6;
        return p;
    }
    throw ArgumentError("unknown preset '" + name + "'");
}

std::string template_to_document(const CircuitTemplate& tmpl) {
    json doc;
    doc["label"] = tmpl.label;
    doc["thermal_cells"] = cells_to(tmpl.thermal_cells);
    doc["trap_cells"] = cells_to(tmpl.trap_cells);
    json res = json::array();
    for (const auto& r : tmpl.resonators) res.push_back({{"f0_hz", r.f0_hz}, {"q", r.q}, {"gain", r.gain}});
    doc["resonators"] = res;
    if (tmpl.floquet) {
        doc["floquet"] = {{"f_in_hz", tmpl.floquet->f_in_hz},
                          {"n_max", tmpl.floquet->n_max},
                          {"observability_scale", tmpl.floquet->observability_scale},
                          {"cancellation_offset", tmpl.floquet->cancellation_offset}};
    } else {
        doc["floquet"] = nullptr;
    }
    doc["direct_term"] = tmpl.direct_term;
    if (std::isfinite(tmpl.noise_floor_db)) {
        doc["noise_floor_db"] = tmpl.noise_floor_db;
    } else {
        doc["noise_floor_db"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

CircuitTemplate template_from_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("template document: ") + e.what());
    }
    try {
        check_keys(doc, {"label", "thermal_cells", "trap_cells", "resonators", "floquet", "direct_term",
                         "noise_floor_db"},
                   "template");
        CircuitTemplate t;
        t.label = doc.value("label", std::string{});
        t.thermal_cells = cells_from(doc, "thermal_cells");
        t.trap_cells = cells_from(doc, "trap_cells");
        if (doc.contains("resonators")) {
            for (const auto& r : doc["resonators"]) {
                check_keys(r, {"f0_hz", "q", "gain"}, "resonators");
                t.resonators.push_back(Resonator{r.at("f0_hz").get<double>(), r.at("q").get<double>(),
                                                 r.value("gain", 1.0)});
            }
        }
        if (doc.contains("floquet") && !doc["floquet"].is_null()) {
            const auto& f = doc["floquet"];
            check_keys(f, {"f_in_hz", "n_max", "observability_scale", "cancellation_offset"}, "floquet");
            t.floquet = FloquetImageSpec{f.at("f_in_hz").get<double>(), f.value("n_max", 1),
                                         f.value("observability_scale", 1.0), f.value("cancellation_offset", 0.0)};
        }
        t.direct_term = doc.value("direct_term", 0.0);
        if (doc.contains("noise_floor_db") && !doc["noise_floor_db"].is_null()) {
            t.noise_floor_db = doc["noise_floor_db"].get<double>();
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw FormatError(std::string("template document: ") + e.what());
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("template document: ") + e.what());
    }
}

CircuitTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return template_from_document(ss.str());
}

}  // namespace polefit
