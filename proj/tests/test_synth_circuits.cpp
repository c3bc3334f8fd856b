#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "polefit/errors.hpp"
#include "polefit/identification.hpp"
#include "polefit/order_selection.hpp"
#include "polefit/synth_circuits.hpp"

using namespace polefit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double pole_error(const std::vector<Complex>& found, const std::vector<Complex>& want) {
    double worst = 0.0;
    for (const auto& w : want) {
        double best = INFINITY;
        for (const auto& f : found) best = std::min(best, std::abs(f - w) / std::abs(w));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_CASE("Foster cells") {
    const auto one = thermal_cell_poles({ThermalCell{2.0, 0.5}});
    REQUIRE(one.size() == 1);
    CHECK(one[0].pole == -1.0);
    CHECK(one[0].residue == 2.0);
    CHECK(one[0].residue / -one[0].pole == 2.0);

    const auto fast = thermal_cell_poles({ThermalCell{1.0, 1e-6}});
    CHECK_THAT(fast[0].pole, WithinRel(-1e6, 1e-15));
    CHECK_THAT(-fast[0].pole / oracle::kTwoPi, WithinRel(159154.94, 1e-7));

    const auto two = thermal_cell_poles({ThermalCell{1.0, 1.0}, ThermalCell{2.0, 2.0}});
    CHECK(two[0].pole == -1.0);
    CHECK(two[1].pole == -0.25);

    CHECK_THROWS_AS(thermal_cell_poles({ThermalCell{0.0, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(thermal_cell_poles({ThermalCell{1.0, -1.0}}), ArgumentError);
}

TEST_CASE("Floquet images") {
    const double eps = oracle::kTwoPi * 1e6;
    const auto one = floquet_images(eps, FloquetImageSpec{1e9, 1, 1.0, 0.0});
    REQUIRE(one.size() == 3);
    CHECK(one[0] == Complex(-eps, 0.0));
    CHECK(one[1] == Complex(-eps, oracle::kTwoPi * 1e9));
    CHECK(one[2] == Complex(-eps, -oracle::kTwoPi * 1e9));

    CHECK(floquet_images(eps, FloquetImageSpec{1e9, 0, 1.0, 0.0}).size() == 1);

    const auto two = floquet_images(eps, FloquetImageSpec{1e9, 2, 1.0, 0.0});
    REQUIRE(two.size() == 5);
    std::vector<double> imags;
    for (const auto& p : two) imags.push_back(p.imag());
    std::sort(imags.begin(), imags.end());
    CHECK_THAT(imags[0], WithinRel(-2.0 * oracle::kTwoPi * 1e9, 1e-15));
    CHECK(imags[2] == 0.0);
    CHECK_THAT(imags[4], WithinRel(2.0 * oracle::kTwoPi * 1e9, 1e-15));

    CHECK_THROWS_AS(floquet_images(0.0, FloquetImageSpec{}), ArgumentError);
    CHECK_THROWS_AS(floquet_images(1.0, FloquetImageSpec{1e9, -1, 1.0, 0.0}), ArgumentError);
}

TEST_CASE("single thermal cell response is exact") {
    CircuitTemplate t;
    t.thermal_cells = {ThermalCell{2.0, 0.5}};
    const auto grid = make_log_grid(1e-3, 10.0, 31);
    const auto r = synth_response(t, grid, 5);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex want = 2.0 / (Complex(0.0, oracle::kTwoPi * grid[i]) + 1.0);
        CHECK(std::abs(r.samples()[i] - want) <= 1e-15 * std::abs(want));
    }
}

TEST_CASE("resonator second-order term") {
    CircuitTemplate t;
    t.resonators = {Resonator{1e6, 5.0, 2.0}};
    const auto grid = make_log_grid(1e4, 1e8, 41);
    const auto r = synth_response(t, grid, 0);
    const double w0 = oracle::kTwoPi * 1e6;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex s(0.0, oracle::kTwoPi * grid[i]);
        const Complex want = 2.0 * (w0 / 5.0) * s / (s * s + (w0 / 5.0) * s + w0 * w0);
        CHECK(std::abs(r.samples()[i] - want) <= 1e-12 * std::abs(want));
    }
    // The resonance peak equals the gain.
    const auto peak = synth_response(t, FrequencyGrid({0.5e6, 1e6, 2e6}, GridScale::log), 0);
    CHECK_THAT(std::abs(peak.samples()[1]), WithinRel(2.0, 1e-12));
}

TEST_CASE("template model matches the synthesized response") {
    for (const auto& name : preset_names()) {
        auto p = preset(name);
        p.tmpl.noise_floor_db = -std::numeric_limits<double>::infinity();
        const auto grid = make_log_grid(p.f_start_hz, p.f_stop_hz, 31);
        const auto r = synth_response(p.tmpl, grid, 0);
        const auto m = template_model(p.tmpl);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Complex want = r.samples()[i];
            CHECK(std::abs(oracle::eval(m, Complex(0.0, oracle::kTwoPi * grid[i])) - want) <= 1e-9 * std::abs(want));
        }
    }
    CircuitTemplate overdamped;
    overdamped.resonators = {Resonator{1e6, 0.2, 1.0}};
    const auto m = template_model(overdamped);
    CHECK(m.terms.size() == 2);
    CHECK(m.terms[0].kind == PoleKind::real);
    CircuitTemplate critical;
    critical.resonators = {Resonator{1e6, 0.5, 1.0}};
    CHECK_THROWS_AS(template_model(critical), ArgumentError);
}

TEST_CASE("images share the real part of the slowest thermal pole") {
    CircuitTemplate t;
    t.thermal_cells = {ThermalCell{1.0, 1e-6}, ThermalCell{1.0, 1e-8}};
    t.floquet = FloquetImageSpec{1e9, 2, 1e-3, 1e-3};
    const auto m = template_model(t);
    double slow = 0.0;
    for (const auto& term : m.terms) {
        if (term.kind == PoleKind::real) slow = std::max(slow, -1.0 / term.pole.real());
    }
    int images = 0;
    for (const auto& term : m.terms) {
        if (term.kind == PoleKind::complex_pair) {
            ++images;
            CHECK(term.pole.real() == -1e6);
            // Net image residue: observability x cancellation offset x 1/C.
            CHECK_THAT(term.residue.real(), WithinRel(1e-3 * 1e-3 * 1e6, 1e-12));
        }
    }
    CHECK(images == 2);
    CHECK_THAT(slow, WithinRel(1e-6, 1e-12));
    CHECK(imaged_thermal_cell(t)->c == 1e-6);
}

TEST_CASE("synthesized responses are deterministic and conjugate symmetric") {
    const auto p = preset("gan_hemt");
    const auto grid = make_log_grid(p.f_start_hz, p.f_stop_hz, p.points_per_decade);
    const auto a = synth_response(p.tmpl, grid, 42);
    const auto b = synth_response(p.tmpl, grid, 42);
    const auto c = synth_response(p.tmpl, grid, 43);
    CHECK(a.samples() == b.samples());
    CHECK(a.samples() != c.samples());

    const auto m = template_model(p.tmpl);
    for (double f : {1e5, 1e7, 1e9}) {
        const Complex s(0.0, oracle::kTwoPi * f);
        CHECK(std::abs(oracle::eval(m, std::conj(s)) - std::conj(oracle::eval(m, s))) < 1e-12 * std::abs(oracle::eval(m, s)));
    }
}

TEST_CASE("noise level is referenced to the peak magnitude") {
    CircuitTemplate t;
    t.direct_term = 1.0;
    t.noise_floor_db = -40.0;
    const auto grid = make_linear_grid(1.0, 2000.0, 2000);
    const auto r = synth_response(t, grid, 9);
    double sum = 0.0;
    for (const auto& h : r.samples()) sum += std::norm(h - 1.0);
    const double rms = std::sqrt(sum / static_cast<double>(grid.size()));
    CHECK_THAT(rms, WithinRel(1e-2, 0.05));
}

TEST_CASE("noiseless template poles are recovered at exact order") {
    CircuitTemplate t;
    t.thermal_cells = {ThermalCell{1.0, 1.0 / (oracle::kTwoPi * 1e5)}};
    t.trap_cells = {ThermalCell{0.3, 1.0 / (0.3 * oracle::kTwoPi * 3e6)}};
    t.resonators = {Resonator{2e8, 4.0, 0.2}};
    t.floquet = FloquetImageSpec{1e9, 1, 0.5, 0.5};
    t.direct_term = 0.05;
    const auto grid = make_log_grid(1e4, 3e9, 60);
    const auto r = synth_response(t, grid, 0);
    const auto truth = template_model(t);
    std::vector<Complex> start;
    for (const auto& p : truth.poles()) start.push_back(p * 0.9);
    FitOptions o;
    o.max_relocation_iters = 50;
    const auto m = identify(r, start, o);
    CHECK(pole_error(m.poles(), truth.poles()) < 1e-6);
}

TEST_CASE("amplifier preset: low band recovers the thermal pole") {
    const auto p = preset("gan_hemt");
    const auto grid = make_log_grid(p.f_start_hz, p.f_stop_hz, p.points_per_decade);
    const auto low = band_select(synth_response(p.tmpl, grid, 1), p.f_start_hz, p.f_cut_hz);
    const auto m = nonresonant_order_selection(low, OrderSelectionConfig{});
    const double eps = 1.0 / (p.tmpl.thermal_cells[0].r * p.tmpl.thermal_cells[0].c);
    REQUIRE(m.converged);
    const auto it = std::find_if(m.terms.begin(), m.terms.end(), [](const PoleTerm& t) { return t.kind == PoleKind::real; });
    REQUIRE(it != m.terms.end());
    CHECK_THAT(it->pole.real(), WithinRel(-eps, 1e-3));
}

TEST_CASE("presets") {
    CHECK(preset_names() == std::vector<std::string>{"doherty_low", "gan_hemt", "gan_hemt_nothermal"});
    const auto gan = preset("gan_hemt");
    CHECK(gan.f_start_hz == 101e3);
    CHECK(gan.f_stop_hz == 1.2e9);
    CHECK(gan.points_per_decade == 101);
    REQUIRE(gan.tmpl.floquet);
    CHECK(gan.tmpl.floquet->f_in_hz == 1e9);
    CHECK(gan.tmpl.floquet->observability_scale == 1e-3);
    CHECK(gan.tmpl.floquet->cancellation_offset == 1e-3);
    CHECK(gan.tmpl.noise_floor_db == -100.0);
    const double cutoff = 1.0 / (oracle::kTwoPi * gan.tmpl.thermal_cells[0].r * gan.tmpl.thermal_cells[0].c);
    CHECK_THAT(cutoff, WithinRel(1e6, 1e-12));
    CHECK(preset("gan_hemt_nothermal").tmpl.thermal_cells.empty());
    const auto doherty = preset("doherty_low");
    CHECK(doherty.f_start_hz == 50e3);
    CHECK(doherty.f_stop_hz == 10e6);
    CHECK_THROWS_AS(preset("nope"), ArgumentError);
}

TEST_CASE("template document round trip") {
    const auto t = preset("gan_hemt").tmpl;
    const auto back = template_from_document(template_to_document(t));
    CHECK(back.label == t.label);
    REQUIRE(back.thermal_cells.size() == 1);
    CHECK(back.thermal_cells[0].c == t.thermal_cells[0].c);
    REQUIRE(back.resonators.size() == t.resonators.size());
    CHECK(back.resonators[0].q == t.resonators[0].q);
    REQUIRE(back.floquet);
    CHECK(back.floquet->observability_scale == 1e-3);
    CHECK(back.noise_floor_db == -100.0);

    CircuitTemplate quiet;
    quiet.thermal_cells = {ThermalCell{2.0, 0.5}};
    const auto q = template_from_document(template_to_document(quiet));
    CHECK(std::isinf(q.noise_floor_db));
    CHECK_FALSE(q.floquet);

    CHECK_THROWS_AS(template_from_document("{\"thermal_cells\": [{\"r\": -1, \"c\": 1}]}"), FormatError);
    CHECK_THROWS_AS(template_from_document("{\"resistors\": []}"), FormatError);
    CHECK_THROWS_AS(template_from_document("[1, 2"), FormatError);
    CHECK_THROWS_AS(load_template("/nonexistent/t.json"), IoError);
}
