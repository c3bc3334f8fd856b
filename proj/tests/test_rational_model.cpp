#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "polefit/errors.hpp"
#include "polefit/rational_model.hpp"

using namespace polefit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RationalModel one_real(double pole, double residue, double d) {
    RationalModel m;
    m.terms.push_back(PoleTerm::real(pole, residue));
    m.d = d;
    m.band = Band{0.01, 10.0};
    return m;
}

bool contains_root(const std::vector<Complex>& roots, Complex want, double tol) {
    return std::any_of(roots.begin(), roots.end(), [&](Complex r) { return std::abs(r - want) <= tol; });
}

}  // namespace

TEST_CASE("pole term invariants") {
    CHECK_THROWS_AS(PoleTerm::pair(Complex(-1.0, 0.0), Complex(1.0)), ArgumentError);
    CHECK_THROWS_AS(PoleTerm::pair(Complex(-1.0, -2.0), Complex(1.0)), ArgumentError);
    const auto t = PoleTerm::pair(Complex(-1.0, 2.0), Complex(1.0, 0.5));
    CHECK(t.order() == 2);
    CHECK(PoleTerm::real(-1.0, 2.0).order() == 1);
    RationalModel m;
    m.terms = {t, PoleTerm::real(-3.0, 1.0)};
    CHECK(m.order() == 3);
    CHECK(m.poles().size() == 3);
}

TEST_CASE("evaluate on the single real pole model") {
    const auto m = one_real(-1.0, 1.0, 0.0);
    CHECK(evaluate_at(m, Complex(0.0, 0.0)) == Complex(1.0, 0.0));
    const Complex h = evaluate_at(m, Complex(0.0, 1.0));
    CHECK_THAT(h.real(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(h.imag(), WithinAbs(-0.5, 1e-15));
    CHECK_THAT(std::abs(evaluate(m, 1.0 / (2.0 * std::numbers::pi)) - Complex(0.5, -0.5)), WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(evaluate_at(m, Complex(-1.0, 0.0)), EvaluationError);
}

TEST_CASE("evaluate agrees with the partial-fraction oracle and is real-rational") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = oracle::random_model(rng, trial % 3, 1 + trial % 2, 1e3, 1e8, 0.1 * trial);
        m.e = trial % 4 == 0 ? 1e-9 : 0.0;
        std::uniform_real_distribution<double> u(3.0, 8.5);
        const double f = std::pow(10.0, u(rng));
        const Complex s(0.0, oracle::kTwoPi * f);
        const Complex h = evaluate(m, f);
        CHECK(oracle::relative_error(h, oracle::eval(m, s)) < 1e-12);
        CHECK(std::abs(evaluate_at(m, std::conj(s)) - std::conj(h)) < 1e-12 * std::abs(h));
    }
}

TEST_CASE("phase error metric") {
    std::mt19937_64 rng(9);
    const auto m = oracle::random_model(rng, 2, 1, 1e3, 1e7, 0.5);
    const auto grid = make_log_grid(1e3, 1e7, 21);
    const auto data = oracle::sample(m, grid);

    CHECK_THAT(phase_error_deg(m, data), WithinAbs(0.0, 1e-9));

    std::vector<Complex> rotated;
    std::vector<Complex> negated;
    for (const auto& h : data.samples()) {
        rotated.push_back(h * std::polar(1.0, std::numbers::pi / 180.0));
        negated.push_back(-h);
    }
    CHECK_THAT(phase_error_deg(m, FrequencyResponse(grid, rotated)), WithinRel(1.0, 1e-9));
    CHECK_THAT(phase_error_deg(m, FrequencyResponse(grid, negated)), WithinRel(180.0, 1e-9));

    SECTION("invariant under a common positive scale") {
        RationalModel scaled = m;
        scaled.d *= 3.5;
        for (auto& t : scaled.terms) t.residue *= 3.5;
        std::vector<Complex> rs;
        for (const auto& h : rotated) rs.push_back(3.5 * h);
        CHECK_THAT(phase_error_deg(scaled, FrequencyResponse(grid, rs)),
                   WithinRel(phase_error_deg(m, FrequencyResponse(grid, rotated)), 1e-9));
    }
    SECTION("zero-magnitude sample is a metric error") {
        std::vector<Complex> z = data.samples();
        z[3] = Complex(0.0, 0.0);
        CHECK_THROWS_AS(phase_error_deg(m, FrequencyResponse(grid, z)), MetricError);
    }
}

TEST_CASE("zeros of simple models") {
    SECTION("(s+2)/(s+1)") {
        const auto z = zeros(one_real(-1.0, 1.0, 1.0));
        REQUIRE(z.size() == 1);
        CHECK_THAT(z[0].real(), WithinAbs(-2.0, 1e-12));
        CHECK_THAT(z[0].imag(), WithinAbs(0.0, 1e-12));
    }
    SECTION("constant numerator has no zeros") {
        CHECK(zeros(one_real(-1.0, 1.0, 0.0)).empty());
    }
    SECTION("two real poles, expansion oracle") {
        RationalModel m;
        m.terms = {PoleTerm::real(-1.0, 1.0), PoleTerm::real(-3.0, 1.0)};
        const auto num = oracle::numerator(m);
        CHECK_THAT(num[0].real(), WithinAbs(4.0, 1e-12));
        CHECK_THAT(num[1].real(), WithinAbs(2.0, 1e-12));
        CHECK_THAT(std::abs(num[2]), WithinAbs(0.0, 1e-12));
        const auto z = zeros(m);
        REQUIRE(z.size() == 1);
        CHECK_THAT(z[0].real(), WithinAbs(-2.0, 1e-12));
    }
    SECTION("proportional term raises the numerator degree") {
        RationalModel m = one_real(-1.0, 1.0, 0.0);
        m.e = 1.0;
        // 1/(s+1) + s = (s^2 + s + 1)/(s + 1)
        const auto z = zeros(m);
        REQUIRE(z.size() == 2);
        CHECK(contains_root(z, Complex(-0.5, std::sqrt(3.0) / 2.0), 1e-12));
        CHECK(contains_root(z, Complex(-0.5, -std::sqrt(3.0) / 2.0), 1e-12));
    }
    SECTION("degenerate models") {
        CHECK_THROWS_AS(zeros(RationalModel{}), ArgumentError);
        CHECK_THROWS_AS(zeros(one_real(-1.0, 0.0, 0.0)), DegenerateModelError);
    }
}

TEST_CASE("returned zeros are zeros of H") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const int reals = trial % 4;
        const int pairs = 1 + trial % 2;
        const auto m = oracle::random_model(rng, reals, pairs, 1e3, 1e7, trial % 2 ? 0.3 : 0.0);
        const auto grid = make_log_grid(1e3, 1e7, 31);
        double peak = 0.0;
        for (double f : grid.points()) peak = std::max(peak, std::abs(oracle::eval(m, {0.0, oracle::kTwoPi * f})));
        CHECK(zeros(m).size() == static_cast<std::size_t>(m.order()) - (m.d == 0.0 ? 1 : 0));
        for (const auto& z : zeros(m)) {
            const bool on_pole = std::any_of(m.terms.begin(), m.terms.end(), [&](const PoleTerm& t) {
                return std::abs(z - t.pole) < 1e-9 * std::abs(t.pole) ||
                       std::abs(z - std::conj(t.pole)) < 1e-9 * std::abs(t.pole);
            });
            if (on_pole) continue;
            CHECK(std::abs(oracle::eval(m, z)) < 1e-8 * peak);
        }
    }
}

TEST_CASE("polynomial roots by companion matrix") {
    // (s - 1)(s - 2)(s + 3) = s^3 - 7 s + 6
    const std::vector<double> c{6.0, -7.0, 0.0, 1.0};
    const auto r = polynomial_roots(c);
    REQUIRE(r.size() == 3);
    CHECK(contains_root(r, Complex(1.0), 1e-10));
    CHECK(contains_root(r, Complex(2.0), 1e-10));
    CHECK(contains_root(r, Complex(-3.0), 1e-10));
}

TEST_CASE("model document round trip") {
    std::mt19937_64 rng(3);
    auto m = oracle::random_model(rng, 2, 2, 1e4, 1e9, 0.25);
    m.e = 1e-12;
    m.phase_error_deg = 0.125;
    m.converged = false;
    const auto back = model_from_document(model_to_document(m));
    REQUIRE(back.terms.size() == m.terms.size());
    for (std::size_t k = 0; k < m.terms.size(); ++k) {
        CHECK(back.terms[k].kind == m.terms[k].kind);
        CHECK(back.terms[k].pole == m.terms[k].pole);
        CHECK(back.terms[k].residue == m.terms[k].residue);
    }
    CHECK(back.d == m.d);
    CHECK(back.e == m.e);
    CHECK(back.band.f_min_hz == m.band.f_min_hz);
    CHECK(back.phase_error_deg == 0.125);
    CHECK_FALSE(back.converged);

    RationalModel unfit = one_real(-1.0, 1.0, 0.0);
    CHECK(std::isnan(model_from_document(model_to_document(unfit)).phase_error_deg));

    const auto path = oracle::temp_path("model.json");
    save_model(m, path);
    CHECK(load_model(path).terms.size() == m.terms.size());
}

TEST_CASE("model document rejects bad input") {
    CHECK_THROWS_AS(model_from_document("not json"), FormatError);
    CHECK_THROWS_AS(model_from_document("{\"order\": 1}"), FormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}

TEST_CASE("pole CSV lists both conjugates") {
    RationalModel m;
    m.terms = {PoleTerm::real(-2.0, 1.0), PoleTerm::pair(Complex(-1.0, 10.0), Complex(1.0))};
    const auto path = oracle::temp_path("poles.csv");
    save_pole_csv(m, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "re_radps,im_radps,kind");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 3);
}
