#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "polefit/errors.hpp"
#include "polefit/freq_response.hpp"

using namespace polefit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS_AS(FrequencyGrid({1.0}, GridScale::linear), ArgumentError);
    CHECK_THROWS_AS(FrequencyGrid({0.0, 1.0}, GridScale::linear), ArgumentError);
    CHECK_THROWS_AS(FrequencyGrid({2.0, 1.0}, GridScale::linear), ArgumentError);
    CHECK_THROWS_AS(FrequencyGrid({1.0, 1.0}, GridScale::linear), ArgumentError);
    CHECK_NOTHROW(FrequencyGrid({1.0, 2.0}, GridScale::linear));
}

TEST_CASE("response invariants are enforced") {
    const FrequencyGrid g({1.0, 2.0}, GridScale::linear);
    CHECK_THROWS_AS(FrequencyResponse(g, {Complex(1.0)}), ArgumentError);
    CHECK_THROWS_AS(FrequencyResponse(g, {Complex(1.0), Complex(NAN, 0.0)}), ArgumentError);
    CHECK_THROWS_AS(FrequencyResponse(g, {Complex(1.0), Complex(0.0, INFINITY)}), ArgumentError);
}

TEST_CASE("log grid follows the points-per-decade rule") {
    SECTION("three points per decade") {
        const auto g = make_log_grid(1.0, 10.0, 3);
        REQUIRE(g.size() == 3);
        CHECK(g[0] == 1.0);
        CHECK_THAT(g[1], WithinRel(std::sqrt(10.0), 1e-14));
        CHECK(g[2] == 10.0);
        CHECK(g.scale() == GridScale::log);
    }
    SECTION("two points per decade over two decades") {
        const auto g = make_log_grid(1.0, 100.0, 2);
        REQUIRE(g.size() == 3);
        CHECK_THAT(g[1], WithinRel(10.0, 1e-14));
        CHECK(g[2] == 100.0);
    }
    SECTION("low band of the amplifier study") {
        const auto g = make_log_grid(101e3, 10e6, 101);
        CHECK(g.front() == 101e3);
        CHECK(g.back() == 10e6);
        // floor(100 log10(10e6 / 101e3)) + 1 rule points plus the appended stop.
        const int rule_points = static_cast<int>(std::floor(100.0 * std::log10(10e6 / 101e3))) + 1;
        CHECK(static_cast<int>(g.size()) == rule_points + 1);
        CHECK(g.size() == 201);
    }
    SECTION("interior spacing is uniform in log10") {
        const auto g = make_log_grid(101e3, 1.2e9, 101);
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            CHECK_THAT(std::log10(g[i]) - std::log10(g[i - 1]), WithinRel(0.01, 1e-9));
        }
    }
    SECTION("one full decade holds exactly ppd points") {
        CHECK(make_log_grid(1e3, 1e4, 101).size() == 101);
    }
    CHECK_THROWS_AS(make_log_grid(10.0, 1.0, 3), ArgumentError);
    CHECK_THROWS_AS(make_log_grid(1.0, 10.0, 1), ArgumentError);
    CHECK_THROWS_AS(make_log_grid(0.0, 10.0, 3), ArgumentError);
}

TEST_CASE("linear grid and center frequency") {
    const auto g = make_linear_grid(1.0, 5.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g[2] == 3.0);
    CHECK(g.center_hz() == 3.0);
    CHECK_THAT(make_log_grid(1e3, 1e5, 11).center_hz(), WithinRel(1e4, 1e-12));
}

TEST_CASE("load_csv parses the documented format") {
    const auto path = oracle::temp_path("two_rows.csv");
    write_file(path, "freq_hz,re,im\n1,1,0\n2,0.5,-0.5");
    const auto r = load_csv(path);
    REQUIRE(r.size() == 2);
    CHECK(r.samples()[0] == Complex(1.0, 0.0));
    CHECK(r.samples()[1] == Complex(0.5, -0.5));
    CHECK(r.grid()[1] == 2.0);
}

TEST_CASE("load_csv rejects malformed files") {
    const auto path = oracle::temp_path("bad.csv");
    SECTION("non-monotonic") {
        write_file(path, "freq_hz,re,im\n2,1,0\n1,1,0\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring("non-monotonic"));
        CHECK_THROWS_AS(load_csv(path), FormatError);
    }
    SECTION("non-numeric cell names the row") {
        write_file(path, "freq_hz,re,im\n1,1,0\n2,abc,0\n");
        CHECK_THROWS_WITH(load_csv(path), ContainsSubstring("row 3"));
    }
    SECTION("wrong header") {
        write_file(path, "f,re,im\n1,1,0\n2,1,0\n");
        CHECK_THROWS_AS(load_csv(path), FormatError);
    }
    SECTION("wrong column count") {
        write_file(path, "freq_hz,re,im\n1,1\n2,1,0\n");
        CHECK_THROWS_AS(load_csv(path), FormatError);
    }
    SECTION("missing file names the path") {
        CHECK_THROWS_WITH(load_csv("/nonexistent/resp.csv"), ContainsSubstring("/nonexistent/resp.csv"));
        CHECK_THROWS_AS(load_csv("/nonexistent/resp.csv"), IoError);
    }
}

TEST_CASE("save_csv writes the header and 17 significant digits") {
    const FrequencyGrid g({1.0, 2.0}, GridScale::linear);
    const FrequencyResponse r(g, {Complex(1.0, 0.0), Complex(0.1, -1.0 / 3.0)});
    const auto path = oracle::temp_path("save.csv");
    save_csv(r, path);
    const auto text = read_file(path);
    CHECK(text.rfind("freq_hz,re,im\n1,1,0\n", 0) == 0);
    CHECK_THAT(text, ContainsSubstring("-0.33333333333333331"));
    CHECK_THROWS_AS(save_csv(r, ""), IoError);
}

TEST_CASE("save then load is the identity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    const auto g = make_log_grid(101e3, 1.2e9, 101);
    std::vector<Complex> h;
    for (std::size_t i = 0; i < g.size(); ++i) h.emplace_back(u(rng) * 1e-7, u(rng));
    const FrequencyResponse r(g, h);
    const auto path = oracle::temp_path("roundtrip.csv");
    save_csv(r, path);
    const auto back = load_csv(path);
    REQUIRE(back.size() == r.size());
    CHECK(back.grid().points() == r.grid().points());
    CHECK(back.samples() == r.samples());
    CHECK(back.grid().scale() == GridScale::log);
}

TEST_CASE("band_split duplicates the boundary point") {
    const FrequencyGrid g({1.0, 2.0, 3.0, 4.0}, GridScale::linear);
    const FrequencyResponse r(g, {Complex(1), Complex(2), Complex(3), Complex(4)});
    const auto [low, high] = band_split(r, 2.5);
    CHECK(low.grid().points() == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(high.grid().points() == std::vector<double>{3.0, 4.0});
    CHECK(low.samples().back() == Complex(3));
    CHECK(high.samples().front() == Complex(3));
    CHECK_THROWS_AS(band_split(r, 0.5), ArgumentError);
    CHECK_THROWS_AS(band_split(r, 5.0), ArgumentError);
}

TEST_CASE("band_split on the wide two-band workflow") {
    const auto g = make_log_grid(50e3, 11.2e9, 101);
    const FrequencyResponse r(g, std::vector<Complex>(g.size(), Complex(1.0)));
    const auto [low, high] = band_split(r, 10e6);
    CHECK(low.grid().front() == 50e3);
    CHECK(high.grid().back() == 11.2e9);
    CHECK(low.grid().back() == high.grid().front());
    CHECK(low.grid().back() >= 10e6);
    CHECK(low.grid().back() < 10e6 * 1.03);
    CHECK(low.size() + high.size() == r.size() + 1);
    CHECK(high.grid().scale() == GridScale::log);
}

TEST_CASE("band_select keeps the requested sub-band") {
    const auto g = make_log_grid(101e3, 1.2e9, 101);
    const FrequencyResponse r(g, std::vector<Complex>(g.size(), Complex(1.0)));
    const auto sub = band_select(r, 10e6, 1.2e9);
    CHECK(sub.grid().back() == 1.2e9);
    CHECK(sub.grid().front() <= 10e6 * 1.03);
    CHECK(sub.grid().front() >= 10e6 / 1.03);
}
