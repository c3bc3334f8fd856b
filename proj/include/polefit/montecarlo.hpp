#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "polefit/freq_response.hpp"
#include "polefit/order_selection.hpp"
#include "polefit/rational_model.hpp"
#include "polefit/residue_analysis.hpp"
#include "polefit/synth_circuits.hpp"

namespace polefit {

struct DispersionSpec {
    double relative_sigma = 0.05;  // Gaussian, independent per parameter
    int iterations = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Stability { stable, unstable, critical };

[[nodiscard]] std::string to_string(Stability s);

// re > tol: unstable, re < -tol: stable, otherwise critical.
[[nodiscard]] Stability classify_pole(Complex pole, double critical_tol = 0.0);

struct StabilityCounts {
    int stable = 0;
    int unstable = 0;
    int critical = 0;

    [[nodiscard]] int total() const { return stable + unstable + critical; }
};

[[nodiscard]] StabilityCounts classify_stability(std::span<const Complex> poles, double critical_tol = 0.0);

struct McSettings {
    SelectionMode mode = SelectionMode::nonresonant;
    OrderSelectionConfig selection;
    double rho_threshold = kDefaultRhoThreshold;
    double critical_tol = 0.0;
    // Sub-band identified in every iteration; the response is always
    // synthesized on the full grid first so the noise level is set by it.
    std::optional<Band> analysis_band;
    // 0 picks the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

// One surviving term; pairs are stored by their positive-imag member.
struct MapPole {
    Complex pole;
    PoleKind kind = PoleKind::real;
    double rho = 0.0;
    Stability stability = Stability::stable;
};

struct McIteration {
    int index = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    int order = 0;
    double phase_error_deg = 0.0;
    bool converged = false;
    std::vector<MapPole> poles;
};

struct PoleMap {
    std::vector<McIteration> iterations;  // indexed by iteration number
    Band band;
    SelectionMode mode = SelectionMode::nonresonant;

    [[nodiscard]] int failed_count() const;
};

// Seed of iteration i's private stream; a pure function of (seed, i).
[[nodiscard]] std::uint64_t iteration_seed(std::uint64_t seed, int iteration);

// Multiplies R, C, f0, Q and gain by independent (1 + sigma g) factors,
// redrawing any factor <= 0.
[[nodiscard]] CircuitTemplate disperse(const CircuitTemplate& tmpl, double relative_sigma, std::mt19937_64& rng);

// Iterations run in parallel; the result depends only on the arguments, not
// on the thread count or scheduling. Every iteration sees the same noise
// realization (seeded by the base seed), so zero dispersion gives identical
// iterations.
[[nodiscard]] PoleMap run_mc(const CircuitTemplate& tmpl, const DispersionSpec& dispersion, const FrequencyGrid& grid,
                             const McSettings& settings);

struct ScatterStats {
    double mean_re = 0.0;
    double std_re = 0.0;
    double mean_im = 0.0;
    double std_im = 0.0;
    int count = 0;
};

// Sample statistics of the map poles with f_lo <= |imag|/2pi <= f_hi,
// optionally restricted to one pole kind. ArgumentError when none match.
[[nodiscard]] ScatterStats scatter_stats(const PoleMap& map, double f_lo_hz, double f_hi_hz,
                                         std::optional<PoleKind> kind = std::nullopt);

// CSV `iteration,pole_re_radps,pole_im_radps,kind,rho,stability`, both
// members of a pair listed.
[[nodiscard]] std::string pole_map_csv(const PoleMap& map);
void save_pole_map_csv(const PoleMap& map, const std::string& path);

}  // namespace polefit
