#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polefit/freq_response.hpp"
#include "polefit/rational_model.hpp"

namespace polefit {

// Parallel RC cell of a Foster network: R/(1 + s R C).
struct ThermalCell {
    double r = 1.0;  // K/W
    double c = 1.0;  // J/K

    void validate() const;
};

struct Resonator {
    double f0_hz = 1.0;
    double q = 1.0;
    double gain = 1.0;

    void validate() const;
};

// Images of the slowest thermal pole -eps at -eps +/- j 2 pi n f_in.
struct FloquetImageSpec {
    double f_in_hz = 1.0;
    int n_max = 1;
    double observability_scale = 1.0;
    double cancellation_offset = 0.0;

    void validate() const;
};

struct CircuitTemplate {
    std::vector<ThermalCell> thermal_cells;
    std::vector<ThermalCell> trap_cells;
    std::vector<Resonator> resonators;
    std::optional<FloquetImageSpec> floquet;
    double direct_term = 0.0;
    // dB below max|H| over the grid; -infinity disables noise.
    double noise_floor_db = -std::numeric_limits<double>::infinity();
    std::string label;

    void validate() const;
};

struct PoleResidue {
    double pole = 0.0;
    double residue = 0.0;
};

// Foster terms: pole -1/(R C), residue 1/C.
[[nodiscard]] std::vector<PoleResidue> thermal_cell_poles(const std::vector<ThermalCell>& cells);

// {-eps} followed by -eps +/- j 2 pi n f_in for n = 1..n_max.
[[nodiscard]] std::vector<Complex> floquet_images(double epsilon, const FloquetImageSpec& spec);

// Slowest thermal cell (largest R C), the one whose pole is imaged.
[[nodiscard]] std::optional<ThermalCell> imaged_thermal_cell(const CircuitTemplate& tmpl);

// Noise-free response as a partial-fraction model (all poles of the template).
// Throws ArgumentError for a critically damped resonator (Q = 1/2), which has
// a double pole.
[[nodiscard]] RationalModel template_model(const CircuitTemplate& tmpl);

// Template evaluated on the grid plus seeded complex Gaussian noise.
[[nodiscard]] FrequencyResponse synth_response(const CircuitTemplate& tmpl, const FrequencyGrid& grid,
                                               std::uint64_t seed);

// Shipped presets with the band each is meant to be analyzed on.
struct Preset {
    CircuitTemplate tmpl;
    double f_start_hz = 0.0;
    double f_stop_hz = 0.0;
    int points_per_decade = 101;
    // Boundary between the low (non-resonant) and wide (resonant) analyses.
    double f_cut_hz = 0.0;
};

[[nodiscard]] std::vector<std::string> preset_names();
[[nodiscard]] Preset preset(const std::string& name);

// Template document (JSON).
[[nodiscard]] std::string template_to_document(const CircuitTemplate& tmpl);
[[nodiscard]] CircuitTemplate template_from_document(const std::string& text);
[[nodiscard]] CircuitTemplate load_template(const std::string& path);

}  // namespace polefit
