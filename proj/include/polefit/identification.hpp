#pragma once

#include <span>
#include <vector>

#include "polefit/freq_response.hpp"
#include "polefit/rational_model.hpp"

namespace polefit {

enum class WeightRule {
    uniform,
    // Each sample equation is divided by |H_data|, i.e. relative error.
    inverse_magnitude,
};

struct FitOptions {
    bool include_d = true;
    bool include_e = false;
    WeightRule weight_rule = WeightRule::uniform;
    int max_relocation_iters = 20;
    double pole_motion_tol = 1e-8;
    // Off by default: right-half-plane poles are the thing being looked for.
    bool flip_unstable = false;

    void validate() const;
};

// Pole sets passed to and returned from the engine are conjugate-closed: every
// complex pole appears together with its conjugate.

// Real poles (ascending |p|) followed by the upper member of each pair
// (ascending imag). Throws ArgumentError when the list is not conjugate-closed.
[[nodiscard]] std::vector<Complex> canonical_poles(std::span<const Complex> poles);
[[nodiscard]] std::vector<Complex> expand_conjugates(std::span<const Complex> canonical);

// Largest |new - old| / |old| after greedy nearest matching of the two sets.
[[nodiscard]] double max_relative_displacement(std::span<const Complex> before, std::span<const Complex> after);

// Linear least-squares fit of residues (and d, e per options) for fixed poles.
[[nodiscard]] RationalModel fit_residues(const FrequencyResponse& response, std::span<const Complex> poles,
                                         const FitOptions& options);

struct RelocationStep {
    std::vector<Complex> poles;             // conjugate-closed, canonical order
    std::vector<Complex> sigma_residues;    // one per canonical starting pole
};

// One pole-relocation step shared by all responses (which must sit on the
// same grid): sigma(s) H_p(s) ~ fit_p(s), new poles = zeros of sigma.
[[nodiscard]] RelocationStep relocation_step(std::span<const FrequencyResponse> responses,
                                             std::span<const Complex> poles, const FitOptions& options);

[[nodiscard]] std::vector<Complex> relocate_poles(const FrequencyResponse& response, std::span<const Complex> poles,
                                                  const FitOptions& options);

struct SharedPoles {
    std::vector<Complex> poles;
    int iterations = 0;
    double last_displacement = 0.0;
};

// Repeats relocation_step until the poles stop moving (or the iteration cap).
[[nodiscard]] SharedPoles relocate_until_converged(std::span<const FrequencyResponse> responses,
                                                   std::span<const Complex> initial_poles,
                                                   const FitOptions& options);

// Relocation to convergence, final residue fit, phase error annotation.
[[nodiscard]] RationalModel identify(const FrequencyResponse& response, std::span<const Complex> initial_poles,
                                     const FitOptions& options);

}  // namespace polefit
