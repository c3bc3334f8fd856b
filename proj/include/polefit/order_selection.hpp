#pragma once

#include "polefit/freq_response.hpp"
#include "polefit/identification.hpp"
#include "polefit/rational_model.hpp"

namespace polefit {

struct OrderSelectionConfig {
    double phase_goal_deg = 0.5;
    int max_order = 30;
    FitOptions fit_options;
    // Complex seeds get real part -ratio * imag.
    double init_real_part_ratio = 0.01;

    void validate() const;
};

// Interior maxima of |H| whose topographic prominence exceeds 1 dB; at least 1.
[[nodiscard]] int estimate_initial_pairs(const FrequencyResponse& response);

// Complex-pair strategy: seeds spread linearly over the band, one more pair at
// band center per outer iteration until the phase goal is met.
[[nodiscard]] RationalModel resonant_order_selection(const FrequencyResponse& response,
                                                     const OrderSelectionConfig& config);

// Real-pole strategy: start from one real pole at band center; each outer
// iteration re-seeds with the previous result plus another real pole there.
[[nodiscard]] RationalModel nonresonant_order_selection(const FrequencyResponse& response,
                                                        const OrderSelectionConfig& config);

enum class SelectionMode { resonant, nonresonant };

[[nodiscard]] std::string to_string(SelectionMode mode);
[[nodiscard]] SelectionMode selection_mode_from_string(const std::string& s);

[[nodiscard]] RationalModel select_order(const FrequencyResponse& response, SelectionMode mode,
                                         const OrderSelectionConfig& config);

}  // namespace polefit
