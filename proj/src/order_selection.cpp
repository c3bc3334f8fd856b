#include "polefit/order_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "polefit/errors.hpp"

namespace polefit {

namespace {

constexpr double kPeakProminenceDb = 1.0;
constexpr double kSeedClearance = 1e-6;

double two_pi() { return 2.0 * std::numbers::pi; }

// Moves a new seed off any existing pole so the basis stays well posed.
Complex clear_seed(const std::vector<Complex>& existing, Complex seed) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const bool clash = std::any_of(existing.begin(), existing.end(), [&](const Complex& p) {
            return std::abs(p - seed) <= kSeedClearance * std::abs(seed);
        });
        if (!clash) return seed;
        seed *= 1.05;
    }
    return seed;
}

template <typename Grow>
RationalModel run_selection(const FrequencyResponse& response, const OrderSelectionConfig& config,
                            std::vector<Complex> seeds, int step, Grow grow) {
    std::optional<RationalModel> best;
    int calls = 0;
    while (true) {
        const int order = static_cast<int>(seeds.size());
        ++calls;
        std::optional<RationalModel> model;
        try {
            model = identify(response, seeds, config.fit_options);
        } catch (const Error&) {
            if (!best) throw;
        }
        if (model) {
            model->identify_calls = calls;
            if (model->phase_error_deg <= config.phase_goal_deg) {
                model->converged = true;
                return *model;
            }
            if (!best || model->phase_error_deg < best->phase_error_deg) best = model;
        }
        if (order + step > config.max_order) break;
        std::vector<Complex> next = model ? model->poles() : seeds;
        grow(next);
        seeds = std::move(next);
    }
    best->converged = false;
    best->identify_calls = calls;
    return *best;
}

}  // namespace

void OrderSelectionConfig::validate() const {
    if (!(phase_goal_deg > 0.0)) {
        throw ArgumentError("phase goal must be positive");
    }
    if (max_order < 1) {
        throw ArgumentError("max_order must be at least 1");
    }
    if (!(init_real_part_ratio > 0.0)) {
        throw ArgumentError("init_real_part_ratio must be positive");
    }
    fit_options.validate();
}

int estimate_initial_pairs(const FrequencyResponse& response) {
    const auto& h = response.samples();
    std::vector<double> mag(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) mag[i] = std::abs(h[i]);

    int count = 0;
    for (std::size_t i = 1; i + 1 < mag.size(); ++i) {
        if (!(mag[i] > mag[i - 1] && mag[i] > mag[i + 1])) continue;
        // Lowest point on each side before the signal climbs above the peak.
        double left_min = mag[i];
        for (std::size_t j = i; j-- > 0;) {
            if (mag[j] > mag[i]) break;
            left_min = std::min(left_min, mag[j]);
        }
        double right_min = mag[i];
        for (std::size_t j = i + 1; j < mag.size(); ++j) {
            if (mag[j] > mag[i]) break;
            right_min = std::min(right_min, mag[j]);
        }
        const double base = std::max(left_min, right_min);
        if (base > 0.0 && 20.0 * std::log10(mag[i] / base) > kPeakProminenceDb) ++count;
    }
    return std::max(count, 1);
}

RationalModel resonant_order_selection(const FrequencyResponse& response, const OrderSelectionConfig& config) {
    config.validate();
    if (config.max_order < 2) {
        throw ArgumentError("resonant order selection needs max_order >= 2");
    }
    const double w_min = two_pi() * response.grid().front();
    const double w_max = two_pi() * response.grid().back();
    const double w_center = two_pi() * response.grid().center_hz();
    const double ratio = config.init_real_part_ratio;

    const int pairs = std::min(estimate_initial_pairs(response), config.max_order / 2);
    std::vector<Complex> seeds;
    for (int k = 0; k < pairs; ++k) {
        const double w = pairs == 1 ? w_center
                                    : w_min + (w_max - w_min) * static_cast<double>(k) / static_cast<double>(pairs - 1);
        seeds.emplace_back(-ratio * w, w);
        seeds.emplace_back(-ratio * w, -w);
    }
    return run_selection(response, config, std::move(seeds), 2, [&](std::vector<Complex>& poles) {
        const Complex seed = clear_seed(poles, Complex(-ratio * w_center, w_center));
        poles.push_back(seed);
        poles.push_back(std::conj(seed));
    });
}

RationalModel nonresonant_order_selection(const FrequencyResponse& response, const OrderSelectionConfig& config) {
    config.validate();
    const Complex center(-two_pi() * response.grid().center_hz(), 0.0);
    return run_selection(response, config, {center}, 1, [&](std::vector<Complex>& poles) {
        poles.push_back(clear_seed(poles, center));
    });
}

std::string to_string(SelectionMode mode) {
    return mode == SelectionMode::resonant ? "resonant" : "nonresonant";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "resonant") return SelectionMode::resonant;
    if (s == "nonresonant") return SelectionMode::nonresonant;
    throw ArgumentError("unknown selection mode '" + s + "' (expected resonant or nonresonant)");
}

RationalModel select_order(const FrequencyResponse& response, SelectionMode mode,
                           const OrderSelectionConfig& config) {
    return mode == SelectionMode::resonant ? resonant_order_selection(response, config)
                                           : nonresonant_order_selection(response, config);
}

}  // namespace polefit
