#pragma once

#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "polefit/freq_response.hpp"

namespace polefit {

enum class PoleKind { real, complex_pair };

// One partial-fraction term r/(s - p). A complex pair is stored once, with
// imag(pole) > 0; the conjugate term r*/(s - p*) is implied.
struct PoleTerm {
    PoleKind kind = PoleKind::real;
    Complex pole;
    Complex residue;

    [[nodiscard]] static PoleTerm real(double pole, double residue);
    [[nodiscard]] static PoleTerm pair(Complex pole, Complex residue);

    [[nodiscard]] int order() const noexcept { return kind == PoleKind::real ? 1 : 2; }
    // Contribution of this term (both members for a pair) at s.
    [[nodiscard]] Complex evaluate(Complex s) const;
};

struct Band {
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
};

// H(s) = sum_k r_k/(s - p_k) (+ conjugates) + d + s e.
struct RationalModel {
    std::vector<PoleTerm> terms;
    double d = 0.0;
    double e = 0.0;
    Band band;

    // Fit annotations; NaN / zero when the model was not produced by a fit.
    double phase_error_deg = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
    int relocation_iterations = 0;
    int identify_calls = 0;

    [[nodiscard]] int order() const noexcept;
    // Every pole, conjugates included, in term order.
    [[nodiscard]] std::vector<Complex> poles() const;
};

[[nodiscard]] std::string to_string(PoleKind kind);
[[nodiscard]] PoleKind pole_kind_from_string(const std::string& s);

// Throws EvaluationError when s sits on a pole.
[[nodiscard]] Complex evaluate_at(const RationalModel& model, Complex s);
[[nodiscard]] Complex evaluate(const RationalModel& model, double f_hz);
[[nodiscard]] std::vector<Complex> evaluate(const RationalModel& model, const FrequencyGrid& grid);

// Max over the grid of the wrapped phase difference, in degrees.
[[nodiscard]] double phase_error_deg(const RationalModel& model, const FrequencyResponse& response);

// Roots of the numerator over the common denominator prod (s - p_k).
[[nodiscard]] std::vector<Complex> zeros(const RationalModel& model);

// Companion-matrix roots of sum_i coeffs[i] s^i (ascending powers). Leading
// coefficients below rel_tol * max|coeff| are dropped first.
[[nodiscard]] std::vector<Complex> polynomial_roots(std::span<const double> coeffs, double rel_tol = 1e-13);

// Builds model terms from a conjugate-closed pole list and matching residues
// (residue i belongs to pole i). Pairs are collapsed onto their upper member.
[[nodiscard]] std::vector<PoleTerm> terms_from_poles(std::span<const Complex> poles, std::span<const Complex> residues);

// Model document (JSON) with poles, residues, d, e, band and order.
[[nodiscard]] std::string model_to_document(const RationalModel& model);
[[nodiscard]] RationalModel model_from_document(const std::string& text);
void save_model(const RationalModel& model, const std::string& path);
[[nodiscard]] RationalModel load_model(const std::string& path);

// CSV `re_radps,im_radps,kind`, one row per pole with both conjugates listed.
void save_pole_csv(const RationalModel& model, const std::string& path);

}  // namespace polefit
