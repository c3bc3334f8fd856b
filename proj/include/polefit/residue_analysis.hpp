#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polefit/errors.hpp"
#include "polefit/freq_response.hpp"
#include "polefit/identification.hpp"
#include "polefit/rational_model.hpp"

namespace polefit {

inline constexpr double kDefaultRhoThreshold = 0.01;

// high: rho >= 1, low: threshold <= rho < 1, overfit: rho < threshold.
enum class Observability { high, low, overfit };

[[nodiscard]] std::string to_string(Observability o);

struct RhoRecord {
    Complex pole;
    PoleKind kind = PoleKind::real;
    double rho = 0.0;
    double omega_r = 0.0;
    bool pruned = false;
    Observability verdict = Observability::low;
};

struct RhoReport {
    std::vector<RhoRecord> records;
    double threshold = kDefaultRhoThreshold;
};

// |H^k(j w_r)| / |H(j w_r) - H^k(j w_r)| for the pair term k, with
// w_r = sqrt(b^2 - a^2). +infinity when the rest of the model vanishes there.
[[nodiscard]] double rho_complex(const RationalModel& model, std::size_t k);

// Same ratio for the real term k = r/(s - a), evaluated at w_r = |a|.
[[nodiscard]] double rho_real(const RationalModel& model, std::size_t k);

// rho for any term; over-damped pairs fall back to w_r = |p|. Also returns
// the w_r used.
struct RhoValue {
    double rho;
    double omega_r;
};
[[nodiscard]] RhoValue term_rho(const RationalModel& model, std::size_t k);

[[nodiscard]] RhoReport rho_report(const RationalModel& model, double threshold = kDefaultRhoThreshold);

class EmptyModelError : public Error {
public:
    EmptyModelError(const std::string& what, RhoReport report) : Error(what), report_(std::move(report)) {}
    [[nodiscard]] const RhoReport& report() const noexcept { return report_; }

private:
    RhoReport report_;
};

struct PruneResult {
    RationalModel model;
    RhoReport report;
};

// Drops every term with rho < threshold and refits the survivors on
// `response`. With `to_fixpoint`, repeats until no further term drops.
[[nodiscard]] PruneResult prune(const RationalModel& model, const FrequencyResponse& response,
                                double threshold = kDefaultRhoThreshold, const FitOptions& options = {},
                                bool to_fixpoint = false);

struct CancellationEntry {
    Complex pole;
    std::optional<Complex> nearest_zero;
    double metric = std::numeric_limits<double>::infinity();
    bool quasi_cancelled = false;
};

// metric = |p - z_nearest| / max(|p|, 2 pi f_min); flagged below 0.01.
[[nodiscard]] std::vector<CancellationEntry> cancellation_report(const RationalModel& model);

struct MimoResult {
    std::vector<Complex> shared_poles;  // conjugate-closed
    std::vector<std::string> port_labels;
    std::vector<RationalModel> port_models;
    std::vector<RhoReport> port_rho;
    int iterations = 0;
};

// Shared-pole identification over responses on one grid; each port keeps its
// own residues and direct term.
[[nodiscard]] MimoResult mimo_identify(std::span<const FrequencyResponse> responses,
                                       std::span<const Complex> initial_poles, const FitOptions& options,
                                       double threshold = kDefaultRhoThreshold);

using PoleSelector = std::function<bool(const PoleTerm&)>;

[[nodiscard]] PoleSelector select_real_poles();
[[nodiscard]] PoleSelector select_near(Complex target, double rel_tol);

struct PortRank {
    std::size_t port = 0;
    std::string label;
    double rho = 0.0;
};

// Ports by descending rho of the selected pole(s); ties keep input order.
[[nodiscard]] std::vector<PortRank> rank_ports(const MimoResult& result, const PoleSelector& selector);

// CSV `pole_re,pole_im,kind,rho,omega_r,verdict`.
void save_rho_csv(const RhoReport& report, const std::string& path);
[[nodiscard]] std::string rho_csv(const RhoReport& report);

}  // namespace polefit
