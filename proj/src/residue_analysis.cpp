#include "polefit/residue_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace polefit {

namespace {

constexpr double kQuasiCancellation = 0.01;

// H(s) - H^k(s), summed directly from the other terms rather than by
// subtraction so an isolated term gives an exact zero.
Complex rest_of_model(const RationalModel& model, std::size_t k, Complex s) {
    Complex h(model.d, 0.0);
    h += model.e * s;
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
        if (j != k) h += model.terms[j].evaluate(s);
    }
    return h;
}

double ratio_at(const RationalModel& model, std::size_t k, double omega_r) {
    const Complex s(0.0, omega_r);
    const double num = std::abs(model.terms[k].evaluate(s));
    const double den = std::abs(rest_of_model(model, k, s));
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

const PoleTerm& checked_term(const RationalModel& model, std::size_t k) {
    if (k >= model.terms.size()) {
        throw ArgumentError("term index " + std::to_string(k) + " out of range");
    }
    return model.terms[k];
}

Observability classify(double rho, double threshold) {
    if (rho < threshold) return Observability::overfit;
    if (rho >= 1.0) return Observability::high;
    return Observability::low;
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(Observability o) {
    switch (o) {
        case Observability::high: return "high";
        case Observability::low: return "low";
        case Observability::overfit: return "overfit";
    }
    return "low";
}

double rho_complex(const RationalModel& model, std::size_t k) {
    const auto& term = checked_term(model, k);
    if (term.kind != PoleKind::complex_pair) {
        throw ArgumentError("rho_complex: term " + std::to_string(k) + " is not a complex pair");
    }
    const double a = term.pole.real();
    const double b = term.pole.imag();
    if (!(b * b > a * a)) {
        throw DegenerateResonanceError("rho_complex: pair " + fmt(a) + " ± j" + fmt(b) +
                                       " has no resonance frequency (b^2 <= a^2)");
    }
    return ratio_at(model, k, std::sqrt(b * b - a * a));
}

double rho_real(const RationalModel& model, std::size_t k) {
    const auto& term = checked_term(model, k);
    if (term.kind != PoleKind::real) {
        throw ArgumentError("rho_real: term " + std::to_string(k) + " is not real");
    }
    if (term.pole.real() == 0.0) {
        throw PoleAtOriginError("rho_real: pole at the origin has no cut-off frequency");
    }
    return ratio_at(model, k, std::abs(term.pole.real()));
}

RhoValue term_rho(const RationalModel& model, std::size_t k) {
    const auto& term = checked_term(model, k);
    if (term.kind == PoleKind::real) {
        return {rho_real(model, k), std::abs(term.pole.real())};
    }
    const double a = term.pole.real();
    const double b = term.pole.imag();
    if (b * b > a * a) {
        return {rho_complex(model, k), std::sqrt(b * b - a * a)};
    }
    const double w = std::abs(term.pole);
    return {ratio_at(model, k, w), w};
}

RhoReport rho_report(const RationalModel& model, double threshold) {
    if (!(threshold >= 0.0)) {
        throw ArgumentError("rho threshold must be non-negative");
    }
    RhoReport report;
    report.threshold = threshold;
    for (std::size_t k = 0; k < model.terms.size(); ++k) {
        const auto value = term_rho(model, k);
        RhoRecord rec;
        rec.pole = model.terms[k].pole;
        rec.kind = model.terms[k].kind;
        rec.rho = value.rho;
        rec.omega_r = value.omega_r;
        rec.pruned = value.rho < threshold;
        rec.verdict = classify(value.rho, threshold);
        report.records.push_back(rec);
    }
    return report;
}

PruneResult prune(const RationalModel& model, const FrequencyResponse& response, double threshold,
                  const FitOptions& options, bool to_fixpoint) {
    RhoReport report = rho_report(model, threshold);
    RationalModel current = model;
    std::vector<std::size_t> live(model.terms.size());
    for (std::size_t k = 0; k < live.size(); ++k) live[k] = k;

    while (true) {
        const RhoReport pass = rho_report(current, threshold);
        std::vector<Complex> keep;
        std::vector<std::size_t> next_live;
        for (std::size_t k = 0; k < current.terms.size(); ++k) {
            report.records[live[k]] = pass.records[k];
            if (!pass.records[k].pruned) {
                keep.push_back(current.terms[k].pole);
                if (current.terms[k].kind == PoleKind::complex_pair) keep.push_back(std::conj(current.terms[k].pole));
                next_live.push_back(live[k]);
            }
        }
        if (keep.empty()) {
            throw EmptyModelError("prune removed every term (threshold " + fmt(threshold) + ")", report);
        }
        const bool removed = next_live.size() != live.size();
        if (!removed && current.terms.size() != model.terms.size()) break;

        RationalModel refit = fit_residues(response, keep, options);
        refit.converged = model.converged;
        refit.relocation_iterations = model.relocation_iterations;
        refit.identify_calls = model.identify_calls;
        refit.phase_error_deg = phase_error_deg(refit, response);
        current = std::move(refit);
        live = std::move(next_live);
        if (!to_fixpoint || !removed) break;
    }
    return PruneResult{std::move(current), std::move(report)};
}

std::vector<CancellationEntry> cancellation_report(const RationalModel& model) {
    const auto z = zeros(model);
    const double floor = 2.0 * std::numbers::pi * model.band.f_min_hz;
    std::vector<CancellationEntry> out;
    for (const auto& term : model.terms) {
        CancellationEntry entry;
        entry.pole = term.pole;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& zero : z) {
            const double gap = std::abs(term.pole - zero);
            if (gap < best) {
                best = gap;
                entry.nearest_zero = zero;
            }
        }
        if (entry.nearest_zero) {
            entry.metric = best / std::max(std::abs(term.pole), floor);
            entry.quasi_cancelled = entry.metric < kQuasiCancellation;
        }
        out.push_back(entry);
    }
    return out;
}

MimoResult mimo_identify(std::span<const FrequencyResponse> responses, std::span<const Complex> initial_poles,
                         const FitOptions& options, double threshold) {
    if (responses.size() < 2) {
        throw ArgumentError("MIMO identification needs at least 2 responses");
    }
    const auto& ref = responses.front().grid().points();
    for (std::size_t p = 1; p < responses.size(); ++p) {
        if (responses[p].grid().points() != ref) {
            throw ArgumentError("MIMO port '" + responses[p].label() + "' is on a different grid than '" +
                                responses.front().label() + "'");
        }
    }

    const auto shared = relocate_until_converged(responses, initial_poles, options);
    MimoResult result;
    result.shared_poles = shared.poles;
    result.iterations = shared.iterations;
    for (const auto& resp : responses) {
        RationalModel model = fit_residues(resp, shared.poles, options);
        model.relocation_iterations = shared.iterations;
        model.phase_error_deg = phase_error_deg(model, resp);
        result.port_rho.push_back(rho_report(model, threshold));
        result.port_models.push_back(std::move(model));
        result.port_labels.push_back(resp.label());
    }
    return result;
}

PoleSelector select_real_poles() {
    return [](const PoleTerm& t) { return t.kind == PoleKind::real; };
}

PoleSelector select_near(Complex target, double rel_tol) {
    return [target, rel_tol](const PoleTerm& t) {
        const double tol = rel_tol * std::abs(target);
        return std::abs(t.pole - target) <= tol || std::abs(std::conj(t.pole) - target) <= tol;
    };
}

std::vector<PortRank> rank_ports(const MimoResult& result, const PoleSelector& selector) {
    std::vector<PortRank> ranks;
    bool matched = false;
    for (std::size_t p = 0; p < result.port_models.size(); ++p) {
        const auto& model = result.port_models[p];
        double best = -1.0;
        for (std::size_t k = 0; k < model.terms.size(); ++k) {
            if (selector(model.terms[k])) {
                matched = true;
                best = std::max(best, result.port_rho[p].records[k].rho);
            }
        }
        ranks.push_back(PortRank{p, result.port_labels[p], best});
    }
    if (!matched) {
        throw ArgumentError("rank_ports: selector matches none of the shared poles");
    }
    std::stable_sort(ranks.begin(), ranks.end(), [](const PortRank& a, const PortRank& b) { return a.rho > b.rho; });
    return ranks;
}

std::string rho_csv(const RhoReport& report) {
    std::ostringstream out;
    out << "pole_re,pole_im,kind,rho,omega_r,verdict\n";
    for (const auto& r : report.records) {
        out << fmt(r.pole.real()) << ',' << fmt(r.pole.imag()) << ',' << to_string(r.kind) << ',' << fmt(r.rho)
            << ',' << fmt(r.omega_r) << ',' << to_string(r.verdict) << '\n';
    }
    return out.str();
}

void save_rho_csv(const RhoReport& report, const std::string& path) {
    std::ofstream out(path);
    if (path.empty() || !out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << rho_csv(report);
}

}  // namespace polefit
