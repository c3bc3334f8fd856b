#include "polefit/rational_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include "json.hpp"

#include "polefit/errors.hpp"

namespace polefit {

namespace {

using json = nlohmann::json;

constexpr double kSingularDistance = 1e-300;

Complex term_part(Complex residue, Complex pole, Complex s) {
    const Complex gap = s - pole;
    if (std::abs(gap) < kSingularDistance) {
        std::ostringstream msg;
        msg << "evaluation at s = " << s << " coincides with pole " << pole;
        throw EvaluationError(msg.str());
    }
    return residue / gap;
}

// Multiplies the ascending-power polynomial `poly` by (z - root) in place.
void multiply_root(std::vector<Complex>& poly, Complex root) {
    poly.push_back(0.0);
    for (std::size_t i = poly.size() - 1; i > 0; --i) {
        poly[i] = poly[i - 1] - root * poly[i];
    }
    poly[0] = -root * poly[0];
}

std::vector<Complex> poly_from_roots(std::span<const Complex> roots) {
    std::vector<Complex> poly{1.0};
    for (const Complex& r : roots) multiply_root(poly, r);
    return poly;
}

void add_scaled(std::vector<Complex>& acc, const std::vector<Complex>& p, Complex scale) {
    if (acc.size() < p.size()) acc.resize(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += scale * p[i];
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

PoleTerm PoleTerm::real(double pole, double residue) {
    return PoleTerm{PoleKind::real, Complex(pole, 0.0), Complex(residue, 0.0)};
}

PoleTerm PoleTerm::pair(Complex pole, Complex residue) {
    if (!(pole.imag() > 0.0)) {
        throw ArgumentError("complex pair must be stored with imag(pole) > 0");
    }
    return PoleTerm{PoleKind::complex_pair, pole, residue};
}

Complex PoleTerm::evaluate(Complex s) const {
    Complex v = term_part(residue, pole, s);
    if (kind == PoleKind::complex_pair) {
        v += term_part(std::conj(residue), std::conj(pole), s);
    }
    return v;
}

int RationalModel::order() const noexcept {
    int n = 0;
    for (const auto& t : terms) n += t.order();
    return n;
}

std::vector<Complex> RationalModel::poles() const {
    std::vector<Complex> out;
    for (const auto& t : terms) {
        out.push_back(t.pole);
        if (t.kind == PoleKind::complex_pair) out.push_back(std::conj(t.pole));
    }
    return out;
}

std::string to_string(PoleKind kind) {
    return kind == PoleKind::real ? "real" : "complex_pair";
}

PoleKind pole_kind_from_string(const std::string& s) {
    if (s == "real") return PoleKind::real;
    if (s == "complex_pair") return PoleKind::complex_pair;
    throw FormatError("unknown pole kind '" + s + "'");
}

Complex evaluate_at(const RationalModel& model, Complex s) {
    Complex h(model.d, 0.0);
    h += model.e * s;
    for (const auto& t : model.terms) h += t.evaluate(s);
    return h;
}

Complex evaluate(const RationalModel& model, double f_hz) {
    return evaluate_at(model, Complex(0.0, 2.0 * std::numbers::pi * f_hz));
}

std::vector<Complex> evaluate(const RationalModel& model, const FrequencyGrid& grid) {
    std::vector<Complex> out;
    out.reserve(grid.size());
    for (double f : grid.points()) out.push_back(evaluate(model, f));
    return out;
}

double phase_error_deg(const RationalModel& model, const FrequencyResponse& response) {
    const auto& f = response.grid().points();
    const auto& h = response.samples();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(h[i]) < kSingularDistance) {
            throw MetricError("phase undefined: data sample at " + fmt(f[i]) + " Hz has zero magnitude");
        }
        // arg(a conj(b)) is the wrapped difference arg(a) - arg(b) in (-pi, pi].
        const double diff = std::arg(evaluate(model, f[i]) * std::conj(h[i]));
        worst = std::max(worst, std::abs(diff));
    }
    return worst * 180.0 / std::numbers::pi;
}

std::vector<Complex> polynomial_roots(std::span<const double> coeffs, double rel_tol) {
    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) {
        throw DegenerateModelError("polynomial is identically zero");
    }
    std::size_t degree = coeffs.size() - 1;
    while (degree > 0 && std::abs(coeffs[degree]) <= rel_tol * scale) --degree;
    if (degree == 0) return {};

    const Eigen::Index n = static_cast<Eigen::Index>(degree);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        companion(i, n - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs[degree];
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) {
        throw DegenerateModelError("companion eigenvalue iteration did not converge");
    }
    std::vector<Complex> roots;
    for (Eigen::Index i = 0; i < n; ++i) roots.push_back(solver.eigenvalues()(i));
    return roots;
}

std::vector<Complex> zeros(const RationalModel& model) {
    if (model.order() < 1) {
        throw ArgumentError("zeros: model has no poles");
    }
    bool all_zero = model.d == 0.0 && model.e == 0.0;
    for (const auto& t : model.terms) all_zero = all_zero && t.residue == Complex(0.0);
    if (all_zero) {
        throw DegenerateModelError("zeros: all residues, d and e are zero");
    }

    std::vector<Complex> poles;
    std::vector<Complex> residues;
    for (const auto& t : model.terms) {
        poles.push_back(t.pole);
        residues.push_back(t.residue);
        if (t.kind == PoleKind::complex_pair) {
            poles.push_back(std::conj(t.pole));
            residues.push_back(std::conj(t.residue));
        }
    }

    // Work in z = s / w0 so the expanded coefficients stay within range.
    double log_sum = 0.0;
    int nonzero = 0;
    for (const auto& p : poles) {
        if (std::abs(p) > 0.0) {
            log_sum += std::log(std::abs(p));
            ++nonzero;
        }
    }
    const double w0 = nonzero > 0 ? std::exp(log_sum / nonzero) : 1.0;
    std::vector<Complex> scaled(poles.size());
    for (std::size_t i = 0; i < poles.size(); ++i) scaled[i] = poles[i] / w0;

    std::vector<Complex> numerator;
    for (std::size_t k = 0; k < scaled.size(); ++k) {
        std::vector<Complex> others;
        for (std::size_t j = 0; j < scaled.size(); ++j) {
            if (j != k) others.push_back(scaled[j]);
        }
        add_scaled(numerator, poly_from_roots(others), residues[k] / w0);
    }
    const auto denominator = poly_from_roots(scaled);
    add_scaled(numerator, denominator, model.d);
    if (model.e != 0.0) {
        std::vector<Complex> shifted{0.0};
        shifted.insert(shifted.end(), denominator.begin(), denominator.end());
        add_scaled(numerator, shifted, model.e * w0);
    }

    std::vector<double> real_coeffs(numerator.size());
    for (std::size_t i = 0; i < numerator.size(); ++i) real_coeffs[i] = numerator[i].real();
    auto roots = polynomial_roots(real_coeffs);
    for (auto& r : roots) r *= w0;
    return roots;
}

std::vector<PoleTerm> terms_from_poles(std::span<const Complex> poles, std::span<const Complex> residues) {
    if (poles.size() != residues.size()) {
        throw ArgumentError("terms_from_poles: pole and residue counts differ");
    }
    std::vector<PoleTerm> terms;
    for (std::size_t i = 0; i < poles.size(); ++i) {
        if (poles[i].imag() == 0.0) {
            terms.push_back(PoleTerm::real(poles[i].real(), residues[i].real()));
        } else if (poles[i].imag() > 0.0) {
            terms.push_back(PoleTerm::pair(poles[i], residues[i]));
        }
    }
    return terms;
}

std::string model_to_document(const RationalModel& model) {
    json doc;
    doc["order"] = model.order();
    doc["d"] = model.d;
    doc["e"] = model.e;
    doc["band"] = {{"f_min_hz", model.band.f_min_hz}, {"f_max_hz", model.band.f_max_hz}};
    json poles = json::array();
    json residues = json::array();
    for (const auto& t : model.terms) {
        poles.push_back({{"re", t.pole.real()}, {"im", t.pole.imag()}, {"kind", to_string(t.kind)}});
        residues.push_back({{"re", t.residue.real()}, {"im", t.residue.imag()}});
    }
    doc["poles"] = poles;
    doc["residues"] = residues;
    if (std::isfinite(model.phase_error_deg)) {
        doc["phase_error_deg"] = model.phase_error_deg;
    } else {
        doc["phase_error_deg"] = nullptr;
    }
    doc["converged"] = model.converged;
    return doc.dump(2) + "\n";
}

RationalModel model_from_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model document: ") + e.what());
    }
    try {
        RationalModel model;
        model.d = doc.at("d").get<double>();
        model.e = doc.value("e", 0.0);
        if (doc.contains("band")) {
            model.band.f_min_hz = doc["band"].at("f_min_hz").get<double>();
            model.band.f_max_hz = doc["band"].at("f_max_hz").get<double>();
        }
        const auto& poles = doc.at("poles");
        const auto& residues = doc.at("residues");
        if (poles.size() != residues.size()) {
            throw FormatError("model document: poles and residues differ in length");
        }
        for (std::size_t i = 0; i < poles.size(); ++i) {
            const Complex p(poles[i].at("re").get<double>(), poles[i].at("im").get<double>());
            const Complex r(residues[i].at("re").get<double>(), residues[i].at("im").get<double>());
            const PoleKind kind = pole_kind_from_string(poles[i].at("kind").get<std::string>());
            if (kind == PoleKind::real) {
                if (p.imag() != 0.0 || r.imag() != 0.0) {
                    throw FormatError("model document: real term " + std::to_string(i) + " has imaginary parts");
                }
                model.terms.push_back(PoleTerm::real(p.real(), r.real()));
            } else {
                if (!(p.imag() > 0.0)) {
                    throw FormatError("model document: pair term " + std::to_string(i) + " needs im > 0");
                }
                model.terms.push_back(PoleTerm::pair(p, r));
            }
        }
        if (doc.contains("order") && doc["order"].get<int>() != model.order()) {
            throw FormatError("model document: order field disagrees with the pole list");
        }
        if (doc.contains("phase_error_deg") && doc["phase_error_deg"].is_number()) {
            model.phase_error_deg = doc["phase_error_deg"].get<double>();
        }
        model.converged = doc.value("converged", true);
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model document: ") + e.what());
    }
}

void save_model(const RationalModel& model, const std::string& path) {
    std::ofstream out(path);
    if (path.empty() || !out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << model_to_document(model);
}

RationalModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_document(ss.str());
}

void save_pole_csv(const RationalModel& model, const std::string& path) {
    std::ofstream out(path);
    if (path.empty() || !out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << "re_radps,im_radps,kind\n";
    for (const auto& t : model.terms) {
        const std::string kind = to_string(t.kind);
        out << fmt(t.pole.real()) << ',' << fmt(t.pole.imag()) << ',' << kind << '\n';
        if (t.kind == PoleKind::complex_pair) {
            out << fmt(t.pole.real()) << ',' << fmt(-t.pole.imag()) << ',' << kind << '\n';
        }
    }
}

}  // namespace polefit
