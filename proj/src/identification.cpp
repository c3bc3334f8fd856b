#include "polefit/identification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "polefit/errors.hpp"

namespace polefit {

namespace {

constexpr double kMaxCondition = 1e14;
constexpr double kDuplicateRelTol = 1e-12;
constexpr double kConjugateRelTol = 1e-12;
constexpr double kSigmaZero = 1e-10;
constexpr double kSigmaZeroFraction = 0.10;

// Column c of the design matrix either belongs to a pole (index into the
// canonical pole list) or to d / e (-1).
struct ColumnTag {
    int pole = -1;
};

std::string describe_poles(std::span<const Complex> canonical, const std::vector<int>& indices) {
    std::ostringstream out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) out << ", ";
        const Complex p = canonical[static_cast<std::size_t>(indices[i])];
        out << p.real();
        if (p.imag() != 0.0) out << (p.imag() > 0 ? " ± j" : " - j") << std::abs(p.imag());
    }
    return out.str();
}

// Basis values at s for canonical pole q: one value for a real pole, two for a
// pair (the Re r and Im r directions of r/(s-q) + r*/(s-q*)).
void basis_values(Complex q, Complex s, Complex out[2]) {
    if (q.imag() == 0.0) {
        out[0] = 1.0 / (s - q);
        return;
    }
    const Complex a = 1.0 / (s - q);
    const Complex b = 1.0 / (s - std::conj(q));
    out[0] = a + b;
    out[1] = Complex(0.0, 1.0) * (a - b);
}

int basis_width(Complex q) { return q.imag() == 0.0 ? 1 : 2; }

int basis_count(std::span<const Complex> canonical) {
    int n = 0;
    for (const auto& q : canonical) n += basis_width(q);
    return n;
}

std::vector<double> row_weights(const FrequencyResponse& r, WeightRule rule) {
    std::vector<double> w(r.size(), 1.0);
    if (rule == WeightRule::inverse_magnitude) {
        for (std::size_t m = 0; m < r.size(); ++m) {
            const double mag = std::abs(r.samples()[m]);
            if (!(mag > 0.0)) {
                throw ArgumentError("inverse-magnitude weighting with a zero data sample");
            }
            w[m] = 1.0 / mag;
        }
    }
    return w;
}

void check_duplicates(std::span<const Complex> canonical) {
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        for (std::size_t j = i + 1; j < canonical.size(); ++j) {
            const double scale = std::max(std::abs(canonical[i]), std::abs(canonical[j]));
            if (std::abs(canonical[i] - canonical[j]) <= kDuplicateRelTol * scale) {
                throw IllConditionedError("ill-conditioned basis: duplicated pole " +
                                          describe_poles(canonical, {static_cast<int>(i)}));
            }
        }
    }
}

// Column-equilibrated least squares through a pivoted QR. The condition
// estimate comes from the singular values of the triangular factor.
Eigen::VectorXd solve_least_squares(Eigen::MatrixXd a, const Eigen::VectorXd& b,
                                    const std::vector<ColumnTag>& tags, std::span<const Complex> canonical) {
    const Eigen::Index cols = a.cols();
    if (a.rows() < cols) {
        throw IllConditionedError("ill-conditioned fit: " + std::to_string(cols) + " unknowns but only " +
                                  std::to_string(a.rows()) + " real equations");
    }
    Eigen::VectorXd scale(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        const double n = a.col(c).norm();
        scale(c) = n > 0.0 ? 1.0 / n : 1.0;
        a.col(c) *= scale(c);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(cols - 1);
    if (!(smin > 0.0) || smax / smin > kMaxCondition) {
        // Columns dominating the weakest singular direction point at the culprits.
        const Eigen::VectorXd v = qr.colsPermutation() * svd.matrixV().col(cols - 1);
        const double vmax = v.cwiseAbs().maxCoeff();
        std::vector<int> culprits;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const int pole = tags[static_cast<std::size_t>(c)].pole;
            if (pole >= 0 && std::abs(v(c)) > 0.1 * vmax &&
                std::find(culprits.begin(), culprits.end(), pole) == culprits.end()) {
                culprits.push_back(pole);
            }
        }
        std::ostringstream msg;
        msg << "ill-conditioned fit (condition estimate " << (smin > 0.0 ? smax / smin : INFINITY) << ")";
        if (!culprits.empty()) msg << " involving poles " << describe_poles(canonical, culprits);
        throw IllConditionedError(msg.str());
    }
    Eigen::VectorXd x = qr.solve(b);
    return x.cwiseProduct(scale);
}

void check_same_grid(std::span<const FrequencyResponse> responses) {
    if (responses.empty()) {
        throw ArgumentError("no responses given");
    }
    const auto& ref = responses.front().grid().points();
    for (std::size_t p = 1; p < responses.size(); ++p) {
        if (responses[p].grid().points() != ref) {
            throw ArgumentError("response " + std::to_string(p) + " is on a different frequency grid");
        }
    }
}

bool pole_less(const Complex& a, const Complex& b) {
    const bool ra = a.imag() == 0.0;
    const bool rb = b.imag() == 0.0;
    if (ra != rb) return ra;
    if (ra) return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && a.real() < b.real());
    return a.imag() < b.imag() || (a.imag() == b.imag() && a.real() < b.real());
}

}  // namespace

void FitOptions::validate() const {
    if (max_relocation_iters < 1) {
        throw ArgumentError("max_relocation_iters must be at least 1");
    }
    if (!(pole_motion_tol > 0.0)) {
        throw ArgumentError("pole_motion_tol must be positive");
    }
}

std::vector<Complex> canonical_poles(std::span<const Complex> poles) {
    std::vector<Complex> reals;
    std::vector<Complex> upper;
    std::vector<Complex> lower;
    for (const auto& p : poles) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
            throw ArgumentError("pole list contains a non-finite value");
        }
        if (p.imag() == 0.0) {
            reals.push_back(p);
        } else if (p.imag() > 0.0) {
            upper.push_back(p);
        } else {
            lower.push_back(p);
        }
    }
    if (upper.size() != lower.size()) {
        throw ArgumentError("pole list is not conjugate-closed");
    }
    std::vector<bool> used(lower.size(), false);
    for (auto& p : upper) {
        std::size_t best = lower.size();
        double best_gap = INFINITY;
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (used[j]) continue;
            const double gap = std::abs(std::conj(lower[j]) - p);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best == lower.size() || best_gap > kConjugateRelTol * std::abs(p)) {
            std::ostringstream msg;
            msg << "pole " << p << " has no conjugate partner";
            throw ArgumentError(msg.str());
        }
        used[best] = true;
        p = 0.5 * (p + std::conj(lower[best]));
    }
    std::vector<Complex> out = reals;
    out.insert(out.end(), upper.begin(), upper.end());
    std::sort(out.begin(), out.end(), pole_less);
    return out;
}

std::vector<Complex> expand_conjugates(std::span<const Complex> canonical) {
    std::vector<Complex> out;
    for (const auto& p : canonical) {
        out.push_back(p);
        if (p.imag() != 0.0) out.push_back(std::conj(p));
    }
    return out;
}

double max_relative_displacement(std::span<const Complex> before, std::span<const Complex> after) {
    if (before.size() != after.size()) {
        return INFINITY;
    }
    std::vector<bool> used(after.size(), false);
    double worst = 0.0;
    for (const auto& p : before) {
        std::size_t best = 0;
        double best_gap = INFINITY;
        for (std::size_t j = 0; j < after.size(); ++j) {
            if (used[j]) continue;
            const double gap = std::abs(after[j] - p);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        used[best] = true;
        worst = std::max(worst, best_gap / std::max(std::abs(p), 1e-300));
    }
    return worst;
}

RationalModel fit_residues(const FrequencyResponse& response, std::span<const Complex> poles,
                           const FitOptions& options) {
    options.validate();
    const auto canonical = canonical_poles(poles);
    check_duplicates(canonical);

    const auto& f = response.grid().points();
    const auto& h = response.samples();
    const auto m_count = static_cast<Eigen::Index>(f.size());
    const int n_basis = basis_count(canonical);
    const int n_cols = n_basis + (options.include_d ? 1 : 0) + (options.include_e ? 1 : 0);
    if (n_cols == 0) {
        throw ArgumentError("fit_residues: nothing to fit");
    }

    std::vector<ColumnTag> tags(static_cast<std::size_t>(n_cols));
    Eigen::MatrixXd a(2 * m_count, n_cols);
    Eigen::VectorXd b(2 * m_count);
    const auto w = row_weights(response, options.weight_rule);

    for (Eigen::Index m = 0; m < m_count; ++m) {
        const Complex s(0.0, 2.0 * std::numbers::pi * f[static_cast<std::size_t>(m)]);
        const double wm = w[static_cast<std::size_t>(m)];
        int col = 0;
        for (std::size_t k = 0; k < canonical.size(); ++k) {
            Complex phi[2];
            basis_values(canonical[k], s, phi);
            for (int j = 0; j < basis_width(canonical[k]); ++j) {
                a(2 * m, col) = wm * phi[j].real();
                a(2 * m + 1, col) = wm * phi[j].imag();
                tags[static_cast<std::size_t>(col)].pole = static_cast<int>(k);
                ++col;
            }
        }
        if (options.include_d) {
            a(2 * m, col) = wm;
            a(2 * m + 1, col) = 0.0;
            ++col;
        }
        if (options.include_e) {
            a(2 * m, col) = 0.0;
            a(2 * m + 1, col) = wm * s.imag();
            ++col;
        }
        b(2 * m) = wm * h[static_cast<std::size_t>(m)].real();
        b(2 * m + 1) = wm * h[static_cast<std::size_t>(m)].imag();
    }

    const Eigen::VectorXd x = solve_least_squares(std::move(a), b, tags, canonical);

    RationalModel model;
    int col = 0;
    for (const auto& q : canonical) {
        if (q.imag() == 0.0) {
            model.terms.push_back(PoleTerm::real(q.real(), x(col)));
            col += 1;
        } else {
            model.terms.push_back(PoleTerm::pair(q, Complex(x(col), x(col + 1))));
            col += 2;
        }
    }
    if (options.include_d) model.d = x(col++);
    if (options.include_e) model.e = x(col++);
    model.band = Band{f.front(), f.back()};
    return model;
}

RelocationStep relocation_step(std::span<const FrequencyResponse> responses, std::span<const Complex> poles,
                               const FitOptions& options) {
    options.validate();
    check_same_grid(responses);
    const auto canonical = canonical_poles(poles);
    if (canonical.empty()) {
        throw ArgumentError("relocation needs at least one starting pole");
    }
    check_duplicates(canonical);

    const auto& f = responses.front().grid().points();
    const auto m_count = static_cast<Eigen::Index>(f.size());
    const auto n_ports = static_cast<Eigen::Index>(responses.size());
    const int n_basis = basis_count(canonical);
    const int per_port = n_basis + (options.include_d ? 1 : 0) + (options.include_e ? 1 : 0);
    const Eigen::Index n_cols = n_ports * per_port + n_basis;
    const Eigen::Index sigma_col0 = n_ports * per_port;

    // Basis values are shared by every port.
    Eigen::MatrixXcd phi(m_count, n_basis);
    for (Eigen::Index m = 0; m < m_count; ++m) {
        const Complex s(0.0, 2.0 * std::numbers::pi * f[static_cast<std::size_t>(m)]);
        int col = 0;
        for (const auto& q : canonical) {
            Complex v[2];
            basis_values(q, s, v);
            for (int j = 0; j < basis_width(q); ++j) phi(m, col++) = v[j];
        }
    }

    std::vector<ColumnTag> tags(static_cast<std::size_t>(n_cols));
    for (Eigen::Index p = 0; p <= n_ports; ++p) {
        int col = 0;
        for (std::size_t k = 0; k < canonical.size(); ++k) {
            for (int j = 0; j < basis_width(canonical[k]); ++j) {
                tags[static_cast<std::size_t>(p * per_port + col)].pole = static_cast<int>(k);
                ++col;
            }
        }
    }

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m_count * n_ports, n_cols);
    Eigen::VectorXd b(2 * m_count * n_ports);
    for (Eigen::Index p = 0; p < n_ports; ++p) {
        const auto& resp = responses[static_cast<std::size_t>(p)];
        const auto w = row_weights(resp, options.weight_rule);
        for (Eigen::Index m = 0; m < m_count; ++m) {
            const Eigen::Index row = 2 * (p * m_count + m);
            const Complex h = resp.samples()[static_cast<std::size_t>(m)];
            const double wm = w[static_cast<std::size_t>(m)];
            const Eigen::Index c0 = p * per_port;
            for (int k = 0; k < n_basis; ++k) {
                a(row, c0 + k) = wm * phi(m, k).real();
                a(row + 1, c0 + k) = wm * phi(m, k).imag();
                const Complex hp = -h * phi(m, k);
                a(row, sigma_col0 + k) = wm * hp.real();
                a(row + 1, sigma_col0 + k) = wm * hp.imag();
            }
            Eigen::Index c = c0 + n_basis;
            if (options.include_d) {
                a(row, c) = wm;
                ++c;
            }
            if (options.include_e) {
                a(row + 1, c) = wm * 2.0 * std::numbers::pi * f[static_cast<std::size_t>(m)];
            }
            b(row) = wm * h.real();
            b(row + 1) = wm * h.imag();
        }
    }

    const Eigen::VectorXd x = solve_least_squares(std::move(a), b, tags, canonical);
    const Eigen::VectorXd sigma = x.tail(n_basis);

    int zero_count = 0;
    for (Eigen::Index m = 0; m < m_count; ++m) {
        const Complex value = 1.0 + (phi.row(m) * sigma.cast<Complex>())(0);
        if (std::abs(value) < kSigmaZero) ++zero_count;
    }
    if (zero_count > kSigmaZeroFraction * static_cast<double>(m_count)) {
        throw RelocationDegenerateError("relocation degenerate: sigma vanishes at " + std::to_string(zero_count) +
                                        " of " + std::to_string(m_count) + " grid points");
    }

    // Zeros of sigma: eigenvalues of A - b c~^T in the real block basis.
    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(n_basis, n_basis);
    Eigen::VectorXd input = Eigen::VectorXd::Zero(n_basis);
    std::vector<Complex> sigma_residues;
    int col = 0;
    for (const auto& q : canonical) {
        if (q.imag() == 0.0) {
            state(col, col) = q.real();
            input(col) = 1.0;
            sigma_residues.emplace_back(sigma(col), 0.0);
            col += 1;
        } else {
            state(col, col) = q.real();
            state(col, col + 1) = q.imag();
            state(col + 1, col) = -q.imag();
            state(col + 1, col + 1) = q.real();
            input(col) = 2.0;
            sigma_residues.emplace_back(sigma(col), sigma(col + 1));
            col += 2;
        }
    }
    state -= input * sigma.transpose();
    Eigen::EigenSolver<Eigen::MatrixXd> eig(state, false);
    if (eig.info() != Eigen::Success) {
        throw RelocationDegenerateError("relocation: eigenvalue iteration did not converge");
    }
    std::vector<Complex> new_poles;
    for (Eigen::Index i = 0; i < n_basis; ++i) {
        Complex p = eig.eigenvalues()(i);
        if (options.flip_unstable && p.real() > 0.0) p = Complex(-p.real(), p.imag());
        new_poles.push_back(p);
    }
    return RelocationStep{expand_conjugates(canonical_poles(new_poles)), std::move(sigma_residues)};
}

std::vector<Complex> relocate_poles(const FrequencyResponse& response, std::span<const Complex> poles,
                                    const FitOptions& options) {
    return relocation_step(std::span<const FrequencyResponse>(&response, 1), poles, options).poles;
}

SharedPoles relocate_until_converged(std::span<const FrequencyResponse> responses,
                                     std::span<const Complex> initial_poles, const FitOptions& options) {
    options.validate();
    SharedPoles out;
    out.poles = expand_conjugates(canonical_poles(initial_poles));
    for (int it = 0; it < options.max_relocation_iters; ++it) {
        auto next = relocation_step(responses, out.poles, options).poles;
        out.last_displacement = max_relative_displacement(out.poles, next);
        out.poles = std::move(next);
        out.iterations = it + 1;
        if (out.last_displacement < options.pole_motion_tol) break;
    }
    return out;
}

RationalModel identify(const FrequencyResponse& response, std::span<const Complex> initial_poles,
                       const FitOptions& options) {
    const auto relocated =
        relocate_until_converged(std::span<const FrequencyResponse>(&response, 1), initial_poles, options);
    RationalModel model = fit_residues(response, relocated.poles, options);
    model.relocation_iterations = relocated.iterations;
    model.identify_calls = 1;
    model.phase_error_deg = phase_error_deg(model, response);
    return model;
}

}  // namespace polefit
