#include "isocycle/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "isocycle/grid.hpp"

namespace isocycle {
namespace {

constexpr int kNodesPerPanel = 8;

CVector hopf_point(double eta, double xi1, double xi2) {
    CVector x(4);
    x << std::cos(eta) * std::cos(xi1), std::cos(eta) * std::sin(xi1),
        std::sin(eta) * std::cos(xi2), std::sin(eta) * std::sin(xi2);
    return x;
}

Complex q_target_angle(const CMatrix& a, Complex phi) {
    const Complex c = std::cos(phi), s = std::sin(phi);
    return a(0, 0) * c * c + 2.0 * a(0, 1) * c * s + a(1, 1) * s * s;
}

}  // namespace

Cycle Cycle::real_cycle(int n, int resolution, const GroupElement& g) {
    if (n != 2 && n != 4) throw InputError("Cycle: only n = 2 and n = 4 are supported");
    if (g.n() != n) throw InputError("Cycle: group element dimension mismatch");
    if (!g.is_real(1e-10)) {
        throw InputError("Cycle: the initial real cycle needs a real group element");
    }
    Cycle c;
    c.n_ = n;
    c.resolution_ = resolution;
    c.group_ = g;
    c.target_quadric_ = Quadric(g.symmetrized());
    c.analytic_real_ = true;

    if (n == 2) {
        if (resolution < 16) throw InputError("Cycle: n = 2 needs at least 16 panels");
        c.grid2_.panels = resolution;
        const std::size_t v = static_cast<std::size_t>(resolution) * kNodesPerPanel;
        c.grid2_.phi.resize(v);
        c.positions_.resize(2, v);
        c.reference_.resize(2, v);
        c.weights_.resize(v);
        std::vector<double> gl_nodes, gl_weights;
        gauss_legendre(kNodesPerPanel, gl_nodes, gl_weights);
        const double h = kPi / resolution;
        for (int p = 0; p < resolution; ++p) {
            for (int q = 0; q < kNodesPerPanel; ++q) {
                const std::size_t idx = static_cast<std::size_t>(p) * kNodesPerPanel + q;
                const double phi = (p + 0.5 * (gl_nodes[q] + 1.0)) * h;
                c.grid2_.phi[idx] = phi;
                c.weights_(idx) = 0.5 * h * gl_weights[q];
            }
        }
    } else {
        if (resolution < 8) throw InputError("Cycle: n = 4 needs resolution >= 8");
        const int n_eta = resolution;
        const int n_xi = 2 * resolution;
        c.grid4_.n_eta = n_eta;
        c.grid4_.n_xi = n_xi;
        std::vector<double> gl_nodes, gl_weights;
        gauss_legendre(n_eta, gl_nodes, gl_weights);
        c.grid4_.eta_nodes.resize(n_eta);
        const std::size_t v = static_cast<std::size_t>(n_eta) * n_xi * n_xi;
        c.positions_.resize(4, v);
        c.reference_.resize(4, v);
        c.weights_.resize(v);
        const double h_xi = 2.0 * kPi / n_xi;
        for (int i = 0; i < n_eta; ++i) {
            c.grid4_.eta_nodes[i] = 0.25 * kPi * (gl_nodes[i] + 1.0);
        }
        for (int i = 0; i < n_eta; ++i)
            for (int j = 0; j < n_xi; ++j)
                for (int k = 0; k < n_xi; ++k) {
                    const std::size_t idx =
                        (static_cast<std::size_t>(i) * n_xi + j) * n_xi + k;
                    // Half weight: the full S^3 grid double-covers RP^3.
                    c.weights_(idx) = 0.25 * kPi * gl_weights[i] * h_xi * h_xi * 0.5;
                }
    }
    c.rebuild_real_positions();
    c.branches_.resize(c.vertex_count());
    for (std::size_t i = 0; i < c.vertex_count(); ++i) {
        c.branches_[i] = principal_branch(g, c.positions_.col(i));
    }
    return c;
}

Cycle Cycle::real_cycle(int n, int resolution) {
    return real_cycle(n, resolution, GroupElement::identity(n));
}

Cycle make_real_cycle(int n, int resolution) { return Cycle::real_cycle(n, resolution); }

void Cycle::rebuild_real_positions() {
    if (n_ == 2) {
        for (std::size_t i = 0; i < grid2_.phi.size(); ++i) {
            const double phi = grid2_.phi[i];
            reference_(0, i) = std::cos(phi);
            reference_(1, i) = std::sin(phi);
        }
    } else {
        const int n_xi = grid4_.n_xi;
        const double h_xi = 2.0 * kPi / n_xi;
        for (int i = 0; i < grid4_.n_eta; ++i)
            for (int j = 0; j < n_xi; ++j)
                for (int k = 0; k < n_xi; ++k) {
                    const std::size_t idx =
                        (static_cast<std::size_t>(i) * n_xi + j) * n_xi + k;
                    reference_.col(idx) =
                        hopf_point(grid4_.eta_nodes[i], j * h_xi, k * h_xi).real();
                }
    }
    positions_ = reference_.cast<Complex>();
}

void Cycle::set_group_element(const GroupElement& g) {
    if (g.n() != n_) throw InputError("Cycle::set_group_element: dimension mismatch");
    group_ = g;
    target_quadric_ = Quadric(g.symmetrized());
}

std::vector<CMatrix> Cycle::frames() const {
    std::vector<CMatrix> result(vertex_count(), CMatrix(n_, n_ - 1));
    if (n_ == 2) {
        for (int p = 0; p < grid2_.panels; ++p) {
            std::vector<double> nodes(kNodesPerPanel);
            for (int q = 0; q < kNodesPerPanel; ++q) {
                nodes[q] = grid2_.phi[static_cast<std::size_t>(p) * kNodesPerPanel + q];
            }
            const RMatrix d = differentiation_matrix(nodes);
            for (int q = 0; q < kNodesPerPanel; ++q) {
                CVector deriv = CVector::Zero(2);
                for (int r = 0; r < kNodesPerPanel; ++r) {
                    deriv += d(q, r) *
                             positions_.col(static_cast<std::size_t>(p) * kNodesPerPanel + r);
                }
                result[static_cast<std::size_t>(p) * kNodesPerPanel + q].col(0) = deriv;
            }
        }
    } else {
        const int ne = grid4_.n_eta;
        const int nx = grid4_.n_xi;
        const RMatrix d_eta = differentiation_matrix(grid4_.eta_nodes);
        const RMatrix d_xi = periodic_differentiation_matrix(nx, 2.0 * kPi / nx);
        auto at = [&](int i, int j, int k) {
            return (static_cast<std::size_t>(i) * nx + j) * nx + k;
        };
        for (int i = 0; i < ne; ++i)
            for (int j = 0; j < nx; ++j)
                for (int k = 0; k < nx; ++k) {
                    CVector de = CVector::Zero(4), d1 = CVector::Zero(4),
                            d2 = CVector::Zero(4);
                    for (int r = 0; r < ne; ++r) de += d_eta(i, r) * positions_.col(at(r, j, k));
                    for (int r = 0; r < nx; ++r) d1 += d_xi(j, r) * positions_.col(at(i, r, k));
                    for (int r = 0; r < nx; ++r) d2 += d_xi(k, r) * positions_.col(at(i, j, r));
                    CMatrix& f = result[at(i, j, k)];
                    f.col(0) = de;
                    f.col(1) = d1;
                    f.col(2) = d2;
                }
    }
    return result;
}

double Cycle::clearance_at(std::size_t idx) const {
    const CVector x = positions_.col(idx);
    const double nx2 = x.squaredNorm();
    const double source = std::abs((x.transpose() * x)(0, 0)) / nx2;
    const double target = std::abs(bilinear(target_quadric_.matrix(), x)) /
                          (nx2 * target_quadric_.spectral_norm());
    return std::min(source, target);
}

double Cycle::min_clearance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertex_count(); ++i) best = std::min(best, clearance_at(i));
    return best;
}

std::size_t Cycle::antipode(std::size_t idx) const {
    if (n_ == 2) return idx;  // half-circle storage: identified away
    const int nx = grid4_.n_xi;
    const int k = static_cast<int>(idx) % nx;
    const int j = (static_cast<int>(idx) / nx) % nx;
    const int i = static_cast<int>(idx) / (nx * nx);
    const int jp = (j + nx / 2) % nx;
    const int kp = (k + nx / 2) % nx;
    return (static_cast<std::size_t>(i) * nx + jp) * nx + kp;
}

void Cycle::symmetrize() {
    if (n_ == 2) return;
    const int nx = grid4_.n_xi;
    for (std::size_t idx = 0; idx < vertex_count(); ++idx) {
        const int j = (static_cast<int>(idx) / nx) % nx;
        if (j >= nx / 2) continue;  // canonical half: xi1 in [0, pi)
        const std::size_t partner = antipode(idx);
        positions_.col(partner) = -positions_.col(idx);
        branches_[partner] = branches_[idx];
    }
}

Complex Cycle::integrate_plain(const Density& density) const {
    const std::vector<CMatrix> f = frames();
    Complex sum = 0.0;
    for (std::size_t i = 0; i < vertex_count(); ++i) {
        Complex v;
        try {
            v = density(positions_.col(i), f[i], branches_[i]);
        } catch (const QuadratureError& e) {
            throw QuadratureError(std::string(e.what()) + " at vertex " + std::to_string(i));
        }
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw QuadratureError("integrate: non-finite density at vertex " +
                                  std::to_string(i));
        }
        sum += weights_(i) * v;
    }
    return sum;
}

IntegrationResult Cycle::integrate(const Density& density) const {
    if (n_ == 2 && !analytic_real_) {
        const Complex coarse = integrate_polyline(density, 8);
        const Complex fine_value = integrate_polyline(density, 16);
        return {fine_value, std::abs(fine_value - coarse)};
    }
    const Complex coarse = integrate_plain(density);
    const Cycle fine = refine();
    const Complex fine_value = fine.integrate_plain(density);
    return {coarse, std::abs(fine_value - coarse)};
}

/// Quadrature for a deformed n = 2 cycle: the stored vertices are a closed
/// polyline of complex angles phi (z = (cos phi, sin phi)); integrate each
/// straight phi-segment with Gauss-Legendre, carrying the branch of
/// log Q(. g) by sequential continuation from the anchor vertex. This stays
/// exact for an arbitrarily reparametrized polyline, where panel quadrature
/// in the reference angle would need smoothness the deformation cannot
/// guarantee.
Complex Cycle::integrate_polyline(const Density& density, int order) const {
    const Complex kI(0.0, 1.0);
    const std::size_t v = vertex_count();
    std::vector<Complex> tau(v);
    for (std::size_t k = 0; k < v; ++k) {
        Complex t = -kI * std::log(Complex(positions_(0, k)) + kI * Complex(positions_(1, k)));
        const double want = k == 0 ? grid2_.phi[0] : tau[k - 1].real();
        t += 2.0 * kPi * std::round((want - t.real()) / (2.0 * kPi));
        CVector z(2);
        z << std::cos(t), std::sin(t);
        if ((z - CVector(positions_.col(k))).norm() > 1e-8) {
            throw QuadratureError("integrate: deformed n = 2 cycle is not angular");
        }
        tau[k] = t;
    }
    std::vector<double> gl_nodes, gl_weights;
    gauss_legendre(order, gl_nodes, gl_weights);
    const CMatrix a = target_quadric_.matrix();
    Complex prev_log = branches_[0].logQ_target;
    Complex total = 0.0;
    for (std::size_t k = 0; k < v; ++k) {
        const Complex from = tau[k];
        const Complex to = k + 1 < v ? tau[k + 1] : tau[0] + kPi;
        const Complex half = 0.5 * (to - from);
        const Complex mid = 0.5 * (to + from);
        for (int q = 0; q < order; ++q) {
            const Complex phi = mid + half * gl_nodes[q];
            const auto [lq, jump] = continue_log(prev_log, q_target_angle(a, phi));
            if (jump >= 0.45 * kPi) {
                throw QuadratureError(
                    "integrate: branch tracking ambiguous along the deformed cycle");
            }
            prev_log = lq;
            CVector z(2), dz(2);
            z << std::cos(phi), std::sin(phi);
            dz << -std::sin(phi), std::cos(phi);
            CMatrix frame(2, 1);
            frame.col(0) = dz;
            const Complex qs = (z.transpose() * z)(0, 0);
            const BranchState b{Complex(std::log(std::abs(qs)), 0.0), lq};
            const Complex val = density(z, frame, b);
            if (!std::isfinite(val.real()) || !std::isfinite(val.imag())) {
                throw QuadratureError("integrate: non-finite density on the deformed cycle");
            }
            total += gl_weights[q] * half * val;
        }
    }
    // Closure: the continued branch must return to the anchor sheet after one
    // projective period.
    const auto [closure, closure_jump] =
        continue_log(prev_log, q_target_angle(a, tau[0] + kPi));
    if (closure_jump >= 0.45 * kPi ||
        std::abs(closure.imag() - branches_[0].logQ_target.imag()) > kPi) {
        throw QuadratureError(
            "integrate: branch of the integrand does not close around the cycle");
    }
    return total;
}

Cycle Cycle::refine(double clearance_floor) const {
    Cycle fine = real_cycle(n_, 2 * resolution_, GroupElement::identity(n_));
    fine.group_ = group_;
    fine.target_quadric_ = target_quadric_;
    fine.analytic_real_ = analytic_real_;

    // Interpolated branch logs, snapped to the actual quadric values.
    std::vector<Complex> log_s(fine.vertex_count()), log_t(fine.vertex_count());

    if (n_ == 2) {
        const double h = kPi / grid2_.panels;
        std::vector<double> panel_nodes(kNodesPerPanel);
        for (std::size_t idx = 0; idx < fine.vertex_count(); ++idx) {
            const double phi = fine.grid2_.phi[idx];
            int p = std::min(grid2_.panels - 1, static_cast<int>(phi / h));
            for (int q = 0; q < kNodesPerPanel; ++q) {
                panel_nodes[q] = grid2_.phi[static_cast<std::size_t>(p) * kNodesPerPanel + q];
            }
            const std::vector<double> bw = barycentric_weights(panel_nodes);
            const RVector row = barycentric_row(panel_nodes, bw, phi);
            CVector pos = CVector::Zero(2);
            Complex ls = 0.0, lt = 0.0;
            for (int q = 0; q < kNodesPerPanel; ++q) {
                const std::size_t src = static_cast<std::size_t>(p) * kNodesPerPanel + q;
                pos += row(q) * positions_.col(src);
                ls += row(q) * branches_[src].logQ_source;
                lt += row(q) * branches_[src].logQ_target;
            }
            if (!analytic_real_) fine.positions_.col(idx) = pos;
            log_s[idx] = ls;
            log_t[idx] = lt;
        }
    } else {
        const int ne = grid4_.n_eta, nx = grid4_.n_xi;
        const int fe = fine.grid4_.n_eta, fx = fine.grid4_.n_xi;
        const std::vector<double> bw = barycentric_weights(grid4_.eta_nodes);
        RMatrix i_eta(fe, ne);
        for (int a = 0; a < fe; ++a) {
            i_eta.row(a) =
                barycentric_row(grid4_.eta_nodes, bw, fine.grid4_.eta_nodes[a]).transpose();
        }
        std::vector<double> new_xi(fx);
        for (int b = 0; b < fx; ++b) new_xi[b] = 2.0 * kPi * b / fx;
        const RMatrix i_xi = trig_interpolation_matrix(nx, 2.0 * kPi, new_xi);

        // Tensor interpolation, one axis at a time, for each scalar field.
        auto interp_field = [&](const std::vector<Complex>& in) {
            std::vector<Complex> t1(static_cast<std::size_t>(fe) * nx * nx, 0.0);
            for (int a = 0; a < fe; ++a)
                for (int j = 0; j < nx; ++j)
                    for (int k = 0; k < nx; ++k) {
                        Complex s = 0.0;
                        for (int i = 0; i < ne; ++i)
                            s += i_eta(a, i) * in[(static_cast<std::size_t>(i) * nx + j) * nx + k];
                        t1[(static_cast<std::size_t>(a) * nx + j) * nx + k] = s;
                    }
            std::vector<Complex> t2(static_cast<std::size_t>(fe) * fx * nx, 0.0);
            for (int a = 0; a < fe; ++a)
                for (int b = 0; b < fx; ++b)
                    for (int k = 0; k < nx; ++k) {
                        Complex s = 0.0;
                        for (int j = 0; j < nx; ++j)
                            s += i_xi(b, j) * t1[(static_cast<std::size_t>(a) * nx + j) * nx + k];
                        t2[(static_cast<std::size_t>(a) * fx + b) * nx + k] = s;
                    }
            std::vector<Complex> out(static_cast<std::size_t>(fe) * fx * fx, 0.0);
            for (int a = 0; a < fe; ++a)
                for (int b = 0; b < fx; ++b)
                    for (int c = 0; c < fx; ++c) {
                        Complex s = 0.0;
                        for (int k = 0; k < nx; ++k)
                            s += i_xi(c, k) * t2[(static_cast<std::size_t>(a) * fx + b) * nx + k];
                        out[(static_cast<std::size_t>(a) * fx + b) * fx + c] = s;
                    }
            return out;
        };

        std::vector<Complex> field(vertex_count());
        for (int comp = 0; comp < 4; ++comp) {
            for (std::size_t i = 0; i < vertex_count(); ++i) field[i] = positions_(comp, i);
            const std::vector<Complex> out = interp_field(field);
            if (!analytic_real_) {
                for (std::size_t i = 0; i < fine.vertex_count(); ++i)
                    fine.positions_(comp, i) = out[i];
            }
        }
        for (std::size_t i = 0; i < vertex_count(); ++i) field[i] = branches_[i].logQ_source;
        log_s = interp_field(field);
        for (std::size_t i = 0; i < vertex_count(); ++i) field[i] = branches_[i].logQ_target;
        log_t = interp_field(field);
    }

    const CMatrix target = target_quadric_.matrix();
    for (std::size_t i = 0; i < fine.vertex_count(); ++i) {
        const CVector x = fine.positions_.col(i);
        const Complex qs = (x.transpose() * x)(0, 0);
        const Complex qt = bilinear(target, x);
        auto [ls, js] = continue_log(log_s[i], qs);
        auto [lt, jt] = continue_log(log_t[i], qt);
        if ((js >= 0.4 * kPi || jt >= 0.4 * kPi) && i > 0) {
            // Where interpolation of the log is unreliable (sharp phase
            // variation across a panel), continue from the previous fine
            // vertex instead; adjacent fine vertices are grid neighbours.
            const auto [ls2, js2] = continue_log(fine.branches_[i - 1].logQ_source, qs);
            const auto [lt2, jt2] = continue_log(fine.branches_[i - 1].logQ_target, qt);
            if (std::max(js2, jt2) < std::max(js, jt)) {
                ls = ls2;
                js = js2;
                lt = lt2;
                jt = jt2;
            }
        }
        if (js >= 0.5 * kPi || jt >= 0.5 * kPi) {
            throw QuadratureError("refine: branch interpolation ambiguous at vertex " +
                                  std::to_string(i));
        }
        fine.branches_[i] = {ls, lt};
        if (fine.clearance_at(i) < clearance_floor) {
            throw IsotopyError("refine: interpolated vertex " + std::to_string(i) +
                               " violates the clearance floor");
        }
    }
    return fine;
}

void Cycle::smooth_field(CMatrix& field, int passes) const {
    if (passes <= 0) return;
    CMatrix next = field;
    for (int pass = 0; pass < passes; ++pass) {
        if (n_ == 2) {
            const std::size_t v = vertex_count();
            for (std::size_t i = 0; i < v; ++i) {
                // Antipodal gluing: across the phi = 0 / pi seam the field
                // continues with a sign flip.
                const CVector prev =
                    (i == 0) ? (-field.col(v - 1)).eval() : field.col(i - 1).eval();
                const CVector nxt =
                    (i + 1 == v) ? (-field.col(0)).eval() : field.col(i + 1).eval();
                next.col(i) = 0.5 * field.col(i) + 0.25 * (prev + nxt);
            }
        } else {
            const int ne = grid4_.n_eta, nx = grid4_.n_xi;
            auto at = [&](int i, int j, int k) {
                return (static_cast<std::size_t>(i) * nx + j) * nx + k;
            };
            // eta (clamped), then xi1, xi2 (periodic)
            for (int i = 0; i < ne; ++i)
                for (int j = 0; j < nx; ++j)
                    for (int k = 0; k < nx; ++k) {
                        const CVector lo = field.col(at(std::max(i - 1, 0), j, k));
                        const CVector hi = field.col(at(std::min(i + 1, ne - 1), j, k));
                        next.col(at(i, j, k)) = 0.5 * field.col(at(i, j, k)) + 0.25 * (lo + hi);
                    }
            field = next;
            for (int i = 0; i < ne; ++i)
                for (int j = 0; j < nx; ++j)
                    for (int k = 0; k < nx; ++k) {
                        const CVector lo = field.col(at(i, (j + nx - 1) % nx, k));
                        const CVector hi = field.col(at(i, (j + 1) % nx, k));
                        next.col(at(i, j, k)) = 0.5 * field.col(at(i, j, k)) + 0.25 * (lo + hi);
                    }
            field = next;
            for (int i = 0; i < ne; ++i)
                for (int j = 0; j < nx; ++j)
                    for (int k = 0; k < nx; ++k) {
                        const CVector lo = field.col(at(i, j, (k + nx - 1) % nx));
                        const CVector hi = field.col(at(i, j, (k + 1) % nx));
                        next.col(at(i, j, k)) = 0.5 * field.col(at(i, j, k)) + 0.25 * (lo + hi);
                    }
        }
        field = next;
    }
}

void Cycle::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("Cycle::write_csv: cannot open " + path);
    out << "index";
    if (n_ == 2) {
        out << ",phi";
    } else {
        out << ",eta,xi1,xi2";
    }
    for (int c = 0; c < n_; ++c) out << ",re" << c << ",im" << c;
    out << ",clearance_source,clearance_target,im_logQ_source,im_logQ_target\n";
    out.precision(17);
    const int nx = grid4_.n_xi;
    for (std::size_t i = 0; i < vertex_count(); ++i) {
        out << i;
        if (n_ == 2) {
            out << "," << grid2_.phi[i];
        } else {
            const int k = static_cast<int>(i) % nx;
            const int j = (static_cast<int>(i) / nx) % nx;
            const int e = static_cast<int>(i) / (nx * nx);
            out << "," << grid4_.eta_nodes[e] << "," << 2.0 * kPi * j / nx << ","
                << 2.0 * kPi * k / nx;
        }
        for (int c = 0; c < n_; ++c) {
            out << "," << positions_(c, i).real() << "," << positions_(c, i).imag();
        }
        const CVector x = positions_.col(i);
        const double nx2 = x.squaredNorm();
        out << "," << std::abs((x.transpose() * x)(0, 0)) / nx2 << ","
            << std::abs(bilinear(target_quadric_.matrix(), x)) /
                   (nx2 * target_quadric_.spectral_norm())
            << "," << branches_[i].logQ_source.imag() << ","
            << branches_[i].logQ_target.imag() << "\n";
    }
}

Cycle::Density volume_density() {
    return [](const CVector& x, const CMatrix& frame, const BranchState& b) {
        return invariant_form(x, frame, b.logQ_source);
    };
}

Cycle::Density matrix_element_density(const GroupElement& g, Complex alpha,
                                      const KFiniteFunction& f1,
                                      const KFiniteFunction& f2) {
    return [g, alpha, f1, f2](const CVector& x, const CMatrix& frame,
                              const BranchState& b) {
        return integrand_density(g, alpha, f1, f2, x, frame, b);
    };
}

}  // namespace isocycle
