#include "isocycle/sl2_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "isocycle/grid.hpp"

namespace isocycle {
namespace {

const Complex kI(0.0, 1.0);

CVector angle_point(Complex phi) {
    CVector z(2);
    z << std::cos(phi), std::sin(phi);
    return z;
}

/// Q(z(phi) g) as a trigonometric polynomial value.
Complex q_target(const CMatrix& a, Complex phi) {
    const Complex c = std::cos(phi), s = std::sin(phi);
    return a(0, 0) * c * c + 2.0 * a(0, 1) * c * s + a(1, 1) * s * s;
}

/// The two zeros of Q(z(phi) g) modulo pi.
std::vector<Complex> target_roots(const CMatrix& a) {
    const Complex mean = 0.5 * (a(0, 0) + a(1, 1));
    const Complex diff = 0.5 * (a(0, 0) - a(1, 1));
    const Complex cross = a(0, 1);
    // In w = exp(2 i phi):  p2 w^2 + mean w + p0 = 0.
    const Complex p2 = 0.5 * (diff - kI * cross);
    const Complex p0 = 0.5 * (diff + kI * cross);
    const double scale = std::abs(mean) + std::abs(p0) + std::abs(p2);
    std::vector<Complex> ws;
    if (std::abs(p2) < 1e-14 * scale) {
        if (std::abs(mean) > 1e-14 * scale) ws.push_back(-p0 / mean);
    } else {
        const Complex disc = std::sqrt(mean * mean - 4.0 * p2 * p0);
        ws.push_back((-mean + disc) / (2.0 * p2));
        ws.push_back((-mean - disc) / (2.0 * p2));
    }
    std::vector<Complex> roots;
    for (const Complex& w : ws) {
        if (std::abs(w) < 1e-300) continue;  // zero at Im phi = +inf
        roots.push_back(std::log(w) / (2.0 * kI));
    }
    return roots;
}

/// Distance between the two root orbits modulo pi.
double root_separation(const std::vector<Complex>& roots) {
    if (roots.size() < 2) return kPi;
    const Complex d = roots[0] - roots[1];
    const double re = std::remainder(d.real(), kPi);
    return std::min(kPi, std::abs(Complex(re, d.imag())));
}

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double point_segment_distance(Complex p, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * ab.real() + (p - a).imag() * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

/// Polyline over one projective period; node m is implicitly node 0 + pi.
struct MovingContour {
    std::vector<Complex> phi;
    std::vector<double> ref;  // relaxation anchors on the real axis

    std::size_t size() const { return phi.size(); }
    Complex at(std::size_t i) const {
        return i < phi.size() ? phi[i] : phi[0] + kPi;
    }
};

/// Representatives of all root orbits near the contour's real extent.
std::vector<Complex> representatives(const std::vector<Complex>& roots,
                                     const MovingContour& contour) {
    double lo = contour.phi[0].real(), hi = lo;
    for (const Complex& p : contour.phi) {
        lo = std::min(lo, p.real());
        hi = std::max(hi, p.real());
    }
    hi = std::max(hi, contour.phi[0].real() + kPi);
    std::vector<Complex> reps;
    for (const Complex& r : roots) {
        const int m_lo = static_cast<int>(std::floor((lo - 1.0 - r.real()) / kPi));
        const int m_hi = static_cast<int>(std::ceil((hi + 1.0 - r.real()) / kPi));
        for (int m = m_lo; m <= m_hi; ++m) reps.push_back(r + kPi * static_cast<double>(m));
    }
    return reps;
}

double min_rep_distance(const std::vector<Complex>& reps, Complex p) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& r : reps) best = std::min(best, std::abs(p - r));
    return best;
}

/// Keep adjacent node spacing within [coarse, fine] bounds relative to r_safe.
void resample(MovingContour& contour, double r_safe, std::size_t max_nodes) {
    const double gap_max = 0.4 * r_safe;
    MovingContour out;
    out.phi.reserve(contour.size());
    out.ref.reserve(contour.size());
    for (std::size_t i = 0; i < contour.size(); ++i) {
        out.phi.push_back(contour.phi[i]);
        out.ref.push_back(contour.ref[i]);
        const Complex next = contour.at(i + 1);
        const double next_ref =
            i + 1 < contour.size() ? contour.ref[i + 1] : contour.ref[0] + kPi;
        const double gap = std::abs(next - contour.phi[i]);
        if (gap > gap_max) {
            const int pieces = std::min(64, static_cast<int>(std::ceil(gap / gap_max)));
            for (int k = 1; k < pieces; ++k) {
                const double t = static_cast<double>(k) / pieces;
                out.phi.push_back(contour.phi[i] + t * (next - contour.phi[i]));
                out.ref.push_back(contour.ref[i] + t * (next_ref - contour.ref[i]));
            }
        }
    }
    if (out.size() > max_nodes) {
        throw IsotopyError("oracle_continue: contour refinement exploded; the path "
                           "runs too close to the discriminant");
    }
    // Drop piled-up nodes, keeping node 0 as the branch anchor.
    MovingContour thin;
    thin.phi.push_back(out.phi[0]);
    thin.ref.push_back(out.ref[0]);
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double gap = std::abs(out.phi[i] - thin.phi.back());
        const double gap_ahead = std::abs(out.at(i + 1) - thin.phi.back());
        if (gap < 0.05 * r_safe && gap_ahead < gap_max) continue;
        thin.phi.push_back(out.phi[i]);
        thin.ref.push_back(out.ref[i]);
    }
    contour = std::move(thin);
}

}  // namespace

Complex oracle_continue(const GroupPath& path, const KFiniteFunction& f1,
                        const KFiniteFunction& f2, Complex alpha,
                        const OracleConfig& config) {
    if (path.n() != 2) throw InputError("oracle_continue: n = 2 only");
    const GroupElement start = path.at(0.0);
    if (!start.is_real(1e-10)) {
        throw InputError("oracle_continue: the path must start in SL(2,R)");
    }
    if (f1.exponents().size() != 2 || f2.exponents().size() != 2) {
        throw InputError("oracle_continue: K-finite functions must have n = 2");
    }

    MovingContour contour;
    contour.phi.resize(config.contour_nodes);
    contour.ref.resize(config.contour_nodes);
    for (int k = 0; k < config.contour_nodes; ++k) {
        contour.ref[k] = kPi * static_cast<double>(k) / config.contour_nodes;
        contour.phi[k] = contour.ref[k];
    }

    CMatrix a = start.symmetrized();
    Complex anchor_log = std::log(q_target(a, contour.phi[0]));

    const double s_end = static_cast<double>(path.segments());
    double s = 0.0;
    double step = config.max_step;
    while (s < s_end - 1e-14) {
        double h = std::min(step, s_end - s);
        int halvings = 0;
        while (true) {
            bool ok = true;
            MovingContour trial = contour;
            const CMatrix a_new = path.at(s + h).symmetrized();
            const std::vector<Complex> roots = target_roots(a_new);
            const double sep = root_separation(roots);
            if (sep < config.min_root_separation) {
                std::ostringstream os;
                os << "oracle_continue: quadric zeros collide at s = " << s + h
                   << " (separation " << sep << "); path too close to the discriminant";
                throw DiscriminantError(os.str());
            }
            const double r_safe = std::min(0.3, 0.4 * sep);

            // Reject the substep if a root orbit moved (mod pi) by a large
            // fraction of the safety radius.
            const std::vector<Complex> old_roots = target_roots(a);
            for (const Complex& r : roots) {
                double moved = std::numeric_limits<double>::infinity();
                for (const Complex& o : old_roots) {
                    const Complex d = r - o;
                    moved = std::min(
                        moved, std::abs(Complex(std::remainder(d.real(), kPi), d.imag())));
                }
                if (moved > 0.5 * r_safe) ok = false;
            }

            const std::vector<Complex> reps =
                ok ? representatives(roots, trial) : std::vector<Complex>{};
            if (ok) {
                // Push nodes out of the safety disks, fleeing ahead of the roots.
                for (Complex& node : trial.phi) {
                    for (int pass = 0; pass < 8 && ok; ++pass) {
                        double best = std::numeric_limits<double>::infinity();
                        Complex nearest = 0.0;
                        for (const Complex& r : reps) {
                            const double d = std::abs(node - r);
                            if (d < best) {
                                best = d;
                                nearest = r;
                            }
                        }
                        if (best >= r_safe) break;
                        if (best < 1e-3 * r_safe) {
                            ok = false;
                            break;
                        }
                        node = nearest + (node - nearest) * (r_safe / best);
                    }
                    if (!ok) break;
                }
            }

            // Hard guarantee: every contour segment stays clear of every root.
            if (ok) {
                for (std::size_t i = 0; i < trial.size() && ok; ++i) {
                    const Complex p0 = trial.phi[i], p1 = trial.at(i + 1);
                    for (const Complex& r : reps) {
                        if (point_segment_distance(r, p0, p1) < 0.5 * r_safe) {
                            ok = false;
                            break;
                        }
                    }
                }
            }

            Complex trial_log = anchor_log;
            if (ok) {
                const auto [l, jump] = continue_log(anchor_log, q_target(a_new, trial.phi[0]));
                trial_log = l;
                ok = jump < 0.5 * kPi;
            }

            if (ok) {
                // Relax toward the reference line wherever the roots are far;
                // nodes trapped behind a root hover at its safety shell.
                for (std::size_t i = 0; i < trial.size(); ++i) {
                    const double d = min_rep_distance(reps, trial.phi[i]);
                    if (d <= 2.0 * r_safe) continue;
                    const double w = 0.2 * smoothstep01((d - 2.0 * r_safe) / r_safe);
                    Complex pull = Complex(trial.ref[i], 0.0) - trial.phi[i];
                    const double cap = 0.3 * (d - r_safe);
                    if (std::abs(pull) * w > cap) pull *= cap / (std::abs(pull) * w);
                    trial.phi[i] += w * pull;
                }
                resample(trial, r_safe, 200000);
                contour = std::move(trial);
                anchor_log = trial_log;
                a = a_new;
                break;
            }
            ++halvings;
            if (halvings > config.max_halvings) {
                throw DiscriminantError(
                    "oracle_continue: contour deformation failed; path too close to "
                    "the discriminant");
            }
            h *= 0.5;
        }
        if (s + h == s) {
            throw DiscriminantError("oracle_continue: substep underflow");
        }
        s += h;
        step = std::min(config.max_step, h * 2.0);
    }

    // Quadrature along the final contour with sequential branch propagation.
    std::vector<double> gl_nodes, gl_weights;
    gauss_legendre(config.gauss_order, gl_nodes, gl_weights);
    const GroupElement g_end = path.at(s_end);
    Complex prev_log = anchor_log;
    Complex total = 0.0;
    for (std::size_t k = 0; k < contour.size(); ++k) {
        const Complex from = contour.phi[k];
        const Complex to = contour.at(k + 1);
        const Complex half = 0.5 * (to - from);
        const Complex mid = 0.5 * (to + from);
        for (int q = 0; q < config.gauss_order; ++q) {
            const Complex phi = mid + half * gl_nodes[q];
            const auto [lq, jump] = continue_log(prev_log, q_target(a, phi));
            if (jump >= 0.5 * kPi) {
                throw QuadratureError(
                    "oracle_continue: branch tracking ambiguous along the contour");
            }
            prev_log = lq;
            const CVector z = angle_point(phi);
            const CVector zg = g_end.matrix().transpose() * z;
            total += gl_weights[q] * half *
                     (f1.eval(z, Complex(0.0)) * f2.eval(zg, lq) * std::exp(-alpha * lq));
        }
    }
#ifdef ISOCYCLE_DEBUG_PROGRESS
    if (const char* dump = std::getenv("ISO_ORACLE_DUMP")) {
        std::ofstream out(dump);
        out.precision(17);
        Complex pl = anchor_log;
        for (std::size_t k = 0; k < contour.size(); ++k) {
            const auto [lq, jump] = continue_log(pl, q_target(a, contour.phi[k]));
            pl = lq;
            out << contour.phi[k].real() << "," << contour.phi[k].imag() << ","
                << lq.real() << "," << lq.imag() << "\n";
        }
    }
#endif
    // Branch closure: Q(z(phi) g) is pi-periodic, so the continued log must
    // return to the anchor after one period.
    const auto [closure, closure_jump] =
        continue_log(prev_log, q_target(a, contour.phi[0] + kPi));
    if (closure_jump >= 0.5 * kPi ||
        std::abs(closure.imag() - anchor_log.imag()) > kPi) {
        throw QuadratureError(
            "oracle_continue: branch of the integrand does not close around the "
            "contour");
    }
    return total;
}

ThetaReport theta(const GroupElement& g) {
    if (g.n() != 2) throw InputError("theta: n = 2 only");
    const Complex a = g.matrix()(0, 0), b = g.matrix()(0, 1);
    const Complex c = g.matrix()(1, 0), d = g.matrix()(1, 1);
    ThetaReport report;
    report.abcd = a * b * c * d;
    const double scale = g.matrix().cwiseAbs().maxCoeff();
    report.on_abcd_divisor = std::abs(report.abcd) < 1e-12 * std::pow(scale, 4);
    if (std::abs(b * c) > 1e-14 * scale * scale) {
        report.theta_finite = true;
        report.theta = (a * d) / (b * c);
    }
    return report;
}

}  // namespace isocycle
