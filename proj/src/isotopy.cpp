#include "isocycle/isotopy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

namespace isocycle {
namespace {

struct StepMetrics {
    double max_branch_jump = 0.0;
    double displacement = 0.0;
};

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

/// Update both tracked logs at every vertex by continuity; returns false if
/// any imaginary jump reaches pi/2.
bool update_branches(Cycle& cycle, StepMetrics& metrics) {
    const CMatrix& target = cycle.target_quadric().matrix();
    for (std::size_t i = 0; i < cycle.vertex_count(); ++i) {
        const CVector x = cycle.positions().col(i);
        const Complex qs = (x.transpose() * x)(0, 0);
        const Complex qt = bilinear(target, x);
        if (qs == Complex(0.0) || qt == Complex(0.0)) return false;
        auto [ls, js] = continue_log(cycle.branches()[i].logQ_source, qs);
        auto [lt, jt] = continue_log(cycle.branches()[i].logQ_target, qt);
        const double jump = std::max(js, jt);
        if (jump >= 0.5 * kPi) return false;
        metrics.max_branch_jump = std::max(metrics.max_branch_jump, jump);
        cycle.branches()[i] = {ls, lt};
    }
    return true;
}

/// Steepest-ascent direction of |Q_A| at z, projected off the radial line.
CVector ascent_direction(const CMatrix& a, const CVector& z) {
    const Complex q = bilinear(a, z);
    const CVector grad = 2.0 * (a * z);
    if (std::abs(q) == 0.0) return grad.conjugate();
    CVector v = grad.conjugate() * (q / std::abs(q));
    v -= (z.dot(v) / z.squaredNorm()) * z;  // drop the (projectively trivial) radial part
    return v;
}

/// Visit every mesh edge as (i, j, z_i, z_j). For n = 2 this is the chain
/// plus the antipodal seam (the point after the last vertex is -z_0, and Q is
/// even, so vertex 0 carries its branch data); for n = 4 the grid neighbours
/// in eta, xi1 and xi2 with periodic wrap.
template <typename F>
void for_each_edge(const Cycle& cycle, F&& fn) {
    if (cycle.n() == 2) {
        const std::size_t v = cycle.vertex_count();
        for (std::size_t i = 0; i + 1 < v; ++i) {
            fn(i, i + 1, cycle.positions().col(i), CVector(cycle.positions().col(i + 1)));
        }
        fn(v - 1, std::size_t{0}, cycle.positions().col(v - 1),
           CVector(-cycle.positions().col(0)));
        return;
    }
    const int ne = cycle.grid4().n_eta;
    const int nx = cycle.grid4().n_xi;
    auto at = [&](int i, int j, int k) {
        return (static_cast<std::size_t>(i) * nx + j) * nx + k;
    };
    for (int i = 0; i < ne; ++i)
        for (int j = 0; j < nx; ++j)
            for (int k = 0; k < nx; ++k) {
                const std::size_t c = at(i, j, k);
                const CVector zc = cycle.positions().col(c);
                if (i + 1 < ne) {
                    const std::size_t u = at(i + 1, j, k);
                    fn(c, u, zc, CVector(cycle.positions().col(u)));
                }
                const std::size_t u1 = at(i, (j + 1) % nx, k);
                fn(c, u1, zc, CVector(cycle.positions().col(u1)));
                const std::size_t u2 = at(i, j, (k + 1) % nx);
                fn(c, u2, zc, CVector(cycle.positions().col(u2)));
            }
}

/// Projective clearance of a single point from both divisors.
double point_clearance(const CMatrix& target, double sigma_t, const CVector& z) {
    const double nz2 = z.squaredNorm();
    const double c_s = std::abs((z.transpose() * z)(0, 0)) / nz2;
    const double c_t = std::abs(bilinear(target, z)) / (nz2 * sigma_t);
    return std::min(c_s, c_t);
}

constexpr int kEdgeSamples = 16;

/// Sample count for an edge, scaled so the sample spacing stays near a
/// sixteenth of the nominal mesh spacing even when the mesh is stretched.
int samples_for_edge(const Cycle& cycle, const CVector& zi, const CVector& zj) {
    const double nominal = cycle.n() == 2
                               ? kPi / static_cast<double>(cycle.vertex_count())
                               : 2.0 * kPi / cycle.grid4().n_xi;
    const double rel_len = 2.0 * (zj - zi).norm() / (zi.norm() + zj.norm());
    const double k = kEdgeSamples * rel_len / nominal;
    return std::clamp(static_cast<int>(std::ceil(k)), kEdgeSamples, 2048);
}

/// Minimum sampled clearance over the interiors of all mesh edges. The
/// divisor can only cross the cycle where Q vanishes on it, so keeping this
/// (together with the vertex clearance) above a floor at every substep is the
/// no-slip guarantee: the tracked branches then stay honest continuations.
double min_edge_clearance(const Cycle& cycle) {
    const CMatrix& target = cycle.target_quadric().matrix();
    const double sigma_t = cycle.target_quadric().spectral_norm();
    double best = std::numeric_limits<double>::infinity();
    for_each_edge(cycle, [&](std::size_t, std::size_t, const CVector& zi,
                             const CVector& zj) {
        const int ks = samples_for_edge(cycle, zi, zj);
        for (int m = 1; m < ks; ++m) {
            const double t = static_cast<double>(m) / ks;
            const CVector z = (1.0 - t) * zi + t * zj;
            best = std::min(best, point_clearance(target, sigma_t, z));
        }
    });
    return best;
}

/// One clearance-restoring flow pass; returns the max relative displacement.
double flow_pass(Cycle& cycle, const IsotopyConfig& cfg, bool allow_relax) {
    const std::size_t v = cycle.vertex_count();
    const CMatrix unit = CMatrix::Identity(cycle.n(), cycle.n());
    const CMatrix& target = cycle.target_quadric().matrix();
    const double sigma_t = cycle.target_quadric().spectral_norm();

    CMatrix delta = CMatrix::Zero(cycle.n(), v);
    std::vector<double> clearances(v, 0.0);
    std::vector<double> edge_limit(v, std::numeric_limits<double>::infinity());
    double moved = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
        const CVector z = cycle.positions().col(i);
        const double nz2 = z.squaredNorm();
        const double nz = std::sqrt(nz2);
        const double c_s = std::abs((z.transpose() * z)(0, 0)) / nz2;
        const double c_t = std::abs(bilinear(target, z)) / (nz2 * sigma_t);
        CVector d = CVector::Zero(cycle.n());
        bool pushed = false;
        for (int which = 0; which < 2; ++which) {
            const double c = which == 0 ? c_s : c_t;
            if (c >= cfg.delta_target) continue;
            const CVector dir = ascent_direction(which == 0 ? unit : target, z);
            const double dn = dir.norm();
            if (dn < 1e-14 * nz) continue;
            const double r = (cfg.delta_target - c) / cfg.delta_target;
            d += (cfg.flow_gain * cfg.delta_target * r * r * r * nz / dn) * dir;
            pushed = true;
        }
        if (allow_relax && !pushed) {
            const double margin = std::min(c_s, c_t);
            const double w = smoothstep01((margin - 1.2 * cfg.delta_target) /
                                          (0.8 * cfg.delta_target));
            if (w > 0.0) {
                CVector pull =
                    cfg.relax_gain * w *
                    (cycle.reference_positions().col(i).cast<Complex>() - z);
                // Never step across the clearance moat toward the divisor:
                // cap by the geometric distance to the delta_target shell.
                const double grad_t = (target * z).norm() * 2.0 / sigma_t;
                if (grad_t > 1e-14) {
                    const double moat = (margin - cfg.delta_target) * nz2 / (grad_t * nz);
                    const double pn = pull.norm();
                    if (pn > 0.3 * moat) pull *= 0.3 * moat / pn;
                }
                d += pull;
            }
        }
        delta.col(i) = d;
        clearances[i] = std::min(c_s, c_t);
    }
    // Push chords away from the divisor too: a root pressing on the interior
    // of an edge is invisible to the vertex clearances above.
    for_each_edge(cycle, [&](std::size_t i, std::size_t j, const CVector& zi,
                             const CVector& zj) {
        double worst = std::numeric_limits<double>::infinity();
        double worst_t = 0.5;
        const int ks = samples_for_edge(cycle, zi, zj);
        for (int m = 1; m < ks; ++m) {
            const double t = static_cast<double>(m) / ks;
            const CVector z = (1.0 - t) * zi + t * zj;
            const double c = point_clearance(target, sigma_t, z);
            if (c < worst) {
                worst = c;
                worst_t = t;
            }
        }
        edge_limit[i] = std::min(edge_limit[i], worst);
        edge_limit[j] = std::min(edge_limit[j], worst);
        if (worst >= cfg.delta_target) return;
        const CVector z = (1.0 - worst_t) * zi + worst_t * zj;
        const double nz = z.norm();
        const double c_s = std::abs((z.transpose() * z)(0, 0)) / (nz * nz);
        const double c_t = std::abs(bilinear(target, z)) / (nz * nz * sigma_t);
        const CVector dir = ascent_direction(c_s < c_t ? unit : target, z);
        const double dn = dir.norm();
        if (dn < 1e-14 * nz) return;
        const double r = (cfg.delta_target - worst) / cfg.delta_target;
        const CVector push = (cfg.flow_gain * cfg.delta_target * r * r * r * nz / dn) * dir;
        delta.col(i) += (1.0 - worst_t) * push;
        delta.col(j) += worst_t * push;
    });
    cycle.smooth_field(delta, cfg.smoothing_passes);
    for (std::size_t i = 0; i < v; ++i) {
        const double nz = cycle.positions().col(i).norm();
        // A point at clearance c sits about c/2 from the divisor; capping the
        // move well below the smallest clearance on the vertex and its
        // incident chords keeps the polygon from jumping across a root in a
        // single pass.
        const double cap =
            0.2 * std::min(clearances[i], edge_limit[i]) * nz;
        const double dn = delta.col(i).norm();
        if (dn > cap) delta.col(i) *= cap / dn;
        moved = std::max(moved, delta.col(i).norm() / nz);
    }
    if (moved > 0.0) {
        cycle.positions() += delta;
        cycle.symmetrize();
        cycle.mark_deformed();
    }
    return moved;
}

/// Continuous phase increment of Q_A along the straight segment z0 -> z1,
/// resolved by adaptive subdivision. Returns false if the segment cannot be
/// resolved (it passes too close to the divisor of Q_A).
bool segment_phase_increment(const CMatrix& a, const CVector& z0, const CVector& z1,
                             double& dphase) {
    for (int k = 4; k <= 1024; k *= 2) {
        double acc = 0.0;
        Complex prev = bilinear(a, z0);
        if (prev == Complex(0.0)) return false;
        bool ok = true;
        for (int m = 1; m <= k; ++m) {
            const double t = static_cast<double>(m) / k;
            const Complex q = bilinear(a, CVector((1.0 - t) * z0 + t * z1));
            if (q == Complex(0.0)) {
                ok = false;
                break;
            }
            const double d = std::arg(q / prev);
            if (std::abs(d) >= 0.45 * kPi) {
                ok = false;
                break;
            }
            acc += d;
            prev = q;
        }
        if (ok) {
            dphase = acc;
            return true;
        }
    }
    return false;
}

double frame_condition(const Cycle& cycle) {
    if (cycle.n() == 2) return 1.0;
    double worst = 1.0;
    const std::vector<CMatrix> frames = cycle.frames();
    for (const CMatrix& f : frames) {
        Eigen::JacobiSVD<CMatrix> svd(f);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, s(0) / (s(s.size() - 1)));
    }
    return worst;
}

/// The central no-slip invariant. The tracked vertex logs are continuations
/// of log Q; along every mesh edge their difference must equal the phase
/// increment of Q continued in space along the chord. Any divisor crossing of
/// the polygon (by root motion or by vertex motion) shifts the difference by
/// 2 pi, and a chord sitting on the divisor is unresolvable; both are
/// rejected.
bool edges_consistent(const Cycle& cycle) {
    const CMatrix unit = CMatrix::Identity(cycle.n(), cycle.n());
    const CMatrix& target = cycle.target_quadric().matrix();
    bool ok = true;
#ifdef ISOCYCLE_DEBUG_PROGRESS
    const bool dbg = std::getenv("ISO_EDGE_DEBUG") != nullptr;
#else
    const bool dbg = false;
#endif
    for_each_edge(cycle, [&](std::size_t i, std::size_t j, const CVector& zi,
                             const CVector& zj) {
        if (!ok && !dbg) return;
        double geo_s = 0.0;
        double geo_t = 0.0;
        if (!segment_phase_increment(unit, zi, zj, geo_s) ||
            !segment_phase_increment(target, zi, zj, geo_t)) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
            if (dbg)
                fprintf(stderr, "[edge] %zu-%zu unresolvable\n", i, j);
#endif
            ok = false;
            return;
        }
        const double trk_s = cycle.branches()[j].logQ_source.imag() -
                             cycle.branches()[i].logQ_source.imag();
        const double trk_t = cycle.branches()[j].logQ_target.imag() -
                             cycle.branches()[i].logQ_target.imag();
        if (std::abs(trk_s - geo_s) >= kPi || std::abs(trk_t - geo_t) >= kPi) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
            if (dbg)
                fprintf(stderr,
                        "[edge] %zu-%zu mismatch trk_s-geo_s=%.4f trk_t-geo_t=%.4f\n",
                        i, j, trk_s - geo_s, trk_t - geo_t);
#endif
            ok = false;
        }
    });
    return ok;
}

/// Exact branch continuation along the straight segments from the previous
/// vertex positions to the current ones. Unlike the single principal-step
/// continuation in update_branches, this resolves arbitrarily large phase
/// sweeps, which occur when a vertex close to the divisor is moved.
bool continue_branches_spatial(Cycle& cycle, const CMatrix& before,
                               StepMetrics& metrics) {
    const CMatrix unit = CMatrix::Identity(cycle.n(), cycle.n());
    const CMatrix& target = cycle.target_quadric().matrix();
    for (std::size_t i = 0; i < cycle.vertex_count(); ++i) {
        const CVector z0 = before.col(i);
        const CVector z1 = cycle.positions().col(i);
        if ((z1 - z0).norm() == 0.0) continue;
        double dps = 0.0;
        double dpt = 0.0;
        if (!segment_phase_increment(unit, z0, z1, dps)) return false;
        if (!segment_phase_increment(target, z0, z1, dpt)) return false;
        const Complex qs = (z1.transpose() * z1)(0, 0);
        const Complex qt = bilinear(target, z1);
        if (qs == Complex(0.0) || qt == Complex(0.0)) return false;
        BranchState& b = cycle.branches()[i];
        b.logQ_source =
            Complex(std::log(std::abs(qs)), b.logQ_source.imag() + dps);
        b.logQ_target =
            Complex(std::log(std::abs(qt)), b.logQ_target.imag() + dpt);
        metrics.max_branch_jump =
            std::max(metrics.max_branch_jump, std::max(std::abs(dps), std::abs(dpt)));
    }
    return true;
}

/// Pham-style predictor: move vertices close to the target divisor so their
/// Q(. g) values stay frozen while the divisor sweeps past; the divisor can
/// then never cross the cycle between substeps. Returns false if the required
/// displacement is too large for one substep.
bool predictor_pass(Cycle& cycle, const GroupElement& g_new, const IsotopyConfig& cfg) {
    const std::size_t v = cycle.vertex_count();
    const CMatrix& a_old = cycle.target_quadric().matrix();
    const CMatrix a_new = Quadric(g_new.symmetrized()).matrix();
    const CMatrix a_diff = a_new - a_old;
    CMatrix delta = CMatrix::Zero(cycle.n(), v);
    bool any = false;
    for (std::size_t i = 0; i < v; ++i) {
        const CVector z = cycle.positions().col(i);
        const double c = cycle.clearance_at(i);
        if (c >= 6.0 * cfg.delta_target) continue;
        const double w =
            1.0 - smoothstep01((c - 3.0 * cfg.delta_target) / (3.0 * cfg.delta_target));
        const Complex dq = bilinear(a_diff, z);
        const CVector grad = 2.0 * (a_new * z);
        const double g2 = grad.squaredNorm();
        if (g2 < 1e-28 * z.squaredNorm()) continue;
        CVector d = (-w * dq / g2) * grad.conjugate();
        d -= (z.dot(d) / z.squaredNorm()) * z;
        if (d.norm() > 0.25 * z.norm()) return false;  // force a smaller substep
        delta.col(i) = d;
        any = true;
    }
    if (any) {
        // Applied unsmoothed: the field is already smooth in space and any
        // averaging would break the value-freezing property right where the
        // divisor sweeps.
        cycle.positions() += delta;
        cycle.symmetrize();
        cycle.mark_deformed();
    }
    return true;
}

/// Attempt one substep to g_new. On failure the cycle is left untouched.
bool try_step(Cycle& cycle, const GroupElement& g_new, const IsotopyConfig& cfg,
              StepMetrics& metrics) {
    Cycle saved = cycle;
    const CMatrix positions_before = cycle.positions();
    if (!predictor_pass(cycle, g_new, cfg)) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso]   fail: predictor\n");
#endif
        cycle = std::move(saved);
        return false;
    }
    // Branch continuation is split: first in space along the predictor
    // displacement (old quadric), then in the path parameter at fixed
    // positions, where the predictor has frozen the nearby Q values.
    if (!continue_branches_spatial(cycle, positions_before, metrics)) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso]   fail: predictor spatial continuation\n");
#endif
        cycle = std::move(saved);
        return false;
    }
    cycle.set_group_element(g_new);
    if (!update_branches(cycle, metrics)) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso]   fail: update_branches\n");
#endif
        cycle = std::move(saved);
        return false;
    }
    const bool base_ok = cycle.min_clearance() >= cfg.delta_min &&
                         edges_consistent(cycle);
    if (!base_ok) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso]   fail: base clear=%.4g cons=%d\n",
                cycle.min_clearance(), (int)edges_consistent(cycle));
#endif
        cycle = std::move(saved);
        return false;
    }
    // The predictor state is already admissible; the corrector below only
    // improves mesh quality and is rolled back if it breaks an invariant.
    Cycle predicted = cycle;
    const StepMetrics predicted_metrics = metrics;
    double before = cycle.min_clearance();
    double total_moved = 0.0;
    bool corrector_ok = true;
    bool relax_on = true;
    bool corrector_spatial_ok = true;
    (void)corrector_spatial_ok;
    for (int iter = 0; iter < cfg.max_flow_iters; ++iter) {
        const bool settled = before >= cfg.delta_target * 0.98;
        Cycle pass_saved = cycle;
        const double moved = flow_pass(cycle, cfg, relax_on);
        if (moved > 0.0) {
            total_moved += moved;
            const bool sp = continue_branches_spatial(cycle, pass_saved.positions(), metrics);
            const bool cl = sp && cycle.min_clearance() >= cfg.delta_min;
            const bool co = cl && edges_consistent(cycle);
            const bool pass_ok = sp && cl && co;
            if (!pass_ok) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
                fprintf(stderr,
                        "[iso]   pass rollback iter=%d moved=%.2e sp=%d cl=%d co=%d\n",
                        iter, moved, (int)sp, (int)cl, (int)co);
#endif
                cycle = std::move(pass_saved);
                total_moved -= moved;
                // The relaxation pull is the usual culprit; retry with pure
                // clearance restoration before giving up.
                if (relax_on) {
                    relax_on = false;
                    continue;
                }
                break;
            }
        }
        before = cycle.min_clearance();
        if (settled && moved == 0.0) break;
        if (moved == 0.0 && before >= cfg.delta_min) break;
    }
    if (corrector_ok) {
        corrector_ok = cycle.min_clearance() >= cfg.delta_min;
    }
    if (!corrector_ok) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso]   corrector rollback: spatial_ok=%d clear=%.4g edge=%.4g\n",
                corrector_spatial_ok, cycle.min_clearance(), min_edge_clearance(cycle));
#endif
        cycle = std::move(predicted);
        metrics = predicted_metrics;
        metrics.displacement += 0.0;
        return true;
    }
    metrics.displacement += total_moved;
    return true;
}

/// Validated relaxation at a fixed group element: pulls the mesh back toward
/// its reference shape once the divisor has moved on, so the final state is
/// well resolved for quadrature. Every pass is rolled back if it breaks an
/// invariant.
void settle(Cycle& cycle, const IsotopyConfig& cfg, int iters) {
    StepMetrics metrics;
    for (int iter = 0; iter < iters; ++iter) {
        Cycle saved = cycle;
        const double moved = flow_pass(cycle, cfg, /*allow_relax=*/true);
        if (moved == 0.0) break;
        const bool ok =
            continue_branches_spatial(cycle, saved.positions(), metrics) &&
            cycle.min_clearance() >= cfg.delta_min &&
            edges_consistent(cycle);
        if (!ok) {
            cycle = std::move(saved);
            break;
        }
        if (moved < 1e-12) break;
    }
}

// ---------------------------------------------------------------------------
// n = 2 angular transport. The projective cycle for n = 2 lives on the
// cylinder of complex angles phi, via z(phi) = (cos phi, sin phi); there the
// source quadric is identically 1 and the target quadric is a trigonometric
// polynomial whose zeros are isolated points of the cylinder, known in
// closed form at every substep. Transporting the cycle reduces to moving a
// closed polyline of angles around the moving zeros: every admissibility
// condition becomes a distance check in the phi plane, the node budget is
// concentrated where the zeros press on the contour by reparametrizing the
// polyline (the quadrature differentiates positions in the reference angle,
// so a smooth reparametrization leaves the integral invariant), and the
// branch of log Q is carried by one anchor node and propagated along the
// polyline with a closure check over the projective period.

const Complex kI2(0.0, 1.0);

CVector angle_point2(Complex phi) {
    CVector z(2);
    z << std::cos(phi), std::sin(phi);
    return z;
}

Complex q_target2(const CMatrix& a, Complex phi) {
    const Complex c = std::cos(phi), s = std::sin(phi);
    return a(0, 0) * c * c + 2.0 * a(0, 1) * c * s + a(1, 1) * s * s;
}

/// The zeros of Q(z(phi) g) modulo pi.
std::vector<Complex> target_roots2(const CMatrix& a) {
    const Complex mean = 0.5 * (a(0, 0) + a(1, 1));
    const Complex diff = 0.5 * (a(0, 0) - a(1, 1));
    const Complex cross = a(0, 1);
    // In w = exp(2 i phi):  p2 w^2 + mean w + p0 = 0.
    const Complex p2 = 0.5 * (diff - kI2 * cross);
    const Complex p0 = 0.5 * (diff + kI2 * cross);
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
        roots.push_back(std::log(w) / (2.0 * kI2));
    }
    return roots;
}

double root_separation2(const std::vector<Complex>& roots) {
    if (roots.size() < 2) return kPi;
    const Complex d = roots[0] - roots[1];
    const double re = std::remainder(d.real(), kPi);
    return std::min(kPi, std::abs(Complex(re, d.imag())));
}

double point_segment_distance2(Complex p, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * ab.real() + (p - a).imag() * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

/// Representatives of all root orbits near the polyline's real extent.
std::vector<Complex> representatives2(const std::vector<Complex>& roots,
                                      const std::vector<Complex>& tau) {
    double lo = tau[0].real(), hi = lo;
    for (const Complex& p : tau) {
        lo = std::min(lo, p.real());
        hi = std::max(hi, p.real());
    }
    hi = std::max(hi, tau[0].real() + kPi);
    std::vector<Complex> reps;
    for (const Complex& r : roots) {
        const int m_lo = static_cast<int>(std::floor((lo - 1.0 - r.real()) / kPi));
        const int m_hi = static_cast<int>(std::ceil((hi + 1.0 - r.real()) / kPi));
        for (int m = m_lo; m <= m_hi; ++m) {
            reps.push_back(r + kPi * static_cast<double>(m));
        }
    }
    return reps;
}

double min_rep_distance2(const std::vector<Complex>& reps, Complex p) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& r : reps) best = std::min(best, std::abs(p - r));
    return best;
}

/// Continuous phase increment of Q(z(phi) g) along the straight segment
/// t0 -> t1 in the phi plane; false if the segment is unresolvable.
bool tau_segment_phase(const CMatrix& a, Complex t0, Complex t1, double& dphase) {
    for (int k = 4; k <= 1024; k *= 2) {
        double acc = 0.0;
        Complex prev = q_target2(a, t0);
        if (prev == Complex(0.0)) return false;
        bool ok = true;
        for (int m = 1; m <= k; ++m) {
            const double t = static_cast<double>(m) / k;
            const Complex q = q_target2(a, t0 + t * (t1 - t0));
            if (q == Complex(0.0)) {
                ok = false;
                break;
            }
            const double d = std::arg(q / prev);
            if (std::abs(d) >= 0.45 * kPi) {
                ok = false;
                break;
            }
            acc += d;
            prev = q;
        }
        if (ok) {
            dphase = acc;
            return true;
        }
    }
    return false;
}

/// Push every node out of the safety disks around the roots, fleeing ahead
/// of them; false if a node sits essentially on a root.
bool push_nodes2(std::vector<Complex>& tau, const std::vector<Complex>& reps,
                 double r_safe) {
    for (Complex& node : tau) {
        for (int pass = 0; pass < 8; ++pass) {
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
            if (best < 1e-3 * r_safe) return false;
            node = nearest + (node - nearest) * (r_safe / best);
        }
    }
    return true;
}

/// Relax toward the real reference line wherever the roots are far; nodes
/// trapped behind a root hover at its safety shell.
void relax_nodes2(std::vector<Complex>& tau, const std::vector<Complex>& reps,
                  const std::vector<double>& ref, double r_safe) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double d = min_rep_distance2(reps, tau[i]);
        if (d <= 2.0 * r_safe) continue;
        const double w = 0.2 * smoothstep01((d - 2.0 * r_safe) / r_safe);
        Complex pull = Complex(ref[i], 0.0) - tau[i];
        const double cap = 0.3 * (d - r_safe);
        if (std::abs(pull) * w > cap) pull *= cap / (std::abs(pull) * w);
        tau[i] += w * pull;
    }
}

/// Reparametrize the polyline so a root-distance monitor is equidistributed
/// as a linear function of the reference angle. Node 0 stays pinned (it is
/// the branch anchor and the seam endpoint); all other nodes slide along the
/// current polyline, concentrating the fixed node budget near the roots.
void redistribute_nodes2(std::vector<Complex>& tau, const std::vector<Complex>& reps,
                         const std::vector<double>& ref, double r_safe) {
    const std::size_t v = tau.size();
    auto at = [&](std::size_t i) { return i < v ? tau[i] : tau[0] + kPi; };
    std::vector<double> m(v + 1);
    for (std::size_t i = 0; i <= v; ++i) {
        m[i] = 1.0 / std::clamp(min_rep_distance2(reps, at(i)), 0.5 * r_safe, 1.5);
    }
    for (int pass = 0; pass < 3; ++pass) {
        std::vector<double> sm(v + 1);
        for (std::size_t i = 0; i < v; ++i) {
            sm[i] = 0.5 * m[i] + 0.25 * m[(i + v - 1) % v] + 0.25 * m[(i + 1) % v];
        }
        sm[v] = sm[0];
        m.swap(sm);
    }
    std::vector<double> cum(v + 1, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
        cum[i + 1] = cum[i] + 0.5 * (m[i] + m[i + 1]) * std::abs(at(i + 1) - at(i));
    }
    const double total = cum[v];
    if (!(total > 0.0)) return;
    std::vector<Complex> fresh = tau;
    for (std::size_t k = 1; k < v; ++k) {
        const double tk =
            std::clamp(total * (ref[k] - ref[0]) / kPi, 0.0, total);
        std::size_t seg = static_cast<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), tk) - cum.begin());
        seg = std::min(seg == 0 ? std::size_t{0} : seg - 1, v - 1);
        const double span = cum[seg + 1] - cum[seg];
        const double frac = span > 0.0 ? (tk - cum[seg]) / span : 0.0;
        fresh[k] = at(seg) + frac * (at(seg + 1) - at(seg));
    }
    tau.swap(fresh);
}

/// Hard guarantee: every polyline segment stays clear of every root.
bool segments_clear2(const std::vector<Complex>& tau, const std::vector<Complex>& reps,
                     double rmin) {
    const std::size_t v = tau.size();
    for (std::size_t i = 0; i < v; ++i) {
        const Complex p0 = tau[i];
        const Complex p1 = i + 1 < v ? tau[i + 1] : tau[0] + kPi;
        for (const Complex& r : reps) {
            if (point_segment_distance2(r, p0, p1) < rmin) return false;
        }
    }
    return true;
}

/// Write the angular state into the cycle: positions from the angles and
/// branch logs propagated along the polyline from the anchor, with a
/// winding-zero closure check over the projective period. Nothing is written
/// unless all checks pass.
bool commit_angular(Cycle& cycle, const GroupElement& g_new,
                    const std::vector<Complex>& tau, Complex anchor) {
    const CMatrix a_new = Quadric(g_new.symmetrized()).matrix();
    const std::size_t v = tau.size();
    std::vector<Complex> logs(v);
    Complex cur(std::log(std::abs(q_target2(a_new, tau[0]))), anchor.imag());
    logs[0] = cur;
    for (std::size_t k = 1; k < v; ++k) {
        double dph = 0.0;
        if (!tau_segment_phase(a_new, tau[k - 1], tau[k], dph)) return false;
        cur = Complex(std::log(std::abs(q_target2(a_new, tau[k]))), cur.imag() + dph);
        logs[k] = cur;
    }
    double dph = 0.0;
    if (!tau_segment_phase(a_new, tau[v - 1], tau[0] + kPi, dph)) return false;
    // Q is pi-periodic: the continued log must return to the anchor sheet.
    if (std::abs(cur.imag() + dph - anchor.imag()) > 1.0) return false;

    cycle.set_group_element(g_new);
    bool still_real = true;
    for (std::size_t k = 0; k < v; ++k) {
        cycle.positions().col(k) = angle_point2(tau[k]);
        const CVector z = cycle.positions().col(k);
        const Complex qs = (z.transpose() * z)(0, 0);
        cycle.branches()[k] = {Complex(std::log(std::abs(qs)), 0.0), logs[k]};
        if (std::abs(tau[k].imag()) > 1e-13 ||
            std::abs(tau[k].real() - cycle.grid2().phi[k]) > 1e-13) {
            still_real = false;
        }
    }
    if (!still_real) cycle.mark_deformed();
    return true;
}

void transport_interval_n2(Cycle& cycle,
                           const std::function<GroupElement(double)>& g_of,
                           double s0, double s1, const IsotopyConfig& cfg,
                           Trace& trace) {
    const std::size_t v = cycle.vertex_count();
    const std::vector<double>& ref = cycle.grid2().phi;

    // Recover the node angles from the stored positions.
    std::vector<Complex> tau(v);
    for (std::size_t k = 0; k < v; ++k) {
        const Complex z0 = cycle.positions()(0, k);
        const Complex z1 = cycle.positions()(1, k);
        Complex t = -kI2 * std::log(z0 + kI2 * z1);
        const double want = k == 0 ? ref[0] : tau[k - 1].real();
        t += 2.0 * kPi * std::round((want - t.real()) / (2.0 * kPi));
        if ((angle_point2(t) - CVector(cycle.positions().col(k))).norm() > 1e-8) {
            throw IsotopyError("transport: n = 2 cycle vertices are not angular");
        }
        tau[k] = t;
    }
    Complex anchor = cycle.branches()[0].logQ_target;
    CMatrix a = cycle.target_quadric().matrix();

    double s = s0;
    double step = cfg.max_step;
    bool deformed_any = false;
    while (s < s1 - 1e-14) {
        double h = std::min(step, s1 - s);
        int halvings = 0;
        double anchor_jump = 0.0;
        double displacement = 0.0;
        while (true) {
            const GroupElement g_new = g_of(s + h);
            if (std::abs(discriminant(g_new)) < cfg.disc_floor) {
                std::ostringstream os;
                os << "isotopy: |disc| below floor at s = " << s + h;
                throw DiscriminantError(os.str());
            }
            const CMatrix a_new = Quadric(g_new.symmetrized()).matrix();
            if ((a_new - a).norm() <= 1e-14 * std::max(1.0, a.norm())) {
                // The moving quadric did not move: the transport is the
                // identity on this substep.
                cycle.set_group_element(g_new);
                a = a_new;
                break;
            }
            const std::vector<Complex> roots = target_roots2(a_new);
            const double sep = root_separation2(roots);
            if (sep < 0.02) {
                std::ostringstream os;
                os << "isotopy: quadric zeros collide at s = " << s + h
                   << " (separation " << sep
                   << "); the path runs too close to the discriminant";
                throw DiscriminantError(os.str());
            }
            const double r_safe = std::min(0.3, 0.4 * sep);

            // Reject the substep if a root orbit moved (mod pi) by a large
            // fraction of the safety radius.
            bool ok = true;
            const std::vector<Complex> old_roots = target_roots2(a);
            for (const Complex& r : roots) {
                double moved = std::numeric_limits<double>::infinity();
                for (const Complex& o : old_roots) {
                    const Complex d = r - o;
                    moved = std::min(
                        moved,
                        std::abs(Complex(std::remainder(d.real(), kPi), d.imag())));
                }
                if (moved > 0.5 * r_safe) {
                    ok = false;
                    break;
                }
            }

            std::vector<Complex> trial = tau;
            std::vector<Complex> reps;
            if (ok) {
                reps = representatives2(roots, trial);
                ok = push_nodes2(trial, reps, r_safe);
            }
            if (ok) {
                relax_nodes2(trial, reps, ref, r_safe);
                redistribute_nodes2(trial, reps, ref, r_safe);
                ok = push_nodes2(trial, reps, r_safe) &&
                     segments_clear2(trial, reps, 0.5 * r_safe);
            }
            Complex new_anchor = anchor;
            if (ok) {
                // Anchor continuation: in space along the anchor displacement
                // at the old quadric, then in the path parameter at the new
                // anchor position.
                double dph = 0.0;
                ok = tau_segment_phase(a, tau[0], trial[0], dph);
                if (ok) {
                    const Complex moved_anchor(
                        std::log(std::abs(q_target2(a, trial[0]))),
                        anchor.imag() + dph);
                    const auto [l, jump] =
                        continue_log(moved_anchor, q_target2(a_new, trial[0]));
                    new_anchor = l;
                    anchor_jump = jump;
                    ok = jump < 0.5 * kPi;
                }
            }
            if (ok) ok = commit_angular(cycle, g_new, trial, new_anchor);
            if (ok) {
                deformed_any = true;
                for (std::size_t k = 0; k < v; ++k) {
                    displacement = std::max(displacement, std::abs(trial[k] - tau[k]));
                }
                tau = std::move(trial);
                anchor = new_anchor;
                a = a_new;
                break;
            }
            ++halvings;
            if (halvings > cfg.max_halvings) {
                std::ostringstream os;
                os << "isotopy: contour deformation failed at s = " << s + h
                   << " after " << cfg.max_halvings
                   << " halvings; the path may run too close to the discriminant";
                throw IsotopyError(os.str());
            }
            h *= cfg.step_shrink;
            if (h < 1e-12) {
                std::ostringstream os;
                os << "isotopy: substep underflow at s = " << s
                   << "; no admissible deformation found";
                throw IsotopyError(os.str());
            }
        }
        s += h;
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso2] s=%.6f h=%.3e halvings=%d clear=%.4f disp=%.3e\n", s,
                h, halvings, cycle.min_clearance(), displacement);
#endif
        trace.steps.push_back(
            {s, h, cycle.min_clearance(), anchor_jump, displacement, 1.0});
        trace.total_displacement += displacement;
        step = std::min(cfg.max_step, h * 2.0);
    }

    // Settle at the fixed end quadric: pull the contour back toward the real
    // reference wherever the roots allow, then commit the relaxed state.
    if (!deformed_any) return;  // identity transport: leave the cycle untouched
    const GroupElement g_end = g_of(s1);
    const std::vector<Complex> roots = target_roots2(a);
    const double r_safe = std::min(0.3, 0.4 * root_separation2(roots));
    const std::vector<Complex> last_tau = tau;
    const Complex last_anchor = anchor;
    bool settled_ok = true;
    for (int iter = 0; iter < 2000 && settled_ok; ++iter) {
        std::vector<Complex> trial = tau;
        const std::vector<Complex> reps = representatives2(roots, trial);
        relax_nodes2(trial, reps, ref, r_safe);
        redistribute_nodes2(trial, reps, ref, r_safe);
        if (!push_nodes2(trial, reps, r_safe) ||
            !segments_clear2(trial, reps, 0.5 * r_safe)) {
            break;
        }
        double dph = 0.0;
        if (!tau_segment_phase(a, tau[0], trial[0], dph)) break;
        const Complex anc(std::log(std::abs(q_target2(a, trial[0]))),
                          anchor.imag() + dph);
        double moved = 0.0;
        for (std::size_t k = 0; k < v; ++k) {
            moved = std::max(moved, std::abs(trial[k] - tau[k]));
        }
        tau = std::move(trial);
        anchor = anc;
        if (moved < 1e-10) break;
    }
    if (!commit_angular(cycle, g_end, tau, anchor)) {
        // The last per-substep commit is still in place; restore its state.
        commit_angular(cycle, g_end, last_tau, last_anchor);
    }
}

void transport_interval(Cycle& cycle,
                        const std::function<GroupElement(double)>& g_of, double s0,
                        double s1, const IsotopyConfig& cfg, Trace& trace) {
    if (cycle.n() == 2) {
        transport_interval_n2(cycle, g_of, s0, s1, cfg, trace);
        return;
    }
    double s = s0;
    double step = cfg.max_step;
    bool deformed_any = false;
    while (s < s1 - 1e-14) {
        double h = std::min(step, s1 - s);
        int halvings = 0;
        StepMetrics metrics;
        while (true) {
            const GroupElement g_new = g_of(s + h);
            if (std::abs(discriminant(g_new)) < cfg.disc_floor) {
                std::ostringstream os;
                os << "isotopy: |disc| below floor at s = " << s + h;
                throw DiscriminantError(os.str());
            }
            metrics = StepMetrics{};
            const CMatrix& a_old = cycle.target_quadric().matrix();
            const CMatrix a_new = Quadric(g_new.symmetrized()).matrix();
            if ((a_new - a_old).norm() <= 1e-14 * std::max(1.0, a_old.norm())) {
                // The moving quadric did not move: identity transport.
                cycle.set_group_element(g_new);
                break;
            }
            deformed_any = true;
            if (try_step(cycle, g_new, cfg, metrics)) break;
            ++halvings;
            if (halvings > cfg.max_halvings) {
                std::size_t worst = 0;
                double worst_c = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < cycle.vertex_count(); ++i) {
                    const double c = cycle.clearance_at(i);
                    if (c < worst_c) {
                        worst_c = c;
                        worst = i;
                    }
                }
                std::ostringstream os;
                os << "isotopy: clearance not restorable at s = " << s + h
                   << " (vertex " << worst << ", clearance " << worst_c
                   << " after " << cfg.max_halvings
                   << " halvings); the path may run too close to the discriminant "
                      "or the resolution is too low";
                throw IsotopyError(os.str());
            }
            h *= cfg.step_shrink;
            if (h < 1e-12) {
#ifdef ISOCYCLE_DEBUG_PROGRESS
            if (const char* dump = std::getenv("ISO_FAIL_DUMP")) {
                std::ofstream out(dump);
                out.precision(17);
                const CMatrix& tq = cycle.target_quadric().matrix();
                out << "# target";
                for (int r = 0; r < tq.rows(); ++r)
                    for (int c = 0; c < tq.cols(); ++c)
                        out << ' ' << tq(r, c).real() << ' ' << tq(r, c).imag();
                out << "\n";
                for (std::size_t i = 0; i < cycle.vertex_count(); ++i) {
                    const CVector z = cycle.positions().col(i);
                    out << z(0).real() << ',' << z(0).imag() << ','
                        << z(1).real() << ',' << z(1).imag() << ','
                        << cycle.branches()[i].logQ_source.imag() << ','
                        << cycle.branches()[i].logQ_target.imag() << "\n";
                }
            }
#endif

                std::ostringstream os;
                os << "isotopy: substep underflow at s = " << s
                   << "; no admissible deformation found";
                throw IsotopyError(os.str());
            }
        }
        s += h;
#ifdef ISOCYCLE_DEBUG_PROGRESS
        {
            const CMatrix unit = CMatrix::Identity(cycle.n(), cycle.n());
            const CMatrix& tgt = cycle.target_quadric().matrix();
            for_each_edge(cycle, [&](std::size_t i, std::size_t j, const CVector& zi,
                                     const CVector& zj) {
                double geo = 0.0;
                if (!segment_phase_increment(tgt, zi, zj, geo)) {
                    fprintf(stderr, "[iso]   W s=%.4f edge %zu-%zu unresolvable\n", s, i, j);
                    return;
                }
                const double trk = cycle.branches()[j].logQ_target.imag() -
                                   cycle.branches()[i].logQ_target.imag();
                const int w = (int)std::lround((trk - geo) / (2.0 * kPi));
                if (w != 0)
                    fprintf(stderr, "[iso]   W s=%.4f edge %zu-%zu w=%d trk=%.2f geo=%.2f\n",
                            s, i, j, w, trk, geo);
            });
            (void)unit;
        }
#endif
#ifdef ISOCYCLE_DEBUG_PROGRESS
        fprintf(stderr, "[iso] s=%.6f h=%.3e halvings=%d clear=%.4f disp=%.3e\n", s, h,
                halvings, cycle.min_clearance(), metrics.displacement);
#endif
        trace.steps.push_back({s, h, cycle.min_clearance(), metrics.max_branch_jump,
                               metrics.displacement, frame_condition(cycle)});
        trace.total_displacement += metrics.displacement;
        step = std::min(cfg.max_step, h * 2.0);
    }
    if (deformed_any) settle(cycle, cfg, 400);
}

}  // namespace

void IsotopyConfig::validate() const {
    if (!(0.0 < delta_min && delta_min < delta_target)) {
        throw InputError("IsotopyConfig: need 0 < delta_min < delta_target");
    }
    if (max_step <= 0.0 || flow_gain <= 0.0 || max_halvings <= 0 ||
        !(step_shrink > 0.0 && step_shrink < 1.0)) {
        throw InputError("IsotopyConfig: parameters must be positive");
    }
}

double Trace::min_clearance() const {
    double m = std::numeric_limits<double>::infinity();
    for (const TraceStep& t : steps) m = std::min(m, t.min_clearance);
    return m;
}

double Trace::max_branch_jump() const {
    double m = 0.0;
    for (const TraceStep& t : steps) m = std::max(m, t.max_branch_jump);
    return m;
}

void Trace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("Trace::write_csv: cannot open " + path);
    out.precision(17);
    out << "s,step,min_clearance,max_branch_jump,displacement,frame_condition\n";
    for (const TraceStep& t : steps) {
        out << t.s << "," << t.step << "," << t.min_clearance << ","
            << t.max_branch_jump << "," << t.displacement << "," << t.frame_condition
            << "\n";
    }
}

Cycle advance(const Cycle& cycle, const GroupElement& g_from, const GroupElement& g_to,
              const IsotopyConfig& config) {
    config.validate();
    if ((g_to.matrix() - g_from.matrix()).norm() < 1e-15) return cycle;
    Cycle out = cycle;
    Trace trace;
    const CMatrix a = g_from.matrix();
    const CMatrix b = g_to.matrix();
    auto g_of = [&](double t) {
        const CMatrix blend = (1.0 - t) * a + t * b;
        const Complex det = blend.determinant();
        const Complex root =
            std::exp(std::log(det) / static_cast<double>(blend.rows()));
        return GroupElement(blend / root);
    };
    transport_interval(out, g_of, 0.0, 1.0, config, trace);
    return out;
}

std::pair<Cycle, Trace> transport(const Cycle& cycle, const GroupPath& path,
                                  const IsotopyConfig& config) {
    config.validate();
    if (path.n() != cycle.n()) throw InputError("transport: dimension mismatch");
    Cycle out = cycle;
    Trace trace;
    if (path.segments() == 0) {
        return {std::move(out), std::move(trace)};
    }
    auto g_of = [&path](double s) { return path.at(s); };
    transport_interval(out, g_of, 0.0, static_cast<double>(path.segments()), config,
                       trace);
    return {std::move(out), std::move(trace)};
}

}  // namespace isocycle
