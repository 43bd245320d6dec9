#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "isocycle/group.hpp"
#include "isocycle/integrand.hpp"
#include "isocycle/quadric.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

struct IntegrationResult {
    Complex value;
    double error_estimate;
};

/// Discretized (n-1)-cycle in CP^{n-1}, stored on the sphere double cover
/// with antipodal identification. n = 2 keeps the half circle [0, pi);
/// n = 4 keeps the full Hopf-coordinate grid on S^3 with weight 1/2.
class Cycle {
  public:
    /// Initial real cycle RP^{n-1} with principal branches for the (real)
    /// group element g.
    static Cycle real_cycle(int n, int resolution, const GroupElement& g);
    static Cycle real_cycle(int n, int resolution);

    int n() const { return n_; }
    int resolution() const { return resolution_; }
    std::size_t vertex_count() const { return static_cast<std::size_t>(positions_.cols()); }

    const CMatrix& positions() const { return positions_; }
    CMatrix& positions() { return positions_; }
    const std::vector<BranchState>& branches() const { return branches_; }
    std::vector<BranchState>& branches() { return branches_; }
    const RVector& weights() const { return weights_; }
    const RMatrix& reference_positions() const { return reference_; }
    const GroupElement& group_element() const { return group_; }
    const Quadric& target_quadric() const { return target_quadric_; }

    /// Re-anchor the target quadric at a new group element. Branch states are
    /// NOT touched; the isotopy engine owns that update.
    void set_group_element(const GroupElement& g);

    /// Mark the analytic real-cycle representation stale (after deformation).
    void mark_deformed() { analytic_real_ = false; }
    bool analytic_real() const { return analytic_real_; }

    /// Tangent frames (n x (n-1) per vertex) from the reference-chart
    /// pushforward of the stored vertex map.
    std::vector<CMatrix> frames() const;

    /// Min over vertices of projective clearance from {Q = 0} and {Q(.g) = 0}.
    double min_clearance() const;
    double clearance_at(std::size_t idx) const;

    /// Enforce exact antipodal equivariance (n = 4; no-op for n = 2).
    void symmetrize();
    std::size_t antipode(std::size_t idx) const;

    using Density = std::function<Complex(const CVector& x, const CMatrix& frame,
                                          const BranchState& branch)>;

    /// Quadrature of the density over the cycle, with a Richardson-style
    /// error estimate from one refinement level.
    IntegrationResult integrate(const Density& density) const;
    Complex integrate_plain(const Density& density) const;
    Complex integrate_polyline(const Density& density, int order) const;

    /// Doubled resolution; positions and branch logs interpolated, branches
    /// re-snapped by continuity. Throws if an interpolated vertex violates
    /// the clearance floor.
    Cycle refine(double clearance_floor = 1e-4) const;

    /// Smooth a per-vertex displacement field along the reference grid.
    void smooth_field(CMatrix& field, int passes) const;

    void write_csv(const std::string& path) const;

    // Grid metadata (used by refine and the isotopy engine).
    struct GridN2 {
        int panels = 0;
        std::vector<double> phi;  // per-vertex reference angle
    };
    struct GridN4 {
        int n_eta = 0;
        int n_xi = 0;
        std::vector<double> eta_nodes;  // on [0, pi/2]
    };
    const GridN2& grid2() const { return grid2_; }
    const GridN4& grid4() const { return grid4_; }

  private:
    Cycle() : group_(GroupElement::identity(2)), target_quadric_(Quadric::unit(2)) {}

    void rebuild_real_positions();

    int n_ = 2;
    int resolution_ = 0;
    bool analytic_real_ = true;
    GroupElement group_;
    Quadric target_quadric_;
    CMatrix positions_;   // n x V
    RMatrix reference_;   // n x V, initial real sphere points
    std::vector<BranchState> branches_;
    RVector weights_;
    GridN2 grid2_;
    GridN4 grid4_;
};

/// Spec-facing free functions.
Cycle make_real_cycle(int n, int resolution);
inline IntegrationResult integrate(const Cycle& cycle, const Cycle::Density& density) {
    return cycle.integrate(density);
}
inline Cycle refine(const Cycle& cycle) { return cycle.refine(); }

/// Density of the invariant form alone (for volume checks).
Cycle::Density volume_density();

/// Density of the full matrix-element integrand for fixed (g, alpha, f1, f2).
Cycle::Density matrix_element_density(const GroupElement& g, Complex alpha,
                                      const KFiniteFunction& f1,
                                      const KFiniteFunction& f2);

}  // namespace isocycle
