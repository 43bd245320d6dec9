#pragma once

#include <vector>

#include "isocycle/group.hpp"
#include "isocycle/integrand.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

struct OracleConfig {
    int contour_nodes = 256;     // polyline nodes over one projective period
    int gauss_order = 6;         // quadrature order per polyline segment
    double max_step = 0.02;      // path-parameter substep
    int max_halvings = 24;
    double min_root_separation = 1e-4;
};

/// Independent n = 2 continuation: the integral over RP^1 is written as a
/// 1D contour integral in the complexified angle phi, the two zeros of
/// Q(z(phi) g) are tracked in the phi-plane, and the contour is pushed away
/// from them while the log of Q(z(phi) g) is continued along the path and
/// along the contour. Shares nothing with the mesh isotopy engine.
Complex oracle_continue(const GroupPath& path, const KFiniteFunction& f1,
                        const KFiniteFunction& f2, Complex alpha,
                        const OracleConfig& config = OracleConfig{});

struct ThetaReport {
    bool theta_finite = false;
    Complex theta;              // ad/bc when finite
    Complex abcd;               // product of the four entries
    bool on_abcd_divisor = false;
};

/// The classical cross-ratio coordinate theta = ad/bc and the entry-product
/// divisor membership; reporting-only diagnostics.
ThetaReport theta(const GroupElement& g);

}  // namespace isocycle
