#pragma once

#include <cstdint>
#include <vector>

#include "isocycle/types.hpp"

namespace isocycle {

/// Complex symmetric quadratic form Q_A(x) = x A x^t on row vectors.
class Quadric {
  public:
    explicit Quadric(CMatrix matrix);

    int n() const { return static_cast<int>(matrix_.rows()); }
    const CMatrix& matrix() const { return matrix_; }
    double spectral_norm() const { return spectral_norm_; }

    Complex eval(const CVector& x) const;
    /// Holomorphic gradient of Q_A at x, i.e. 2 A x.
    CVector gradient(const CVector& x) const;

    static Quadric unit(int n) { return Quadric(CMatrix::Identity(n, n)); }

  private:
    CMatrix matrix_;
    double spectral_norm_;
};

Complex quadric_eval(const Quadric& a, const CVector& x);

/// |Q_A(x)| / (|x|^2 sigma_max(A)); scale-invariant, zero iff x on the quadric.
double projective_clearance(const CVector& x, const Quadric& a);

/// Simultaneous reduction T B T^t = I, T A T^t = diag(lambdas).
struct PencilReduction {
    CMatrix transform;
    std::vector<Complex> lambdas;
};

/// Generalized eigenvalues of det(A - lambda B) = 0 via the QZ algorithm.
std::vector<Complex> pencil_spectrum(const Quadric& a, const Quadric& b);

PencilReduction weierstrass_reduce(const Quadric& a, const Quadric& b);

/// Scale-invariant norm of the 2x2 minors of [grad Q_A; grad Q_B] at x.
/// Zero iff the two gradients are parallel.
double transversality_defect(const Quadric& a, const Quadric& b, const CVector& x);

struct TransversalityReport {
    bool analytic_transversal = false;   // pencil eigenvalues pairwise distinct
    double min_eigenvalue_gap = 0.0;     // relative pairwise gap
    double sampled_min_defect = 0.0;     // +inf if no intersection point found
    int intersection_points_found = 0;
    int trials = 0;
    bool sampling_conclusive = false;
    bool transversal = false;            // combined verdict
};

TransversalityReport transversality_check(const Quadric& a, const Quadric& b,
                                          int trials, std::uint64_t seed = 20240817,
                                          double defect_threshold = 1e-6);

/// Newton projection of a random start onto {Q_A = 0} and {Q_B = 0};
/// returns true on convergence. Exposed for the sampling-based tests.
bool project_to_intersection(const Quadric& a, const Quadric& b, CVector& x,
                             int max_iter = 60);

}  // namespace isocycle
