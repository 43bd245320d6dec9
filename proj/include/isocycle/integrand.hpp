#pragma once

#include <utility>
#include <vector>

#include "isocycle/group.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

/// Continuously tracked logarithms of Q(z) and Q(zg) at one mesh vertex.
/// These resolve the branch of J^alpha and of the K-finite denominators.
struct BranchState {
    Complex logQ_source = 0.0;  // log Q(z)
    Complex logQ_target = 0.0;  // log Q(zg)
};

/// Nearest-branch continuation: new log with exp(new) = q_new, chosen closest
/// to old_log. Returns (new log, |imaginary jump|).
std::pair<Complex, double> continue_log(Complex old_log, Complex q_new);

/// Principal-branch state at a point; canonical on the real cycle where both
/// quadric values are positive.
BranchState principal_branch(const GroupElement& g, const CVector& x);

/// Monomial K-finite basis function  prod x_j^{k_j} / Q(x)^{sum k / 2}.
class KFiniteFunction {
  public:
    explicit KFiniteFunction(std::vector<int> exponents);

    static KFiniteFunction constant(int n) {
        return KFiniteFunction(std::vector<int>(n, 0));
    }

    const std::vector<int>& exponents() const { return k_; }
    int degree() const { return total_; }

    /// Evaluate with the tracked log of Q at the evaluation point.
    Complex eval(const CVector& x, Complex logQ) const;

  private:
    std::vector<int> k_;
    int total_;
};

/// Value of the invariant (n-1)-form on the tangent frame at x (frame columns
/// are the n-1 tangent vectors). Orientation is fixed so the projective
/// volume comes out positive.
Complex invariant_form(const CVector& x, const CMatrix& frame, Complex logQ_source);

/// log of J(g,x) = (Q(x)/Q(xg))^{n/2} through the tracked branch.
Complex log_jacobian(int n, const BranchState& branch);

/// Principal-branch Jacobian log, valid on the real cycle.
Complex log_jacobian_principal(const GroupElement& g, const CVector& x);

/// Full integrand of the matrix-element integral at one vertex.
Complex integrand_density(const GroupElement& g, Complex alpha,
                          const KFiniteFunction& f1, const KFiniteFunction& f2,
                          const CVector& x, const CMatrix& frame,
                          const BranchState& branch);

/// Row action x -> x g as a column vector, i.e. g^t x.
inline CVector right_action(const GroupElement& g, const CVector& x) {
    return g.matrix().transpose() * x;
}

int orientation_sign(int n);

}  // namespace isocycle
