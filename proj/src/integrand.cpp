#include "isocycle/integrand.hpp"

#include <cmath>

namespace isocycle {

std::pair<Complex, double> continue_log(Complex old_log, Complex q_new) {
    const Complex inc = std::log(q_new * std::exp(-old_log));
    return {old_log + inc, std::abs(inc.imag())};
}

BranchState principal_branch(const GroupElement& g, const CVector& x) {
    BranchState b;
    const Complex qs = (x.transpose() * x)(0, 0);
    const CVector y = right_action(g, x);
    const Complex qt = (y.transpose() * y)(0, 0);
    if (qs == Complex(0.0) || qt == Complex(0.0)) {
        throw QuadratureError("principal_branch: point lies on a quadric");
    }
    b.logQ_source = std::log(qs);
    b.logQ_target = std::log(qt);
    return b;
}

KFiniteFunction::KFiniteFunction(std::vector<int> exponents)
    : k_(std::move(exponents)), total_(0) {
    if (k_.empty()) throw InputError("KFiniteFunction: empty exponent list");
    for (int e : k_) {
        if (e < 0) throw InputError("KFiniteFunction: negative exponent");
        total_ += e;
    }
    if (total_ % 2 != 0) throw InputError("KFiniteFunction: exponent sum must be even");
}

Complex KFiniteFunction::eval(const CVector& x, Complex logQ) const {
    if (x.size() != static_cast<Eigen::Index>(k_.size())) {
        throw InputError("KFiniteFunction::eval: dimension mismatch");
    }
    Complex num = 1.0;
    for (std::size_t j = 0; j < k_.size(); ++j) {
        for (int e = 0; e < k_[j]; ++e) num *= x(j);
    }
    return num * std::exp(-0.5 * static_cast<double>(total_) * logQ);
}

int orientation_sign(int n) {
    // Fixed so that the projective volume is positive with the reference
    // frame ordering used by the cycle meshes.
    return n == 4 ? -1 : 1;
}

Complex invariant_form(const CVector& x, const CMatrix& frame, Complex logQ_source) {
    const int n = static_cast<int>(x.size());
    CMatrix m(n, n);
    m.col(0) = x;
    for (int j = 0; j < n - 1; ++j) m.col(j + 1) = frame.col(j);
    const Complex det = m.determinant();
    return static_cast<double>(orientation_sign(n)) * det *
           std::exp(-0.5 * static_cast<double>(n) * logQ_source);
}

Complex log_jacobian(int n, const BranchState& branch) {
    return 0.5 * static_cast<double>(n) * (branch.logQ_source - branch.logQ_target);
}

Complex log_jacobian_principal(const GroupElement& g, const CVector& x) {
    return log_jacobian(g.n(), principal_branch(g, x));
}

Complex integrand_density(const GroupElement& g, Complex alpha,
                          const KFiniteFunction& f1, const KFiniteFunction& f2,
                          const CVector& x, const CMatrix& frame,
                          const BranchState& branch) {
    const CVector y = right_action(g, x);
    const Complex value = f1.eval(x, branch.logQ_source) *
                          f2.eval(y, branch.logQ_target) *
                          std::exp(alpha * log_jacobian(g.n(), branch)) *
                          invariant_form(x, frame, branch.logQ_source);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
        throw QuadratureError("integrand_density: non-finite value (quadric pole?)");
    }
    return value;
}

}  // namespace isocycle
