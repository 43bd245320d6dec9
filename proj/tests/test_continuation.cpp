#include <doctest.h>

#include <cmath>

#include "isocycle/continuation.hpp"
#include "isocycle/types.hpp"

using namespace isocycle;

namespace {

GroupElement diag2(Complex a) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = 1.0 / a;
    return GroupElement(m);
}

// Independent 1D check: for g = diag(a, 1/a) and f1 = f2 = 1 the matrix
// element is  integral_0^pi (a^2 cos^2 t + a^{-2} sin^2 t)^{-alpha} dt,
// evaluated here with the composite Simpson rule.
Complex simpson_reference(double a, Complex alpha, int intervals) {
    const double h = kPi / intervals;
    Complex sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double t = i * h;
        const double q = a * a * std::cos(t) * std::cos(t) +
                         std::sin(t) * std::sin(t) / (a * a);
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * std::exp(-alpha * std::log(q));
    }
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("direct evaluation matches an independent 1D quadrature") {
    const Complex alpha(0.3, 0.0);
    const ContinuationResult r = matrix_element(diag2(1.7), KFiniteFunction::constant(2),
                                                KFiniteFunction::constant(2), alpha, 24);
    const Complex ref = simpson_reference(1.7, alpha, 4000);
    CHECK(std::abs(r.value - ref) / std::abs(ref) < 1e-9);
    CHECK(r.error_estimate < 1e-10);
}

TEST_CASE("alpha = 0 with constant functions gives the volume") {
    const ContinuationResult r = matrix_element(diag2(1.3), KFiniteFunction::constant(2),
                                                KFiniteFunction::constant(2), 0.0, 24);
    CHECK(std::abs(r.value - kPi) < 1e-12);
}

TEST_CASE("continuation along a constant path equals direct evaluation") {
    const GroupElement g = diag2(1.5);
    const GroupPath path({g, g}, 8);
    const ContinuationResult direct = matrix_element(g, KFiniteFunction::constant(2),
                                                     KFiniteFunction::constant(2), 0.4, 24);
    const ContinuationResult cont = continue_path(path, KFiniteFunction::constant(2),
                                                  KFiniteFunction::constant(2), 0.4, 24);
    CHECK(std::abs(direct.value - cont.value) < 1e-12 * std::abs(direct.value));
}

TEST_CASE("forward-then-reverse continuation returns the start value") {
    const GroupPath fwd({diag2(1.2), diag2(Complex(1.1, 0.25)), diag2(Complex(0.95, 0.4))}, 32);
    const GroupPath loop = fwd.concatenated(fwd.reversed());
    const ContinuationResult start = matrix_element(diag2(1.2), KFiniteFunction::constant(2),
                                                    KFiniteFunction::constant(2), 0.3, 24);
    const ContinuationResult back = continue_path(loop, KFiniteFunction::constant(2),
                                                  KFiniteFunction::constant(2), 0.3, 24);
    CHECK(std::abs(start.value - back.value) / std::abs(start.value) < 1e-8);
}

TEST_CASE("homotopy check accepts two homotopic complex paths") {
    const GroupPath a({diag2(1.2), diag2(Complex(1.15, 0.1)), diag2(Complex(1.05, 0.3))}, 32);
    const GroupPath b({diag2(1.2), diag2(Complex(1.02, 0.15)), diag2(Complex(1.05, 0.3))}, 32);
    const HomotopyReport rep = homotopy_check(a, b, KFiniteFunction::constant(2),
                                              KFiniteFunction::constant(2), 0.3, 24);
    CHECK(rep.pass);
    CHECK(rep.relative_difference < 1e-6);
}

TEST_CASE("monodromy of a contractible loop is trivial") {
    const GroupPath loop({diag2(1.2), diag2(Complex(1.35, 0.15)), diag2(Complex(1.2, 0.3)),
                          diag2(Complex(1.05, 0.15)), diag2(1.2)},
                         32);
    const MonodromyResult r = monodromy(loop, KFiniteFunction::constant(2),
                                        KFiniteFunction::constant(2), 0.3, 24);
    REQUIRE(r.ratio.has_value());
    CHECK(std::abs(*r.ratio - 1.0) < 1e-8);
}

TEST_CASE("evaluation on the discriminant is rejected") {
    CHECK_THROWS_AS(matrix_element(GroupElement::identity(2), KFiniteFunction::constant(2),
                                   KFiniteFunction::constant(2), 0.3, 24),
                    DiscriminantError);
}
