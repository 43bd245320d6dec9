#include <doctest.h>

#include <cmath>

#include "isocycle/continuation.hpp"
#include "isocycle/sl2_oracle.hpp"
#include "isocycle/types.hpp"

using namespace isocycle;

namespace {

GroupElement diag2(Complex a) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = 1.0 / a;
    return GroupElement(m);
}

CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
    CMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_CASE("theta diagnostics on frozen examples") {
    const ThetaReport id = theta(GroupElement::identity(2));
    CHECK_FALSE(id.theta_finite);  // bc = 0
    CHECK(std::abs(id.abcd) < 1e-14);
    CHECK(id.on_abcd_divisor);

    const ThetaReport generic = theta(GroupElement(mat2(2, 1, 1, 1)));
    REQUIRE(generic.theta_finite);
    CHECK(std::abs(generic.theta - 2.0) < 1e-13);  // ad/bc = 2/1
    CHECK(std::abs(generic.abcd - 2.0) < 1e-13);
    CHECK_FALSE(generic.on_abcd_divisor);

    const GroupElement rot(mat2(0, 1, -1, 0));
    const ThetaReport r = theta(rot);
    CHECK(std::abs(r.abcd) < 1e-14);
    CHECK(r.on_abcd_divisor);
    CHECK(std::abs(discriminant(rot)) < 1e-12);  // g g^t = I is on the other divisor too
}

TEST_CASE("oracle matches direct evaluation on a real path") {
    const GroupPath path({diag2(1.2), diag2(1.5), diag2(1.9)}, 32);
    const Complex oracle = oracle_continue(path, KFiniteFunction::constant(2),
                                           KFiniteFunction::constant(2), 0.3);
    const ContinuationResult direct = matrix_element(diag2(1.9), KFiniteFunction::constant(2),
                                                     KFiniteFunction::constant(2), 0.3, 24);
    CHECK(std::abs(oracle - direct.value) / std::abs(direct.value) < 1e-8);
}

TEST_CASE("oracle matches the engine on a complex path") {
    const GroupPath path({diag2(1.2), diag2(Complex(1.1, 0.3)), diag2(Complex(0.9, 0.55))}, 48);
    const Complex oracle = oracle_continue(path, KFiniteFunction::constant(2),
                                           KFiniteFunction::constant(2), 0.3);
    const ContinuationResult engine = continue_path(path, KFiniteFunction::constant(2),
                                                    KFiniteFunction::constant(2), 0.3, 32);
    CHECK(std::abs(oracle - engine.value) / std::abs(engine.value) < 1e-6);
}

TEST_CASE("oracle handles nonconstant K-finite functions") {
    const GroupPath path({diag2(1.2), diag2(1.6)}, 32);
    const Complex oracle = oracle_continue(path, KFiniteFunction({2, 0}),
                                           KFiniteFunction({0, 2}), Complex(0.25, 0.1));
    const ContinuationResult direct = matrix_element(diag2(1.6), KFiniteFunction({2, 0}),
                                                     KFiniteFunction({0, 2}),
                                                     Complex(0.25, 0.1), 24);
    CHECK(std::abs(oracle - direct.value) / std::abs(direct.value) < 1e-8);
}
