#include <doctest.h>

#include <cmath>

#include "isocycle/cycle.hpp"
#include "isocycle/isotopy.hpp"
#include "isocycle/types.hpp"

using namespace isocycle;

namespace {

GroupElement diag2(double a) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = 1.0 / a;
    return GroupElement(m);
}

}  // namespace

TEST_CASE("transport along a constant path is the identity") {
    const GroupElement g = diag2(1.4);
    const Cycle cycle = Cycle::real_cycle(2, 16, g);
    const GroupPath path({g, g}, 8);
    const auto [moved, trace] = transport(cycle, path, IsotopyConfig{});
    CHECK((moved.positions() - cycle.positions()).norm() < 1e-12);
    CHECK(trace.min_clearance() > 0.1);
    for (std::size_t i = 0; i < cycle.vertex_count(); ++i) {
        CHECK(std::abs(moved.branches()[i].logQ_target -
                       cycle.branches()[i].logQ_target) < 1e-12);
    }
}

TEST_CASE("a real path keeps the cycle on the real locus") {
    const GroupElement a = diag2(1.2);
    CMatrix mb(2, 2);
    mb << 1.5, 0.1, 0.0, 1.0 / 1.5;
    const GroupPath path({a, GroupElement(mb)}, 16);
    const Cycle cycle = Cycle::real_cycle(2, 16, a);
    const auto [moved, trace] = transport(cycle, path, IsotopyConfig{});
    // Real quadrics have conjugate-symmetric zeros; the transported contour
    // may be reparametrized along the real axis but never leaves it.
    CHECK(moved.positions().imag().norm() < 1e-10);
    CHECK(trace.min_clearance() >= IsotopyConfig{}.delta_min);
}

TEST_CASE("a complex path deforms the cycle but keeps clearance") {
    const GroupElement a = diag2(1.2);
    CMatrix mc = CMatrix::Zero(2, 2);
    mc(0, 0) = Complex(0.9, 0.6);
    mc(1, 1) = 1.0 / mc(0, 0);
    const GroupPath path({a, GroupElement(mc)}, 32);
    const Cycle cycle = Cycle::real_cycle(2, 16, a);
    const auto [moved, trace] = transport(cycle, path, IsotopyConfig{});
    CHECK(moved.positions().imag().norm() > 1e-6);  // genuinely deformed
    CHECK(moved.min_clearance() >= IsotopyConfig{}.delta_min);
    CHECK(trace.min_clearance() >= IsotopyConfig{}.delta_min);
    CHECK(trace.max_branch_jump() < kPi / 2.0);
}

TEST_CASE("advance matches a one-segment transport") {
    const GroupElement a = diag2(1.2);
    const GroupElement b = diag2(1.8);
    const Cycle cycle = Cycle::real_cycle(2, 16, a);
    const Cycle stepped = advance(cycle, a, b, IsotopyConfig{});
    const auto [moved, trace] = transport(cycle, GroupPath({a, b}, 16), IsotopyConfig{});
    CHECK((stepped.positions() - moved.positions()).norm() < 1e-10);
    (void)trace;
}

TEST_CASE("config validation rejects nonsense") {
    IsotopyConfig cfg;
    cfg.delta_min = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = IsotopyConfig{};
    cfg.delta_target = 0.5 * cfg.delta_min;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("n=4 transport along a real diagonal path") {
    CMatrix ma = CMatrix::Zero(4, 4), mb = CMatrix::Zero(4, 4);
    const double a[4] = {1.2, 1.1, 1.0 / 1.1, 1.0 / 1.2};
    const double b[4] = {1.4, 1.15, 1.0 / 1.15, 1.0 / 1.4};
    for (int i = 0; i < 4; ++i) {
        ma(i, i) = a[i];
        mb(i, i) = b[i];
    }
    const GroupPath path({GroupElement(ma), GroupElement(mb)}, 8);
    const Cycle cycle = Cycle::real_cycle(4, 8, GroupElement(ma));
    const auto [moved, trace] = transport(cycle, path, IsotopyConfig{});
    CHECK(moved.min_clearance() >= IsotopyConfig{}.delta_min);
    CHECK(trace.steps.size() > 0);
}
