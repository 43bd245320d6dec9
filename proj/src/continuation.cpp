#include "isocycle/continuation.hpp"

#include <cmath>

namespace isocycle {

ContinuationResult matrix_element(const GroupElement& g, const KFiniteFunction& f1,
                                  const KFiniteFunction& f2, Complex alpha,
                                  int resolution, const IsotopyConfig& config) {
    if (!g.is_real(1e-10)) {
        throw InputError("matrix_element: complex group element; use continue_path");
    }
    if (in_discriminant(g, config.disc_floor)) {
        throw DiscriminantError("matrix_element: g lies on the discriminant locus");
    }
    ContinuationResult result(Cycle::real_cycle(g.n(), resolution, g));
    const IntegrationResult ir =
        result.final_cycle.integrate(matrix_element_density(g, alpha, f1, f2));
    result.value = ir.value;
    result.error_estimate = ir.error_estimate;
    return result;
}

ContinuationResult continue_path(const GroupPath& path, const KFiniteFunction& f1,
                                 const KFiniteFunction& f2, Complex alpha,
                                 int resolution, const IsotopyConfig& config) {
    const GroupElement start = path.at(0.0);
    if (!start.is_real(1e-10)) {
        throw InputError("continue_path: the path must start in SL(n,R)");
    }
    const Cycle initial = Cycle::real_cycle(path.n(), resolution, start);
    auto [transported, trace] = transport(initial, path, config);
    ContinuationResult result(std::move(transported));
    result.trace = std::move(trace);
    const GroupElement end = result.final_cycle.group_element();
    const IntegrationResult ir =
        result.final_cycle.integrate(matrix_element_density(end, alpha, f1, f2));
    result.value = ir.value;
    result.error_estimate = ir.error_estimate;
    return result;
}

MonodromyResult monodromy(const GroupPath& loop, const KFiniteFunction& f1,
                          const KFiniteFunction& f2, Complex alpha, int resolution,
                          const IsotopyConfig& config) {
    const GroupElement base = loop.at(0.0);
    const GroupElement end = loop.at(static_cast<double>(loop.segments()));
    if ((end.matrix() - base.matrix()).norm() > 1e-10) {
        throw InputError("monodromy: the path endpoints differ");
    }
    if (!base.is_real(1e-10)) {
        throw InputError("monodromy: the basepoint must be real");
    }
    MonodromyResult result;
    const ContinuationResult direct = matrix_element(base, f1, f2, alpha, resolution, config);
    ContinuationResult continued = continue_path(loop, f1, f2, alpha, resolution, config);
    result.initial = direct.value;
    result.final = continued.value;
    result.difference = continued.value - direct.value;
    result.error_estimate = direct.error_estimate + continued.error_estimate;
    result.trace = std::move(continued.trace);
    const double scale = std::abs(result.initial);
    if (scale > 1e-12 + 10.0 * result.error_estimate) {
        result.ratio = result.final / result.initial;
    }
    return result;
}

HomotopyReport homotopy_check(const GroupPath& path_a, const GroupPath& path_b,
                              const KFiniteFunction& f1, const KFiniteFunction& f2,
                              Complex alpha, int resolution,
                              const IsotopyConfig& config) {
    const auto end_a = path_a.at(static_cast<double>(path_a.segments()));
    const auto end_b = path_b.at(static_cast<double>(path_b.segments()));
    if ((end_a.matrix() - end_b.matrix()).norm() > 1e-10) {
        throw InputError("homotopy_check: the path endpoints differ");
    }
    const ContinuationResult a = continue_path(path_a, f1, f2, alpha, resolution, config);
    const ContinuationResult b = continue_path(path_b, f1, f2, alpha, resolution, config);
    HomotopyReport report;
    report.value_a = a.value;
    report.value_b = b.value;
    report.error_a = a.error_estimate;
    report.error_b = b.error_estimate;
    const double scale =
        std::max({std::abs(a.value), std::abs(b.value), 1e-300});
    report.relative_difference = std::abs(a.value - b.value) / scale;
    const double budget =
        std::max(1e-8, (a.error_estimate + b.error_estimate) / scale);
    report.pass = report.relative_difference <= budget;
    return report;
}

}  // namespace isocycle
