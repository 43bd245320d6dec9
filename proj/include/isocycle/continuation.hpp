#pragma once

#include <optional>
#include <string>

#include "isocycle/cycle.hpp"
#include "isocycle/group.hpp"
#include "isocycle/integrand.hpp"
#include "isocycle/isotopy.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

struct ContinuationResult {
    Complex value;
    double error_estimate = 0.0;
    Trace trace;
    Cycle final_cycle;

    ContinuationResult() : final_cycle(Cycle::real_cycle(2, 16)) {}
    explicit ContinuationResult(Cycle c) : final_cycle(std::move(c)) {}
};

/// Direct quadrature of the matrix element over the real cycle; g must be
/// real and off the discriminant.
ContinuationResult matrix_element(const GroupElement& g, const KFiniteFunction& f1,
                                  const KFiniteFunction& f2, Complex alpha,
                                  int resolution,
                                  const IsotopyConfig& config = IsotopyConfig{});

/// Analytic continuation germ along the path: cycle transport followed by
/// endpoint quadrature with the transported branches.
ContinuationResult continue_path(const GroupPath& path, const KFiniteFunction& f1,
                                 const KFiniteFunction& f2, Complex alpha,
                                 int resolution,
                                 const IsotopyConfig& config = IsotopyConfig{});

struct MonodromyResult {
    Complex initial;
    Complex final;
    std::optional<Complex> ratio;  // absent when |initial| is tiny
    Complex difference;
    double error_estimate = 0.0;
    Trace trace;
};

/// Continue around a closed loop with a real basepoint and compare endpoint
/// and basepoint values.
MonodromyResult monodromy(const GroupPath& loop, const KFiniteFunction& f1,
                          const KFiniteFunction& f2, Complex alpha, int resolution,
                          const IsotopyConfig& config = IsotopyConfig{});

struct HomotopyReport {
    Complex value_a;
    Complex value_b;
    double error_a = 0.0;
    double error_b = 0.0;
    double relative_difference = 0.0;
    bool pass = false;
};

/// Continue along two paths with equal endpoints and compare the values.
HomotopyReport homotopy_check(const GroupPath& path_a, const GroupPath& path_b,
                              const KFiniteFunction& f1, const KFiniteFunction& f2,
                              Complex alpha, int resolution,
                              const IsotopyConfig& config = IsotopyConfig{});

}  // namespace isocycle
