#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "isocycle/cycle.hpp"
#include "isocycle/group.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

struct IsotopyConfig {
    double delta_target = 0.05;  // clearance the flow restores
    double delta_min = 1e-3;     // hard floor
    double max_step = 1e-2;      // path-parameter step
    double step_shrink = 0.5;
    int max_halvings = 20;
    double flow_gain = 0.5;      // vertex displacement per unit clearance deficit
    double relax_gain = 0.1;     // pull back toward the reference cycle when safe
    int smoothing_passes = 2;
    int max_flow_iters = 60;
    double disc_floor = 1e-6;

    void validate() const;
};

struct TraceStep {
    double s;
    double step;
    double min_clearance;
    double max_branch_jump;
    double displacement;
    double frame_condition;
};

struct Trace {
    std::vector<TraceStep> steps;
    double total_displacement = 0.0;
    double min_clearance() const;
    double max_branch_jump() const;
    void write_csv(const std::string& path) const;
};

/// One transport step from g_from to g_to with internal substepping.
Cycle advance(const Cycle& cycle, const GroupElement& g_from, const GroupElement& g_to,
              const IsotopyConfig& config);

/// Transport the cycle along the whole path. The cycle must be admissible at
/// the path start; the result is admissible at the path end.
std::pair<Cycle, Trace> transport(const Cycle& cycle, const GroupPath& path,
                                  const IsotopyConfig& config);

}  // namespace isocycle
