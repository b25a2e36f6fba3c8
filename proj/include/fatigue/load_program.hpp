#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fatigue/matpoint.hpp"

namespace fatigue {

struct FixedBoundary {
    bool x = false;
    bool y = false;
};

struct LoadSchedule {
    Control control = Control::Displacement;
    // Triangular waveform; ignored when explicit_values is non-empty.
    double min_value = -1.0;
    double max_value = 1.0;
    int cycles = 1;
    int steps_per_cycle = 80;
    bool first_to_max = true;
    std::vector<double> explicit_values;
    // FE assignments.
    std::string target_set = "top";
    char direction = 'y';
    std::map<std::string, FixedBoundary> fixed;
    // Constant volume force rho*b, not scaled by the load factor.
    std::array<double, 2> body_force{0.0, 0.0};

    int total_steps() const;
    void validate() const;
};

// Load factor at step_index in [0, total_steps()].
double sample(const LoadSchedule& sch, int step_index);
std::vector<double> sample_all(const LoadSchedule& sch);

// 1-based cycle containing step i >= 1.
inline int cycle_of_step(int step, int steps_per_cycle) { return (step - 1) / steps_per_cycle + 1; }

}  // namespace fatigue
