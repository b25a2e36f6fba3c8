#include "fatigue/load_program.hpp"

#include <stdexcept>

namespace fatigue {

int LoadSchedule::total_steps() const {
    if (!explicit_values.empty()) return static_cast<int>(explicit_values.size()) - 1;
    return cycles * steps_per_cycle;
}

void LoadSchedule::validate() const {
    if (!explicit_values.empty()) {
        if (explicit_values.front() != 0.0) throw std::invalid_argument("values: first entry must be 0");
        return;
    }
    if (steps_per_cycle < 8) throw std::invalid_argument("steps_per_cycle must be at least 8");
    if (!(min_value < max_value)) throw std::invalid_argument("min must be smaller than max");
    if (cycles < 1) throw std::invalid_argument("cycles must be at least 1");
    if (direction != 'x' && direction != 'y') throw std::invalid_argument("direction must be x or y");
}

double sample(const LoadSchedule& sch, int i) {
    if (i < 0 || i > sch.total_steps()) throw std::out_of_range("step index " + std::to_string(i) + " out of range");
    if (!sch.explicit_values.empty()) return sch.explicit_values[i];
    const double first = sch.first_to_max ? sch.max_value : sch.min_value;
    const double second = sch.first_to_max ? sch.min_value : sch.max_value;
    const long n = sch.steps_per_cycle;
    // Phase measured in units of 1/(4n) cycles keeps the extrema exact.
    const long q = 4L * i;
    if (q <= n) return first * static_cast<double>(q) / static_cast<double>(n);
    const long tau4 = (q - n) % (4L * n);
    const double tau = static_cast<double>(tau4) / static_cast<double>(4L * n);
    if (tau <= 0.5) return first + (second - first) * 2.0 * tau;
    return second + (first - second) * 2.0 * (tau - 0.5);
}

std::vector<double> sample_all(const LoadSchedule& sch) {
    std::vector<double> v(sch.total_steps() + 1);
    for (int i = 0; i <= sch.total_steps(); ++i) v[i] = sample(sch, i);
    return v;
}

}  // namespace fatigue
