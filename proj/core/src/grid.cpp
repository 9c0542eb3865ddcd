#include "seqcal/grid.hpp"

#include <stdexcept>

namespace seqcal {

std::vector<std::string> GridConfig::validate(InertiaPolicy policy) const {
    if (levels < 1) throw std::invalid_argument("grid: levels (K) must be >= 1");
    if (inertia < 1) throw std::invalid_argument("grid: inertia (T) must be >= 1");
    std::vector<std::string> warnings;
    if (inertia < levels) {
        const std::string msg = "grid: inertia T=" + std::to_string(inertia) +
                                " is smaller than levels K=" + std::to_string(levels);
        if (policy == InertiaPolicy::reject) throw std::invalid_argument(msg);
        warnings.push_back(msg);
    }
    return warnings;
}

} // namespace seqcal
