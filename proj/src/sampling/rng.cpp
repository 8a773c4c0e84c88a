#include "wbeval/rng.hpp"

#include <cmath>
#include <numbers>

namespace wbeval {

double Rng::normal() {
    // 1 - u keeps the logarithm away from zero.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace wbeval
