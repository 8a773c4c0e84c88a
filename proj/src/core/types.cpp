#include "wbeval/types.hpp"

#include <cmath>

#include "wbeval/error.hpp"

namespace wbeval {

void validate_box(const BoundingBox& box, std::size_t line) {
    if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) ||
        !std::isfinite(box.h)) {
        throw ValidationError("non-finite box coordinate", line);
    }
    if (!(box.w > 0.0) || !(box.h > 0.0)) {
        throw ValidationError("box width and height must be positive", line);
    }
}

void LossConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
    if (!(margin >= 0.0) || !std::isfinite(margin)) throw DomainError("margin must be non-negative and finite");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in (0, 0.5)");
}

}  // namespace wbeval
