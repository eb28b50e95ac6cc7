#pragma once

#include <cmath>
#include <string>

#include "dfock/errors.hpp"

namespace dfock {

/// The real pair (lambda1, lambda2) of the deformed creation operator
/// a^dag + lambda1 a + lambda2.
struct DeformationParams {
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    [[nodiscard]] bool undeformed() const noexcept { return lambda1 == 0.0 && lambda2 == 0.0; }

    void validate() const {
        if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) {
            throw DomainError("deformation parameters must be finite reals");
        }
    }

    friend bool operator==(const DeformationParams&, const DeformationParams&) = default;
};

inline std::string to_string(const DeformationParams& p) {
    return "(lambda1=" + std::to_string(p.lambda1) + ", lambda2=" + std::to_string(p.lambda2) + ")";
}

} // namespace dfock
