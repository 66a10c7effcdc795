#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace iq {

/// Pairwise (cascade) summation with a fixed split order, so reductions are
/// reproducible and accurate to O(log n) ulps.
inline double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.innerStride() == 1) return pairwise_sum(v.data(), static_cast<std::size_t>(v.size()));
    const Eigen::VectorXd copy = v;
    return pairwise_sum(copy.data(), static_cast<std::size_t>(copy.size()));
}

}  // namespace iq
