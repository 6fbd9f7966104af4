// Shared helpers for the test suites.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ksparse/rng.hpp"
#include "ksparse/types.hpp"

namespace ksparse::testutil {

// Dense Gaussian instance: A entries N(0, 1/n), y N(0, 1).
inline Instance gaussian_instance(int m, int n, std::uint64_t seed) {
    Philox rng(seed, 1000);
    const double sd = std::sqrt(1.0 / n);
    Eigen::MatrixXd a(m, n);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = sd * rng.next_gaussian();
    Eigen::VectorXd y(m);
    for (int r = 0; r < m; ++r) y(r) = rng.next_gaussian();
    return Instance(std::move(a), std::move(y));
}

}  // namespace ksparse::testutil
