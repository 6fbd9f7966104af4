// Planted synthetic model: y = A x0 + xi with Bernoulli-Gaussian x0,
// Gaussian design (entry variance 1/N) and Gaussian noise, plus ground-truth
// metrics against the generating vector.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "ksparse/rng.hpp"
#include "ksparse/types.hpp"

namespace ksparse {

struct SynthParams {
    int n = 100;
    double alpha = 0.5;      // M/N
    double rho0 = 0.1;       // density of x0
    double sigma_x2 = 10.0;  // variance of nonzero x0 entries
    double sigma_xi2 = 0.1;  // noise variance
    std::uint64_t seed = 1;

    int m() const;
    void validate() const;
};

struct PlantedInstance {
    Instance instance;
    Eigen::VectorXd x0;
    Support true_support;
};

// Draws A (row-major, Philox stream 0), x0 (stream 1) and the noise
// (stream 2) from params.seed, so the same parameters always produce the
// same instance.
PlantedInstance generate_planted(const SynthParams& params);

// Expected half squared prediction error on a fresh row:
//   (1/2) (||xhat - x0||^2 / N + sigma_xi2).
// Under this ensemble the error is affine in the squared distance to x0,
// with slope 1/(2N) and intercept sigma_xi2/2.
double generalization_error_exact(const Eigen::VectorXd& xhat, const PlantedInstance& planted,
                                  const SynthParams& params);

// Monte Carlo estimate over n_fresh freshly drawn rows; returns (mean,
// standard error). n_fresh must be >= 2.
std::pair<double, double> generalization_error_empirical(const Eigen::VectorXd& xhat,
                                                         const PlantedInstance& planted,
                                                         const SynthParams& params, long n_fresh,
                                                         Philox& rng);

struct OverlapStats {
    int intersection = 0;
    double precision = 0.0;
    double recall = 0.0;
};

OverlapStats support_overlap(const Support& found, const Support& truth);

}  // namespace ksparse
