#include "ksparse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>
#include <vector>

#include "ksparse/errors.hpp"

namespace ksparse {

int SynthParams::m() const {
    return std::max(1, static_cast<int>(std::lround(alpha * n)));
}

void SynthParams::validate() const {
    if (n < 1) throw Error("synth: n must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("synth: alpha must be in (0, 1]");
    if (!(rho0 > 0.0 && rho0 <= 1.0)) throw Error("synth: rho0 must be in (0, 1]");
    if (!(sigma_x2 > 0.0)) throw Error("synth: sigma_x2 must be > 0");
    if (!(sigma_xi2 >= 0.0)) throw Error("synth: sigma_xi2 must be >= 0");
}

PlantedInstance generate_planted(const SynthParams& params) {
    params.validate();
    const int n = params.n;
    const int m = params.m();

    Philox rng_a(params.seed, 0);
    Philox rng_x(params.seed, 1);
    Philox rng_xi(params.seed, 2);

    const double col_sd = std::sqrt(1.0 / n);
    Eigen::MatrixXd a(m, n);
    for (int row = 0; row < m; ++row)
        for (int col = 0; col < n; ++col) a(row, col) = col_sd * rng_a.next_gaussian();

    const double x_sd = std::sqrt(params.sigma_x2);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    std::vector<int> ones;
    for (int i = 0; i < n; ++i) {
        if (rng_x.next_double() < params.rho0) {
            x0(i) = x_sd * rng_x.next_gaussian();
            ones.push_back(i);
        }
    }

    const double xi_sd = std::sqrt(params.sigma_xi2);
    Eigen::VectorXd y = a * x0;
    for (int row = 0; row < m; ++row) y(row) += xi_sd * rng_xi.next_gaussian();

    return PlantedInstance{Instance(std::move(a), std::move(y)), std::move(x0),
                           Support(std::move(ones))};
}

double generalization_error_exact(const Eigen::VectorXd& xhat, const PlantedInstance& planted,
                                  const SynthParams& params) {
    if (xhat.size() != planted.x0.size())
        throw DimensionMismatch("xhat length " + std::to_string(xhat.size()) +
                                " does not match n=" + std::to_string(planted.x0.size()));
    const double dist2 = (xhat - planted.x0).squaredNorm();
    return 0.5 * (dist2 / params.n + params.sigma_xi2);
}

std::pair<double, double> generalization_error_empirical(const Eigen::VectorXd& xhat,
                                                         const PlantedInstance& planted,
                                                         const SynthParams& params, long n_fresh,
                                                         Philox& rng) {
    if (xhat.size() != planted.x0.size())
        throw DimensionMismatch("xhat length does not match the planted instance");
    if (n_fresh < 2) throw Error("n_fresh must be >= 2");

    const int n = params.n;
    const double col_sd = std::sqrt(1.0 / n);
    const double xi_sd = std::sqrt(params.sigma_xi2);
    const Eigen::VectorXd diff = planted.x0 - xhat;

    double sum = 0.0;
    double sum_sq = 0.0;
    for (long s = 0; s < n_fresh; ++s) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += col_sd * rng.next_gaussian() * diff(i);
        const double residual = dot + xi_sd * rng.next_gaussian();
        const double value = 0.5 * residual * residual;
        sum += value;
        sum_sq += value * value;
    }
    const double mean = sum / static_cast<double>(n_fresh);
    const double var =
        std::max(0.0, (sum_sq - static_cast<double>(n_fresh) * mean * mean) /
                          static_cast<double>(n_fresh - 1));
    return {mean, std::sqrt(var / static_cast<double>(n_fresh))};
}

OverlapStats support_overlap(const Support& found, const Support& truth) {
    std::vector<int> common;
    std::set_intersection(found.indices().begin(), found.indices().end(),
                          truth.indices().begin(), truth.indices().end(),
                          std::back_inserter(common));
    OverlapStats stats;
    stats.intersection = static_cast<int>(common.size());
    stats.precision = found.k() > 0 ? static_cast<double>(stats.intersection) / found.k() : 0.0;
    stats.recall = truth.k() > 0 ? static_cast<double>(stats.intersection) / truth.k() : 0.0;
    return stats;
}

}  // namespace ksparse
