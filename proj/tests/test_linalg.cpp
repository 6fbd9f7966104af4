#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <vector>

#include "ksparse/linalg.hpp"
#include "ksparse/rng.hpp"
#include "test_util.hpp"

using namespace ksparse;
using testutil::gaussian_instance;

namespace ksparse {
class LsStateTestAccess {
public:
    static void corrupt_rss(LsState& state, double value) { state.rss_ = value; }
};
}  // namespace ksparse

namespace {

// Independent oracle: solve the normal equations A(c)^T A(c) x = A(c)^T y
// with a dense LU factorization and form the residual directly.
double normal_equations_rss(const Instance& instance, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd sub(instance.m(), k);
    for (Eigen::Index j = 0; j < k; ++j) sub.col(j) = instance.a.col(cols[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd gram = sub.transpose() * sub;
    const Eigen::VectorXd rhs = sub.transpose() * instance.y;
    const Eigen::VectorXd x = gram.fullPivLu().solve(rhs);
    return 0.5 * (instance.y - sub * x).squaredNorm();
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("identity design decouples the coefficients") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const Instance instance(a, y);

    const LsState state = solve_restricted(instance, Support({0, 2}));
    CHECK(state.rss() == doctest::Approx(2.0).epsilon(1e-12));  // (1/2) * 2^2
    const Eigen::VectorXd coeffs = state.coeffs();
    CHECK(coeffs(0) == doctest::Approx(1.0));
    CHECK(coeffs(1) == doctest::Approx(3.0));

    const Eigen::VectorXd dense = state.dense_coeffs();
    CHECK(dense(1) == 0.0);  // off-support entries exactly zero
    CHECK(dense(0) == doctest::Approx(1.0));
    CHECK(dense(2) == doctest::Approx(3.0));
}

TEST_CASE("empty support fit is half the response energy") {
    const Instance instance = gaussian_instance(7, 5, 11);
    const LsState state = solve_restricted(instance, Support(std::vector<int>{}));
    CHECK(state.rss() == doctest::Approx(0.5 * instance.y.squaredNorm()).epsilon(1e-14));
    CHECK(state.k() == 0);
    CHECK(state.dense_coeffs().isZero(0.0));
}

TEST_CASE("solve matches an independent normal-equations oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const Instance instance = gaussian_instance(6, 10, seed);
        Philox rng(seed, 2000);
        const auto cols = uniform_subset(10, 3, rng);
        const LsState state = solve_restricted(instance, Support(cols));
        CHECK(rel_diff(state.rss(), normal_equations_rss(instance, cols)) < 1e-10);
    }
}

TEST_CASE("swap then reverse swap is an involution") {
    const Instance instance = gaussian_instance(8, 12, 21);
    const LsState base = solve_restricted(instance, Support({1, 4, 7}));
    const LsState swapped = swap_update(base, 4, 9, instance);
    const LsState back = swap_update(swapped, 9, 4, instance);
    CHECK(rel_diff(back.rss(), base.rss()) < 1e-10);
    CHECK(back.support() == base.support());
}

TEST_CASE("swap agrees with a from-scratch solve") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const Instance instance = gaussian_instance(10, 16, seed);
        Philox rng(seed, 3000);
        LsState state = solve_restricted(instance, Support(uniform_subset(16, 4, rng)));
        for (int trial = 0; trial < 50; ++trial) {
            const auto& ones = state.support().indices();
            const int out_idx = ones[rng.next_below(ones.size())];
            int in_idx;
            do {
                in_idx = static_cast<int>(rng.next_below(16));
            } while (state.support().contains(in_idx));
            state = swap_update(state, out_idx, in_idx, instance);
            const LsState scratch = solve_restricted(instance, state.support());
            CHECK(rel_diff(state.rss(), scratch.rss()) < 1e-8);
        }
    }
}

TEST_CASE("swapping in a duplicate of the outgoing column keeps the RSS") {
    Instance instance = gaussian_instance(9, 8, 41);
    instance.a.col(6) = instance.a.col(2);
    const LsState base = solve_restricted(instance, Support({1, 2, 4}));
    const LsState swapped = swap_update(base, 2, 6, instance);
    CHECK(rel_diff(swapped.rss(), base.rss()) < 1e-10);
}

TEST_CASE("rank-breaking incoming column is reported, not applied") {
    Instance instance = gaussian_instance(9, 8, 43);
    instance.a.col(6) = instance.a.col(1);
    const LsState base = solve_restricted(instance, Support({1, 2, 4}));
    // col 6 duplicates col 1, which stays in the support
    CHECK(!try_swap_update(base, 4, 6, instance).has_value());
    CHECK_THROWS_AS(swap_update(base, 4, 6, instance), RankDeficient);
}

TEST_CASE("index preconditions are enforced") {
    const Instance instance = gaussian_instance(6, 6, 44);
    const LsState base = solve_restricted(instance, Support({0, 1}));
    CHECK_THROWS_AS(swap_update(base, 3, 5, instance), IndexError);   // 3 not in support
    CHECK_THROWS_AS(swap_update(base, 0, 1, instance), IndexError);   // 1 already in support
    CHECK_THROWS_AS(swap_update(base, 0, 99, instance), IndexError);  // out of range
    CHECK_THROWS_AS(solve_restricted(instance, Support({0, 7})), DimensionMismatch);
    CHECK_THROWS_AS(Support({2, 2}), DimensionMismatch);
}

TEST_CASE("collinear supports and K > M are rank errors") {
    Instance instance = gaussian_instance(8, 10, 45);
    instance.a.col(5) = 2.0 * instance.a.col(1);
    CHECK_THROWS_AS(solve_restricted(instance, Support({1, 5})), RankDeficient);
    const Instance wide = gaussian_instance(3, 10, 46);
    CHECK_THROWS_AS(solve_restricted(wide, Support({0, 1, 2, 3})), RankDeficient);
}

TEST_CASE("refresh is a no-op on a fresh state and alarms on corruption") {
    const Instance instance = gaussian_instance(12, 20, 51);
    const LsState state = solve_restricted(instance, Support({2, 5, 11}));
    const LsState again = refresh(state, instance);
    CHECK(rel_diff(again.rss(), state.rss()) < 1e-12);

    LsState corrupted = state;
    LsStateTestAccess::corrupt_rss(corrupted, state.rss() + 1.0);
    CHECK_THROWS_AS(refresh(corrupted, instance), DriftExceeded);
}

TEST_CASE("maintained RSS stays faithful over 1e4 accepted swaps") {
    const Instance instance = gaussian_instance(50, 200, 61);
    Philox rng(61, 4000);
    LsState state = solve_restricted(instance, Support(uniform_subset(200, 10, rng)));
    int accepted = 0;
    while (accepted < 10000) {
        const auto& ones = state.support().indices();
        const int out_idx = ones[rng.next_below(ones.size())];
        int in_idx;
        do {
            in_idx = static_cast<int>(rng.next_below(200));
        } while (state.support().contains(in_idx));
        auto next = try_swap_update(state, out_idx, in_idx, instance);
        if (next) {
            state = std::move(*next);
            ++accepted;
        }
    }
    const LsState scratch = solve_restricted(instance, state.support());
    CHECK(rel_diff(state.rss(), scratch.rss()) < 1e-8);
    CHECK_NOTHROW(refresh(state, instance));
}

TEST_CASE("swap-path independence") {
    const Instance instance = gaussian_instance(10, 14, 71);
    const Support start({0, 3, 6});
    const Support target({2, 5, 9});
    // Two different swap orders from start to target.
    LsState a = solve_restricted(instance, start);
    a = swap_update(a, 0, 2, instance);
    a = swap_update(a, 3, 5, instance);
    a = swap_update(a, 6, 9, instance);
    LsState b = solve_restricted(instance, start);
    b = swap_update(b, 6, 5, instance);
    b = swap_update(b, 0, 9, instance);
    b = swap_update(b, 3, 2, instance);
    CHECK(a.support() == target);
    CHECK(b.support() == target);
    CHECK(rel_diff(a.rss(), b.rss()) < 1e-8);
}

TEST_CASE("RSS is nonincreasing along nested supports") {
    const Instance instance = gaussian_instance(12, 15, 81);
    Philox rng(81, 5000);
    for (int trial = 0; trial < 20; ++trial) {
        const auto big = uniform_subset(15, 6, rng);
        std::vector<int> small(big.begin(), big.begin() + 3);
        const double rss_small = solve_restricted(instance, Support(small)).rss();
        const double rss_big = solve_restricted(instance, Support(big)).rss();
        CHECK(rss_big <= rss_small + 1e-12);
    }
}

TEST_CASE("per-swap cost scales like O(MK + K^2)") {
    // Coarse wall-clock check: doubling K at fixed M should cost at most
    // ~4x per swap; assert within an extra 2x tolerance factor.
    const int m = 3000;
    const int n = 80;
    const Instance instance = gaussian_instance(m, n, 91);

    auto time_per_swap = [&](int k) {
        Philox rng(91, 6000 + static_cast<std::uint64_t>(k));
        LsState state = solve_restricted(instance, Support(uniform_subset(n, k, rng)));
        // warm-up pass, then timed pass over the same move pattern
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            for (int i = 0; i < 400; ++i) {
                const auto& ones = state.support().indices();
                const int out_idx = ones[rng.next_below(ones.size())];
                int in_idx;
                do {
                    in_idx = static_cast<int>(rng.next_below(n));
                } while (state.support().contains(in_idx));
                state = swap_update(state, out_idx, in_idx, instance);
            }
            const auto stop = std::chrono::steady_clock::now();
            best = std::min(best,
                            std::chrono::duration<double>(stop - start).count() / 400.0);
        }
        return best;
    };

    const double t_small = time_per_swap(8);
    const double t_large = time_per_swap(16);
    CHECK(t_large / t_small < 8.0);
}
