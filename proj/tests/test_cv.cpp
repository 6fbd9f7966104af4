#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ksparse/baselines.hpp"
#include "ksparse/cv.hpp"
#include "ksparse/linalg.hpp"
#include "ksparse/synthetic.hpp"
#include "test_util.hpp"

using namespace ksparse;
using testutil::gaussian_instance;

namespace {

// Planted instance with an exact target support size (seeds are scanned
// until the Bernoulli draw hits it).
PlantedInstance planted_with_k0(int n, double alpha, int k0, double sigma_xi2,
                                std::uint64_t seed_start) {
    SynthParams params;
    params.n = n;
    params.alpha = alpha;
    params.rho0 = static_cast<double>(k0) / n;
    params.sigma_x2 = 10.0;
    params.sigma_xi2 = sigma_xi2;
    for (std::uint64_t seed = seed_start;; ++seed) {
        params.seed = seed;
        PlantedInstance planted = generate_planted(params);
        if (planted.true_support.k() == k0) return planted;
    }
}

// LOO error computed with per-fold refits, the literal definition.
double explicit_refit_looe(const Instance& instance, const Support& support) {
    const int m = instance.m();
    double total = 0.0;
    for (int mu = 0; mu < m; ++mu) {
        std::vector<int> train;
        train.reserve(static_cast<std::size_t>(m - 1));
        for (int row = 0; row < m; ++row)
            if (row != mu) train.push_back(row);
        const Instance sub = instance.rows(train);
        const LsState fit = solve_restricted(sub, support);
        const double prediction = instance.a.row(mu).dot(fit.dense_coeffs());
        const double residual = instance.y(mu) - prediction;
        total += residual * residual;
    }
    return total / (2.0 * m);
}

bool reports_equal(const CvReport& a, const CvReport& b) {
    if (a.k_values != b.k_values || a.best_k != b.best_k) return false;
    if (a.looe != b.looe || a.frequencies != b.frequencies || a.failed_folds != b.failed_folds)
        return false;
    for (int k : a.k_values) {
        const auto& ca = a.cells.at(k);
        const auto& cb = b.cells.at(k);
        if (ca.size() != cb.size()) return false;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            if (ca[i].ok != cb[i].ok || !(ca[i].support == cb[i].support) ||
                ca[i].sq_err != cb[i].sq_err || ca[i].seed != cb[i].seed)
                return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("LOO plan: one singleton validation fold per row") {
    const FoldPlan plan = make_loo_folds(78);
    CHECK(plan.count() == 78);
    for (int f = 0; f < plan.count(); ++f) {
        const auto& fold = plan.folds[static_cast<std::size_t>(f)];
        CHECK(fold.validation == std::vector<int>{f});
        CHECK(fold.train.size() == 77);
    }
    CHECK(plan.min_train_rows() == 77);
}

TEST_CASE("k-fold plan: balanced blocks that partition the rows") {
    SUBCASE("even split") {
        const FoldPlan plan = make_kfold_folds(10, 5, 1);
        CHECK(plan.count() == 5);
        for (const auto& fold : plan.folds) CHECK(fold.validation.size() == 2);
    }
    SUBCASE("remainder distribution") {
        const FoldPlan plan = make_kfold_folds(10, 3, 1);
        std::multiset<std::size_t> sizes;
        for (const auto& fold : plan.folds) sizes.insert(fold.validation.size());
        CHECK(sizes == std::multiset<std::size_t>{4, 3, 3});
    }
    SUBCASE("validation sets are disjoint and cover all rows") {
        const FoldPlan plan = make_kfold_folds(23, 4, 9);
        std::set<int> seen;
        for (const auto& fold : plan.folds) {
            for (int row : fold.validation) CHECK(seen.insert(row).second);
            for (int row : fold.train) CHECK(!std::binary_search(fold.validation.begin(),
                                                                 fold.validation.end(), row));
            CHECK(fold.train.size() + fold.validation.size() == 23);
        }
        CHECK(seen.size() == 23);
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(make_kfold_folds(10, 1, 1), Error);
        CHECK_THROWS_AS(make_kfold_folds(10, 11, 1), Error);
        CHECK_THROWS_AS(make_loo_folds(1), Error);
    }
}

TEST_CASE("noiseless planted model gives a vanishing LOO error at the true K") {
    const PlantedInstance planted = planted_with_k0(30, 0.5, 3, 0.0, 100);
    const FoldPlan plan = make_loo_folds(planted.instance.m());
    const auto result = cv_error(planted.instance, 3, Schedule{}, plan, 7);
    CHECK(result.looe < 1e-10);
    CHECK(result.folds.size() == static_cast<std::size_t>(planted.instance.m()));
}

TEST_CASE("cv_error matches an exhaustive-per-fold oracle on most seeds") {
    // SA replaces enumeration inside each fold; the two agree within 5%
    // on at least 90 of 100 seeded trials.
    int close = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        const Instance instance = gaussian_instance(10, 12, 500 + static_cast<std::uint64_t>(trial));
        const FoldPlan plan = make_loo_folds(10);
        const auto sa_result = cv_error(instance, 2, Schedule{}, plan, 31 + trial);

        double oracle_sq = 0.0;
        for (int mu = 0; mu < 10; ++mu) {
            const Instance train = instance.rows(plan.folds[static_cast<std::size_t>(mu)].train);
            const ExhaustiveResult best = exhaustive_search_reference(train, 2);
            const LsState fit = solve_restricted(train, best.support);
            const double prediction = instance.a.row(mu).dot(fit.dense_coeffs());
            oracle_sq += (instance.y(mu) - prediction) * (instance.y(mu) - prediction);
        }
        const double oracle_looe = oracle_sq / 20.0;
        if (std::abs(sa_result.looe - oracle_looe) <= 0.05 * oracle_looe) ++close;
    }
    CHECK(close >= 90);
}

TEST_CASE("singleton sweep picks its only K") {
    const Instance instance = gaussian_instance(10, 12, 61);
    const FoldPlan plan = make_loo_folds(10);
    const CvReport report = sweep_k(instance, {3}, Schedule{}, plan, 5);
    CHECK(report.best_k == 3);
    CHECK(report.k_values == std::vector<int>{3});
}

TEST_CASE("looe vanishes for every K at or above the true sparsity (noiseless)") {
    const PlantedInstance planted = planted_with_k0(14, 0.7, 3, 0.0, 300);
    const Instance& instance = planted.instance;
    REQUIRE(instance.m() == 10);
    const FoldPlan plan = make_loo_folds(instance.m());
    const CvReport report = sweep_k(instance, {1, 2, 3, 4, 5, 6}, Schedule{}, plan, 11);
    for (int k : {3, 4, 5, 6}) CHECK(report.looe.at(k) < 1e-10);

    // enumeration oracle agrees that exact fits exist in every fold
    for (const auto& fold : plan.folds) {
        const Instance train = instance.rows(fold.train);
        CHECK(exhaustive_search_reference(train, 3).rss < 1e-18);
    }
}

TEST_CASE("parallel sweep equals the serial reference and is thread-count invariant") {
    const Instance instance = gaussian_instance(12, 15, 71);
    const FoldPlan plan = make_kfold_folds(12, 4, 3);
    const Schedule schedule{1e-8, 1.2, 30, 2.0};
    const std::vector<int> k_values{1, 2, 3};
    const CvReport serial = sweep_k_reference(instance, k_values, schedule, plan, 17);
    const CvReport par1 = sweep_k(instance, k_values, schedule, plan, 17, 1, 1);
    const CvReport par2 = sweep_k(instance, k_values, schedule, plan, 17, 1, 2);
    const CvReport par4 = sweep_k(instance, k_values, schedule, plan, 17, 1, 4);
    CHECK(reports_equal(serial, par1));
    CHECK(reports_equal(serial, par2));
    CHECK(reports_equal(serial, par4));
}

TEST_CASE("selection frequencies account for every fold") {
    const Instance instance = gaussian_instance(10, 12, 81);
    const FoldPlan plan = make_loo_folds(10);
    const std::vector<int> k_values{1, 2, 3};
    const CvReport report = sweep_k(instance, k_values, Schedule{}, plan, 23);
    for (int k : k_values) {
        int total = 0;
        for (const auto& [col, count] : report.frequencies.at(k)) {
            CHECK(count <= plan.count());
            total += count;
        }
        CHECK(total == k * plan.count());
    }
}

TEST_CASE("selection_frequency is a plain tally") {
    const std::vector<Support> disjoint{Support({0, 1}), Support({2, 3}), Support({4, 5})};
    const auto counts = selection_frequency(disjoint);
    CHECK(counts.size() == 6);
    for (const auto& [col, count] : counts) CHECK(count == 1);
}

TEST_CASE("a column proportional to y is selected in every fold at K = 1") {
    Instance base = gaussian_instance(12, 10, 91);
    const Instance instance(base.a, 2.0 * base.a.col(7));
    const FoldPlan plan = make_loo_folds(12);
    const CvReport report = sweep_k(instance, {1}, Schedule{}, plan, 3);
    CHECK(report.frequencies.at(1).at(7) == 12);
    CHECK(report.looe.at(1) < 1e-16);
}

TEST_CASE("sweep marks failed cells instead of aborting") {
    // Rank-1 design: no full-rank K=2 support exists anywhere, so every
    // (K=2, fold) cell fails while K=1 still completes.
    Eigen::MatrixXd a(6, 5);
    Philox gen(97, 0);
    Eigen::VectorXd direction(6);
    for (int r = 0; r < 6; ++r) direction(r) = gen.next_gaussian();
    for (int c = 0; c < 5; ++c) a.col(c) = direction * (c + 1.0);
    Eigen::VectorXd y(6);
    for (int r = 0; r < 6; ++r) y(r) = gen.next_gaussian();
    const Instance instance(a, y);
    const FoldPlan plan = make_loo_folds(6);

    const CvReport report = sweep_k(instance, {1, 2}, Schedule{1e-8, 1.1, 5, 1.0}, plan, 13);
    CHECK(report.failed_folds.count(1) == 0);
    CHECK(report.failed_folds.at(2) == 6);
    CHECK(std::isnan(report.looe.at(2)));
    CHECK(report.best_k == 1);
    for (const auto& cell : report.cells.at(2)) {
        CHECK(!cell.ok);
        CHECK(!cell.error.empty());
    }

    // the strict single-K API refuses instead
    CHECK_THROWS_AS(cv_error(instance, 2, Schedule{1e-8, 1.1, 5, 1.0}, plan, 13),
                    InitializationFailed);
}

TEST_CASE("sweep validates its inputs") {
    const Instance instance = gaussian_instance(8, 10, 99);
    const FoldPlan plan = make_loo_folds(8);
    CHECK_THROWS_AS(sweep_k(instance, {0}, Schedule{}, plan, 1), DimensionMismatch);
    CHECK_THROWS_AS(sweep_k(instance, {8}, Schedule{}, plan, 1), DimensionMismatch);
    CHECK_THROWS_AS(sweep_k(instance, {2, 2}, Schedule{}, plan, 1), Error);
    CHECK_THROWS_AS(sweep_k(instance, {}, Schedule{}, plan, 1), Error);
}

TEST_CASE("common-support LOO matches explicit per-fold refits") {
    for (std::uint64_t seed : {101u, 102u, 103u, 104u, 105u}) {
        const Instance instance = gaussian_instance(20, 30, seed);
        Philox rng(seed, 40);
        const Support support(uniform_subset(30, 4, rng));
        const double shortcut = common_support_looe(instance, support);
        const double literal = explicit_refit_looe(instance, support);
        CHECK(std::abs(shortcut - literal) <= 1e-10 * std::max(shortcut, literal));
    }
}

TEST_CASE("common-support LOO with an empty support is half the mean square response") {
    const Instance instance = gaussian_instance(15, 8, 111);
    const double value = common_support_looe(instance, Support(std::vector<int>{}));
    CHECK(value ==
          doctest::Approx(instance.y.squaredNorm() / (2.0 * instance.m())).epsilon(1e-14));
}

TEST_CASE("duplicated row with K = M-1 trips the leverage guard") {
    Instance base = gaussian_instance(5, 8, 121);
    base.a.row(4) = base.a.row(3);
    Eigen::VectorXd y = base.y;
    y(4) = y(3);
    const Instance instance(base.a, y);
    CHECK_THROWS_AS(common_support_looe(instance, Support({0, 1, 2, 3})), LeverageSingular);
}

TEST_CASE("common-support LOO preconditions") {
    const Instance instance = gaussian_instance(5, 8, 131);
    CHECK_THROWS_AS(common_support_looe(instance, Support({0, 1, 2, 3, 4})), DimensionMismatch);
    Instance dup = gaussian_instance(6, 6, 132);
    dup.a.col(3) = dup.a.col(0);
    CHECK_THROWS_AS(common_support_looe(Instance(dup.a, dup.y), Support({0, 3})), RankDeficient);
}

TEST_CASE("sweep is reproducible from the base seed") {
    const Instance instance = gaussian_instance(10, 12, 141);
    const FoldPlan plan = make_loo_folds(10);
    const Schedule schedule{1e-8, 1.2, 20, 2.0};
    const CvReport a = sweep_k(instance, {1, 2}, schedule, plan, 55);
    const CvReport b = sweep_k(instance, {1, 2}, schedule, plan, 55);
    CHECK(reports_equal(a, b));
    const CvReport c = sweep_k(instance, {1, 2}, schedule, plan, 56);
    CHECK(!reports_equal(a, c));
}
