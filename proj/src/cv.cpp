#include "ksparse/cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ksparse/linalg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ksparse {

int FoldPlan::min_train_rows() const {
    int smallest = std::numeric_limits<int>::max();
    for (const auto& fold : folds) smallest = std::min(smallest, static_cast<int>(fold.train.size()));
    return folds.empty() ? 0 : smallest;
}

FoldPlan make_loo_folds(int m) {
    if (m < 2) throw Error("LOO needs at least 2 rows");
    FoldPlan plan;
    plan.kind = FoldKind::loo;
    plan.folds.resize(static_cast<std::size_t>(m));
    for (int mu = 0; mu < m; ++mu) {
        auto& fold = plan.folds[static_cast<std::size_t>(mu)];
        fold.validation = {mu};
        fold.train.reserve(static_cast<std::size_t>(m - 1));
        for (int row = 0; row < m; ++row)
            if (row != mu) fold.train.push_back(row);
    }
    return plan;
}

FoldPlan make_kfold_folds(int m, int k, std::uint64_t shuffle_seed) {
    if (m < 2) throw Error("k-fold needs at least 2 rows");
    if (k < 2 || k > m) throw Error("k-fold needs 2 <= k <= m");

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    Philox rng(shuffle_seed, 3);  // stream 3: fold shuffling
    for (int i = m - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[rng.next_below(static_cast<std::uint64_t>(i) + 1)]);

    FoldPlan plan;
    plan.kind = FoldKind::kfold;
    plan.folds.resize(static_cast<std::size_t>(k));
    // First (m mod k) blocks take the extra row.
    const int base = m / k;
    const int extra = m % k;
    int cursor = 0;
    for (int f = 0; f < k; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        auto& fold = plan.folds[static_cast<std::size_t>(f)];
        fold.validation.assign(order.begin() + cursor, order.begin() + cursor + size);
        std::sort(fold.validation.begin(), fold.validation.end());
        cursor += size;
    }
    for (int f = 0; f < k; ++f) {
        auto& fold = plan.folds[static_cast<std::size_t>(f)];
        fold.train.reserve(static_cast<std::size_t>(m) - fold.validation.size());
        for (int row = 0; row < m; ++row)
            if (!std::binary_search(fold.validation.begin(), fold.validation.end(), row))
                fold.train.push_back(row);
    }
    return plan;
}

namespace {

// One (K, fold) cell: anneal on the training rows (restarts pick the best),
// refit on the training rows only, predict the held-out rows. Never throws;
// failures come back marked.
CellOutcome evaluate_cell(const Instance& instance, int k, const Schedule& schedule,
                          const FoldPlan::Fold& fold, std::uint64_t cell_seed, int restarts) {
    CellOutcome outcome;
    outcome.seed = cell_seed;
    outcome.n_validation = static_cast<int>(fold.validation.size());
    try {
        const Instance train = instance.rows(fold.train);
        Support best;
        double best_rss = std::numeric_limits<double>::infinity();
        for (int restart = 0; restart < restarts; ++restart) {
            Philox rng(cell_seed, static_cast<std::uint64_t>(restart));
            SaResult sa = anneal(train, k, schedule, std::nullopt, rng);
            if (sa.best_rss < best_rss) {
                best_rss = sa.best_rss;
                best = sa.best_support;
            }
        }
        const LsState fit = solve_restricted(train, best);
        const Eigen::VectorXd coeffs = fit.dense_coeffs();
        double sq_err = 0.0;
        for (int row : fold.validation) {
            const double prediction = instance.a.row(row).dot(coeffs);
            const double residual = instance.y(row) - prediction;
            sq_err += residual * residual;
        }
        outcome.ok = true;
        outcome.support = best;
        outcome.sq_err = sq_err;
    } catch (const std::exception& err) {
        outcome.error = err.what();
    }
    return outcome;
}

double assemble_looe(const std::vector<CellOutcome>& cells, int* failed_out) {
    double sq_err = 0.0;
    long n_rows = 0;
    int failed = 0;
    for (const auto& cell : cells) {
        if (cell.ok) {
            sq_err += cell.sq_err;
            n_rows += cell.n_validation;
        } else {
            ++failed;
        }
    }
    if (failed_out) *failed_out = failed;
    if (n_rows == 0) return std::numeric_limits<double>::quiet_NaN();
    return sq_err / (2.0 * static_cast<double>(n_rows));
}

void validate_sweep_inputs(const Instance& instance, const std::vector<int>& k_values,
                           const Schedule& schedule, const FoldPlan& plan, int restarts) {
    schedule.validate();
    if (restarts < 1) throw Error("restarts must be >= 1");
    if (plan.folds.empty()) throw Error("fold plan is empty");
    if (k_values.empty()) throw Error("no K values to sweep");
    const int limit = std::min(plan.min_train_rows(), instance.n() - 1);
    for (int k : k_values)
        if (k < 1 || k > limit)
            throw DimensionMismatch("K=" + std::to_string(k) +
                                    " outside 1 <= K <= min(train rows, N-1) = " +
                                    std::to_string(limit));
    std::vector<int> sorted = k_values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error("duplicate K in sweep set");
}

CvReport assemble_report(const std::vector<int>& k_values,
                         std::map<int, std::vector<CellOutcome>> cells) {
    CvReport report;
    report.k_values = k_values;
    report.cells = std::move(cells);
    for (int k : k_values) {
        const auto& outcomes = report.cells.at(k);
        int failed = 0;
        report.looe[k] = assemble_looe(outcomes, &failed);
        if (failed > 0) report.failed_folds[k] = failed;
        std::vector<Support> supports;
        supports.reserve(outcomes.size());
        for (const auto& cell : outcomes)
            if (cell.ok) supports.push_back(cell.support);
        report.frequencies[k] = selection_frequency(supports);
    }
    // argmin over finite looe values; exact ties go to the smaller K.
    double best = std::numeric_limits<double>::infinity();
    report.best_k = k_values.front();
    bool found = false;
    for (int k : k_values) {
        const double value = report.looe.at(k);
        if (std::isfinite(value) && (!found || value < best)) {
            best = value;
            report.best_k = k;
            found = true;
        }
    }
    return report;
}

}  // namespace

CvErrorResult cv_error(const Instance& instance, int k, const Schedule& schedule,
                       const FoldPlan& plan, std::uint64_t base_seed, int restarts) {
    validate_sweep_inputs(instance, {k}, schedule, plan, restarts);
    CvErrorResult result;
    result.folds.resize(plan.folds.size());
    for (int f = 0; f < plan.count(); ++f) {
        const std::uint64_t seed =
            derive_seed(base_seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(f));
        result.folds[static_cast<std::size_t>(f)] =
            evaluate_cell(instance, k, schedule, plan.folds[static_cast<std::size_t>(f)], seed,
                          restarts);
        if (!result.folds[static_cast<std::size_t>(f)].ok)
            throw InitializationFailed("fold " + std::to_string(f) + " failed: " +
                                       result.folds[static_cast<std::size_t>(f)].error);
    }
    result.looe = assemble_looe(result.folds, nullptr);
    return result;
}

CvReport sweep_k_reference(const Instance& instance, const std::vector<int>& k_values,
                           const Schedule& schedule, const FoldPlan& plan,
                           std::uint64_t base_seed, int restarts) {
    validate_sweep_inputs(instance, k_values, schedule, plan, restarts);
    std::map<int, std::vector<CellOutcome>> cells;
    for (int k : k_values) {
        auto& outcomes = cells[k];
        outcomes.resize(plan.folds.size());
        for (int f = 0; f < plan.count(); ++f) {
            const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(k),
                                                   static_cast<std::uint64_t>(f));
            outcomes[static_cast<std::size_t>(f)] =
                evaluate_cell(instance, k, schedule, plan.folds[static_cast<std::size_t>(f)],
                              seed, restarts);
        }
    }
    return assemble_report(k_values, std::move(cells));
}

CvReport sweep_k(const Instance& instance, const std::vector<int>& k_values,
                 const Schedule& schedule, const FoldPlan& plan, std::uint64_t base_seed,
                 int restarts, int threads) {
    validate_sweep_inputs(instance, k_values, schedule, plan, restarts);

    struct Cell {
        int k;
        int fold;
    };
    std::vector<Cell> todo;
    todo.reserve(k_values.size() * plan.folds.size());
    for (int k : k_values)
        for (int f = 0; f < plan.count(); ++f) todo.push_back({k, f});
    std::vector<CellOutcome> outcomes(todo.size());

    const auto total = static_cast<std::int64_t>(todo.size());
#ifdef _OPENMP
    const int n_threads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (std::int64_t i = 0; i < total; ++i) {
        const auto [k, f] = todo[static_cast<std::size_t>(i)];
        const std::uint64_t seed =
            derive_seed(base_seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(f));
        outcomes[static_cast<std::size_t>(i)] = evaluate_cell(
            instance, k, schedule, plan.folds[static_cast<std::size_t>(f)], seed, restarts);
    }
#else
    (void)threads;
    for (std::int64_t i = 0; i < total; ++i) {
        const auto [k, f] = todo[static_cast<std::size_t>(i)];
        const std::uint64_t seed =
            derive_seed(base_seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(f));
        outcomes[static_cast<std::size_t>(i)] = evaluate_cell(
            instance, k, schedule, plan.folds[static_cast<std::size_t>(f)], seed, restarts);
    }
#endif

    std::map<int, std::vector<CellOutcome>> cells;
    for (std::size_t i = 0; i < todo.size(); ++i)
        cells[todo[i].k].push_back(std::move(outcomes[i]));  // todo is (K, fold)-ordered
    return assemble_report(k_values, std::move(cells));
}

std::map<int, int> selection_frequency(const std::vector<Support>& per_fold_supports) {
    std::map<int, int> counts;
    for (const auto& support : per_fold_supports)
        for (int col : support.indices()) ++counts[col];
    return counts;
}

double common_support_looe(const Instance& instance, const Support& support) {
    const int m = instance.m();
    const int k = support.k();
    if (k > m - 1)
        throw DimensionMismatch("common-support LOO needs |support| <= M-1, got K=" +
                                std::to_string(k) + " M=" + std::to_string(m));

    if (k == 0) {
        // No regressors: every LOO prediction is 0 and leverages vanish.
        return instance.y.squaredNorm() / (2.0 * m);
    }

    const LsState fit = solve_restricted(instance, support);  // throws RankDeficient
    Eigen::MatrixXd sub(m, k);
    for (int j = 0; j < k; ++j) sub.col(j) = instance.a.col(support.indices()[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd residual = instance.y - sub * fit.coeffs();

    // Leverages: h_mu = || L^{-1} (A_S)^T e_mu ||^2, all rows in one
    // triangular solve.
    const Eigen::MatrixXd solved =
        fit.factor().triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(sub.transpose()));
    double total = 0.0;
    for (int row = 0; row < m; ++row) {
        const double leverage = solved.col(row).squaredNorm();
        if (leverage >= 1.0 - 1e-12)
            throw LeverageSingular("leverage " + std::to_string(leverage) + " at row " +
                                   std::to_string(row) +
                                   "; the LOO system on this support is singular");
        const double loo_residual = residual(row) / (1.0 - leverage);
        total += loo_residual * loo_residual;
    }
    return total / (2.0 * m);
}

}  // namespace ksparse
