#include "ksparse/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ksparse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Next k-subset in lexicographic order; false when exhausted.
bool next_combination(std::vector<int>& comb, int n) {
    const int k = static_cast<int>(comb.size());
    for (int i = k - 1; i >= 0; --i) {
        if (comb[i] < n - k + i) {
            ++comb[i];
            for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

double support_energy(const Instance& instance, const std::vector<int>& cols) {
    try {
        return solve_restricted(instance, Support(cols)).rss();
    } catch (const RankDeficient&) {
        return kInf;
    }
}

int resolve_threads(int threads) {
#ifdef _OPENMP
    return threads > 0 ? threads : omp_get_max_threads();
#else
    (void)threads;
    return 1;
#endif
}

}  // namespace

std::uint64_t count_supports(int n, int k, std::uint64_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    // C(n,k) stepwise; bail out as soon as the cap is crossed.
    long double total = 1.0L;
    for (int i = 1; i <= k; ++i) {
        total = total * (n - k + i) / i;
        if (total > 4.0L * static_cast<long double>(cap) && i < k)
            throw TooLarge("C(" + std::to_string(n) + "," + std::to_string(k) +
                           ") exceeds the enumeration cap of " + std::to_string(cap));
    }
    const auto count = static_cast<std::uint64_t>(std::llroundl(total));
    if (count > cap)
        throw TooLarge("C(" + std::to_string(n) + "," + std::to_string(k) + ") = " +
                       std::to_string(count) + " exceeds the enumeration cap of " +
                       std::to_string(cap));
    return count;
}

std::vector<int> support_unrank(int n, int k, std::uint64_t rank) {
    std::vector<int> comb(static_cast<std::size_t>(k));
    int col = 0;
    for (int i = 0; i < k; ++i) {
        for (;; ++col) {
            // Number of subsets starting here: C(n - col - 1, k - i - 1).
            long double below = 1.0L;
            const int rest_n = n - col - 1;
            const int rest_k = k - i - 1;
            for (int j = 1; j <= rest_k; ++j) below = below * (rest_n - rest_k + j) / j;
            const auto count = static_cast<std::uint64_t>(std::llroundl(below));
            if (rank < count) break;
            rank -= count;
        }
        comb[static_cast<std::size_t>(i)] = col++;
    }
    return comb;
}

std::uint64_t support_rank(int n, const std::vector<int>& indices) {
    const int k = static_cast<int>(indices.size());
    std::uint64_t rank = 0;
    int prev = -1;
    for (int i = 0; i < k; ++i) {
        for (int col = prev + 1; col < indices[static_cast<std::size_t>(i)]; ++col) {
            long double below = 1.0L;
            const int rest_n = n - col - 1;
            const int rest_k = k - i - 1;
            for (int j = 1; j <= rest_k; ++j) below = below * (rest_n - rest_k + j) / j;
            rank += static_cast<std::uint64_t>(std::llroundl(below));
        }
        prev = indices[static_cast<std::size_t>(i)];
    }
    return rank;
}

OmpResult omp_fit(const Instance& instance, int k) {
    const int n = instance.n();
    const int m = instance.m();
    if (k < 0 || k > std::min(m, n))
        throw DimensionMismatch("omp needs 0 <= K <= min(M, N), got K=" + std::to_string(k));

    OmpResult result;
    result.state = solve_restricted(instance, Support(std::vector<int>{}));
    Eigen::VectorXd residual = instance.y;
    std::vector<int> chosen;

    for (int round = 0; round < k; ++round) {
        // Score all unselected columns, then try them best-first: a column
        // that breaks full rank is flagged and the next best is taken.
        std::vector<std::pair<double, int>> scores;
        scores.reserve(static_cast<std::size_t>(n));
        for (int col = 0; col < n; ++col) {
            if (std::find(chosen.begin(), chosen.end(), col) != chosen.end()) continue;
            scores.emplace_back(std::abs(instance.a.col(col).dot(residual)), col);
        }
        std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });

        bool added = false;
        for (const auto& [score, col] : scores) {
            std::vector<int> trial = chosen;
            trial.push_back(col);
            try {
                LsState state = solve_restricted(instance, Support(trial));
                chosen = std::move(trial);
                result.state = std::move(state);
                added = true;
                break;
            } catch (const RankDeficient&) {
                result.skipped_cols.push_back(col);
            }
        }
        if (!added)
            throw RankDeficient("omp: no column extends the support to full rank at round " +
                                std::to_string(round + 1));
        residual = instance.y - instance.a * result.state.dense_coeffs();
    }
    result.support = result.state.support();
    return result;
}

ExhaustiveResult exhaustive_search_reference(const Instance& instance, int k, std::uint64_t cap) {
    if (k < 0 || k > instance.n())
        throw DimensionMismatch("exhaustive needs 0 <= K <= N, got K=" + std::to_string(k));
    count_supports(instance.n(), k, cap);
    if (k > instance.m())
        throw RankDeficient("exhaustive: K exceeds M, every support is underdetermined");

    std::vector<int> comb(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;

    ExhaustiveResult best;
    best.rss = kInf;
    std::vector<int> best_comb;
    do {
        const double rss = support_energy(instance, comb);
        if (rss < best.rss) {
            best.rss = rss;
            best_comb = comb;
        }
    } while (next_combination(comb, instance.n()));
    if (!std::isfinite(best.rss))
        throw RankDeficient("exhaustive: every size-" + std::to_string(k) +
                            " support is rank-deficient");
    best.support = Support(best_comb);
    return best;
}

ExhaustiveResult exhaustive_search(const Instance& instance, int k, std::uint64_t cap,
                                   int threads) {
    if (k < 0 || k > instance.n())
        throw DimensionMismatch("exhaustive needs 0 <= K <= N, got K=" + std::to_string(k));
    const std::uint64_t total = count_supports(instance.n(), k, cap);
    if (k > instance.m())
        throw RankDeficient("exhaustive: K exceeds M, every support is underdetermined");
    const int n_threads = resolve_threads(threads);
    if (n_threads <= 1 || total < 64) return exhaustive_search_reference(instance, k, cap);

    // Each worker scans a contiguous rank range; the merge prefers lower RSS
    // and breaks exact ties toward the smaller rank, which is the
    // lexicographic rule of the serial scan.
    std::vector<double> best_rss(static_cast<std::size_t>(n_threads), kInf);
    std::vector<std::uint64_t> best_rank(static_cast<std::size_t>(n_threads), 0);
#ifdef _OPENMP
#pragma omp parallel num_threads(n_threads)
    {
        const int tid = omp_get_thread_num();
        const std::uint64_t begin = total * static_cast<std::uint64_t>(tid) /
                                    static_cast<std::uint64_t>(n_threads);
        const std::uint64_t end = total * (static_cast<std::uint64_t>(tid) + 1) /
                                  static_cast<std::uint64_t>(n_threads);
        if (begin < end) {
            std::vector<int> comb = support_unrank(instance.n(), k, begin);
            for (std::uint64_t rank = begin; rank < end; ++rank) {
                const double rss = support_energy(instance, comb);
                if (rss < best_rss[static_cast<std::size_t>(tid)]) {
                    best_rss[static_cast<std::size_t>(tid)] = rss;
                    best_rank[static_cast<std::size_t>(tid)] = rank;
                }
                next_combination(comb, instance.n());
            }
        }
    }
#endif
    int winner = -1;
    for (int t = 0; t < n_threads; ++t) {
        if (!std::isfinite(best_rss[static_cast<std::size_t>(t)])) continue;
        if (winner < 0 || best_rss[static_cast<std::size_t>(t)] < best_rss[static_cast<std::size_t>(winner)] ||
            (best_rss[static_cast<std::size_t>(t)] == best_rss[static_cast<std::size_t>(winner)] &&
             best_rank[static_cast<std::size_t>(t)] < best_rank[static_cast<std::size_t>(winner)]))
            winner = t;
    }
    if (winner < 0)
        throw RankDeficient("exhaustive: every size-" + std::to_string(k) +
                            " support is rank-deficient");
    ExhaustiveResult best;
    best.rss = best_rss[static_cast<std::size_t>(winner)];
    best.support = Support(support_unrank(instance.n(), k, best_rank[static_cast<std::size_t>(winner)]));
    return best;
}

double BoltzmannTable::expected_energy() const {
    double mean = 0.0;
    for (std::size_t i = 0; i < energies.size(); ++i)
        if (probabilities[i] > 0.0) mean += probabilities[i] * energies[i];
    return mean;
}

BoltzmannTable enumerate_boltzmann(const Instance& instance, int k, double beta,
                                   std::uint64_t cap, int threads) {
    if (!(beta >= 0.0)) throw Error("enumerate_boltzmann: beta must be >= 0");
    if (k < 0 || k > instance.n())
        throw DimensionMismatch("enumerate_boltzmann needs 0 <= K <= N, got K=" +
                                std::to_string(k));
    const std::uint64_t total = count_supports(instance.n(), k, cap);

    BoltzmannTable table;
    table.n = instance.n();
    table.k = k;
    table.beta = beta;
    table.energies.assign(total, kInf);

    const int n_threads = resolve_threads(threads);
    // Slot i depends only on support i: embarrassingly parallel, and the
    // result is identical at every thread count.
#ifdef _OPENMP
#pragma omp parallel num_threads(n_threads)
    {
        const int tid = omp_get_thread_num();
        const std::uint64_t begin = total * static_cast<std::uint64_t>(tid) /
                                    static_cast<std::uint64_t>(n_threads);
        const std::uint64_t end = total * (static_cast<std::uint64_t>(tid) + 1) /
                                  static_cast<std::uint64_t>(n_threads);
        if (begin < end) {
            std::vector<int> comb = support_unrank(instance.n(), k, begin);
            for (std::uint64_t rank = begin; rank < end; ++rank) {
                table.energies[rank] = support_energy(instance, comb);
                next_combination(comb, instance.n());
            }
        }
    }
#else
    {
        std::vector<int> comb(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
        for (std::uint64_t rank = 0; rank < total; ++rank) {
            table.energies[rank] = support_energy(instance, comb);
            next_combination(comb, instance.n());
        }
    }
#endif

    for (std::uint64_t rank = 0; rank < total; ++rank)
        if (!std::isfinite(table.energies[rank])) table.rank_deficient.push_back(rank);
    if (table.rank_deficient.size() == total)
        throw RankDeficient("enumerate_boltzmann: every support is rank-deficient");

    // log-sum-exp over -beta * E, skipping +inf energies.
    double min_energy = kInf;
    for (double e : table.energies) min_energy = std::min(min_energy, e);
    double sum = 0.0;
    for (double e : table.energies)
        if (std::isfinite(e)) sum += std::exp(-beta * (e - min_energy));
    table.log_g = -beta * min_energy + std::log(sum);

    table.probabilities.assign(total, 0.0);
    for (std::uint64_t rank = 0; rank < total; ++rank)
        if (std::isfinite(table.energies[rank]))
            table.probabilities[rank] = std::exp(-beta * table.energies[rank] - table.log_g);
    return table;
}

}  // namespace ksparse
