// Benchmark: serial reference implementations against the OpenMP-parallel
// drivers, plus the raw swap-kernel throughput.
//
//   ksparse_bench [n] [alpha] [sweep_k_max]
//
// Prints one line per configuration with wall time and speedup, and fails
// (exit 1) if a parallel result ever disagrees with its serial reference.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ksparse/baselines.hpp"
#include "ksparse/cv.hpp"
#include "ksparse/linalg.hpp"
#include "ksparse/sampler.hpp"
#include "ksparse/synthetic.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ksparse;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 60;
    const double alpha = argc > 2 ? std::atof(argv[2]) : 0.5;
    const int k_max = argc > 3 ? std::atoi(argv[3]) : 6;

    SynthParams params;
    params.n = n;
    params.alpha = alpha;
    params.rho0 = 0.1;
    params.seed = 1;
    const PlantedInstance planted = generate_planted(params);
    const Instance& instance = planted.instance;
    std::printf("instance: M=%d N=%d, planted support %d, %d hardware threads\n\n",
                instance.m(), instance.n(), planted.true_support.k(), hardware_threads());

    bool all_consistent = true;

    // --- CV sweep: (K, fold) cells across the worker pool ---------------
    {
        std::vector<int> k_values;
        for (int k = 2; k <= k_max; k += 2) k_values.push_back(k);
        const FoldPlan plan = make_loo_folds(instance.m());
        const Schedule schedule;  // paper-default ladder
        const std::uint64_t seed = 7;

        auto start = std::chrono::steady_clock::now();
        const CvReport reference = sweep_k_reference(instance, k_values, schedule, plan, seed);
        const double t_serial = seconds_since(start);
        std::printf("cv sweep  %-28s %8.3f s\n", "serial reference", t_serial);

        for (int threads = 1; threads <= hardware_threads(); threads *= 2) {
            start = std::chrono::steady_clock::now();
            const CvReport parallel =
                sweep_k(instance, k_values, schedule, plan, seed, 1, threads);
            const double t_par = seconds_since(start);
            const bool same = parallel.looe == reference.looe &&
                              parallel.best_k == reference.best_k &&
                              parallel.frequencies == reference.frequencies;
            all_consistent = all_consistent && same;
            std::printf("cv sweep  openmp %2d thread(s)         %8.3f s   speedup %5.2fx   %s\n",
                        threads, t_par, t_serial / t_par, same ? "match" : "MISMATCH");
        }
        std::printf("\n");
    }

    // --- Exhaustive enumeration ------------------------------------------
    {
        const int k = 3;
        auto start = std::chrono::steady_clock::now();
        const ExhaustiveResult reference = exhaustive_search_reference(instance, k);
        const double t_serial = seconds_since(start);
        std::printf("exhaustive K=%d  %-22s %8.3f s   (C(%d,%d) supports)\n", k,
                    "serial reference", t_serial, n, k);

        for (int threads = 1; threads <= hardware_threads(); threads *= 2) {
            start = std::chrono::steady_clock::now();
            const ExhaustiveResult parallel =
                exhaustive_search(instance, k, kEnumerationCap, threads);
            const double t_par = seconds_since(start);
            const bool same =
                parallel.support == reference.support && parallel.rss == reference.rss;
            all_consistent = all_consistent && same;
            std::printf("exhaustive K=%d  openmp %2d thread(s)   %8.3f s   speedup %5.2fx   %s\n",
                        k, threads, t_par, t_serial / t_par, same ? "match" : "MISMATCH");
        }
        std::printf("\n");
    }

    // --- Swap kernel throughput ------------------------------------------
    {
        std::printf("swap kernel (M=%d):\n", instance.m());
        for (int k : {4, 8, 16}) {
            if (k > std::min(instance.m(), instance.n() - 1)) continue;
            Philox rng(11, static_cast<std::uint64_t>(k));
            LsState state = solve_restricted(instance, Support(uniform_subset(n, k, rng)));
            const long swaps = 20000;
            long done = 0;
            const auto start = std::chrono::steady_clock::now();
            while (done < swaps) {
                const auto [out_idx, in_idx] =
                    propose_pair_flip(state.support(), instance.n(), rng);
                auto next = try_swap_update(state, out_idx, in_idx, instance);
                if (next) {
                    state = std::move(*next);
                    ++done;
                }
            }
            const double elapsed = seconds_since(start);
            std::printf("  K=%-3d %8.0f swaps/s   (%.2f us per swap)\n", k, swaps / elapsed,
                        1e6 * elapsed / swaps);
        }
    }

    if (!all_consistent) {
        std::printf("\nFAIL: parallel and serial paths disagree\n");
        return 1;
    }
    std::printf("\nall parallel paths match their serial references\n");
    return 0;
}
