// Reference solvers and enumeration oracles: greedy orthogonal matching
// pursuit, brute-force subset search, and the exact fixed-sparsity Boltzmann
// distribution used to validate the sampler.
#pragma once

#include <cstdint>
#include <vector>

#include "ksparse/linalg.hpp"
#include "ksparse/types.hpp"

namespace ksparse {

inline constexpr std::uint64_t kEnumerationCap = 2'000'000;

// C(n, k), or TooLarge if the count exceeds cap.
std::uint64_t count_supports(int n, int k, std::uint64_t cap = kEnumerationCap);

// Lexicographic rank <-> k-subset of {0..n-1}; used to key enumeration slots.
std::vector<int> support_unrank(int n, int k, std::uint64_t rank);
std::uint64_t support_rank(int n, const std::vector<int>& indices);

struct OmpResult {
    Support support;
    LsState state;
    std::vector<int> skipped_cols;  // greedily preferred but rank-breaking
};

// Orthogonal matching pursuit: k rounds of adding the column with the
// largest |a_j . residual| and re-solving. A column that would break full
// rank is skipped (and flagged) in favour of the next best.
OmpResult omp_fit(const Instance& instance, int k);

struct ExhaustiveResult {
    Support support;
    double rss = 0.0;
};

// Global minimizer over all C(N, k) supports; ties resolve to the
// lexicographically smallest. threads > 1 splits the rank range across
// OpenMP workers with a deterministic merge; threads == 1 and the serial
// reference path produce identical results.
ExhaustiveResult exhaustive_search(const Instance& instance, int k,
                                   std::uint64_t cap = kEnumerationCap, int threads = 0);
ExhaustiveResult exhaustive_search_reference(const Instance& instance, int k,
                                             std::uint64_t cap = kEnumerationCap);

// Exact Boltzmann distribution over supports at inverse temperature beta,
// normalized in the log domain. Entries are in lexicographic rank order;
// rank-deficient supports carry energy +inf and probability 0.
struct BoltzmannTable {
    int n = 0;
    int k = 0;
    double beta = 0.0;
    double log_g = 0.0;                 // log partition function
    std::vector<double> energies;       // +inf where rank-deficient
    std::vector<double> probabilities;  // sums to 1
    std::vector<std::uint64_t> rank_deficient;  // ranks flagged singular

    Support support_at(std::uint64_t rank) const { return Support(support_unrank(n, k, rank)); }
    double expected_energy() const;
};

BoltzmannTable enumerate_boltzmann(const Instance& instance, int k, double beta,
                                   std::uint64_t cap = kEnumerationCap, int threads = 0);

}  // namespace ksparse
