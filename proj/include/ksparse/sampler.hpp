// Pair-flip Metropolis sampling over fixed-size supports, and the
// simulated-annealing driver with a geometric inverse-temperature ladder.
//
// A move swaps one selected column for one unselected column, so the
// sparsity K is conserved at every step. A proposal whose incoming column
// breaks full rank counts as proposed-and-rejected (energy +inf), which
// keeps the chain reversible on the full-rank support subgraph.
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ksparse/linalg.hpp"
#include "ksparse/rng.hpp"
#include "ksparse/types.hpp"

namespace ksparse {

// Annealing plan: stage a = 1..stages runs at
//   beta_a = beta0 + ratio^(a-1) - 1,
// each stage performing round(sweeps_per_stage * N) Metropolis steps.
struct Schedule {
    double beta0 = 1e-8;
    double ratio = 1.1;
    int stages = 100;
    double sweeps_per_stage = 5.0;

    double beta_at(int stage) const;  // 1-based
    void validate() const;
};

struct StageStats {
    double beta = 0.0;
    double mean_eps = 0.0;  // time-average of RSS/M over the stage
    double min_eps = 0.0;
    Support best_support;   // support achieving min_eps within the stage
    long accepted = 0;
    long proposed = 0;
};

struct SaResult {
    Support best_support;
    double best_rss = 0.0;  // from-scratch RSS of best_support
    Support final_support;
    double final_rss = 0.0;
    std::vector<std::pair<double, double>> trace;  // (beta, mean eps) per stage
    long accepted = 0;
    long proposed = 0;
};

// Uniform pair proposal: out_idx from the support, in_idx from its
// complement in {0..n-1}, independent. Throws DegenerateSupport when
// K == 0 or K == n.
std::pair<int, int> propose_pair_flip(const Support& support, int n, Philox& rng);

struct StepResult {
    LsState state;
    bool accepted = false;
};

// One Metropolis step: propose a pair flip, accept with probability
// min(1, exp(-beta * deltaE)). Rejections (including rank-deficient
// proposals) return the input state unchanged.
StepResult metropolis_step(LsState state, double beta, const Instance& instance, Philox& rng);

// round(sweeps * N) Metropolis steps at fixed beta. The state is re-solved
// from scratch every refresh_every accepted swaps to stop numerical drift.
std::pair<LsState, StageStats> run_fixed_beta(LsState state, double beta, double sweeps,
                                              const Instance& instance, Philox& rng,
                                              int refresh_every = 256);

// Full annealing run at sparsity k. Starts from init if given (must be full
// rank), otherwise from a uniform random full-rank K-subset; throws
// InitializationFailed after 100 rejected draws. Tracks the best support
// ever visited; identical (instance, k, schedule, rng seed) reproduce the
// result bit for bit.
SaResult anneal(const Instance& instance, int k, const Schedule& schedule,
                const std::optional<Support>& init, Philox& rng, int refresh_every = 256);

}  // namespace ksparse
