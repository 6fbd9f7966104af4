#include "ksparse/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ksparse {

double Schedule::beta_at(int stage) const {
    return beta0 + std::pow(ratio, stage - 1) - 1.0;
}

void Schedule::validate() const {
    if (!(beta0 >= 0.0)) throw Error("schedule: beta0 must be >= 0");
    if (!(ratio > 1.0)) throw Error("schedule: ratio must be > 1");
    if (stages < 1) throw Error("schedule: stages must be >= 1");
    if (!(sweeps_per_stage > 0.0)) throw Error("schedule: sweeps_per_stage must be > 0");
}

std::pair<int, int> propose_pair_flip(const Support& support, int n, Philox& rng) {
    const int k = support.k();
    if (k == 0 || k >= n)
        throw DegenerateSupport("pair flip needs 1 <= K <= N-1, got K=" + std::to_string(k) +
                                " N=" + std::to_string(n));
    const auto& ones = support.indices();
    const int out_idx = ones[rng.next_below(static_cast<std::uint64_t>(k))];
    // t-th smallest index outside the support, found by walking the sorted
    // ones: each passed selected index shifts the candidate up by one.
    int in_idx = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - k)));
    for (int one : ones) {
        if (one <= in_idx)
            ++in_idx;
        else
            break;
    }
    return {out_idx, in_idx};
}

StepResult metropolis_step(LsState state, double beta, const Instance& instance, Philox& rng) {
    const auto [out_idx, in_idx] = propose_pair_flip(state.support(), instance.n(), rng);
    auto candidate = try_swap_update(state, out_idx, in_idx, instance);
    if (!candidate) return {std::move(state), false};  // singular proposal: deltaE = +inf
    const double delta = candidate->rss() - state.rss();
    if (delta > 0.0) {
        const double p_accept = std::exp(-beta * delta);
        if (!(rng.next_double() < p_accept)) return {std::move(state), false};
    }
    return {std::move(*candidate), true};
}

namespace {

// Step loop shared by run_fixed_beta and anneal; the accepted-swap counter
// persists across stages so the refresh cadence is global to a run.
std::pair<LsState, StageStats> run_stage(LsState state, double beta, long steps,
                                         const Instance& instance, Philox& rng, int refresh_every,
                                         long& accepts_since_refresh) {
    StageStats stats;
    stats.beta = beta;
    stats.min_eps = state.rss_per_component();
    stats.best_support = state.support();
    double eps_sum = 0.0;
    for (long step = 0; step < steps; ++step) {
        auto result = metropolis_step(std::move(state), beta, instance, rng);
        state = std::move(result.state);
        ++stats.proposed;
        if (result.accepted) {
            ++stats.accepted;
            if (refresh_every > 0 && ++accepts_since_refresh >= refresh_every) {
                state = refresh(state, instance);
                accepts_since_refresh = 0;
            }
        }
        const double eps = state.rss_per_component();
        eps_sum += eps;
        if (eps < stats.min_eps) {
            stats.min_eps = eps;
            stats.best_support = state.support();
        }
    }
    stats.mean_eps = steps > 0 ? eps_sum / static_cast<double>(steps) : state.rss_per_component();
    return {std::move(state), std::move(stats)};
}

}  // namespace

std::pair<LsState, StageStats> run_fixed_beta(LsState state, double beta, double sweeps,
                                              const Instance& instance, Philox& rng,
                                              int refresh_every) {
    if (!(sweeps >= 0.0)) throw Error("sweeps must be >= 0");
    const long steps = std::llround(sweeps * instance.n());
    long accepts_since_refresh = 0;
    return run_stage(std::move(state), beta, steps, instance, rng, refresh_every,
                     accepts_since_refresh);
}

SaResult anneal(const Instance& instance, int k, const Schedule& schedule,
                const std::optional<Support>& init, Philox& rng, int refresh_every) {
    schedule.validate();
    const int n = instance.n();
    const int m = instance.m();
    if (k < 1 || k > std::min(m, n - 1))
        throw DimensionMismatch("anneal needs 1 <= K <= min(M, N-1), got K=" + std::to_string(k));

    LsState state;
    if (init) {
        if (init->k() != k) throw DimensionMismatch("init support size differs from K");
        state = solve_restricted(instance, *init);
    } else {
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            Support candidate(uniform_subset(n, k, rng));
            try {
                state = solve_restricted(instance, candidate);
                ok = true;
            } catch (const RankDeficient&) {
            }
        }
        if (!ok)
            throw InitializationFailed(
                "no full-rank initial support found in 100 draws (badly collinear columns?)");
    }

    SaResult result;
    result.best_support = state.support();
    double best_eps = state.rss_per_component();
    result.trace.reserve(static_cast<std::size_t>(schedule.stages));

    const long steps_per_stage = std::llround(schedule.sweeps_per_stage * n);
    long accepts_since_refresh = 0;
    for (int stage = 1; stage <= schedule.stages; ++stage) {
        const double beta = schedule.beta_at(stage);
        auto [next, stats] = run_stage(std::move(state), beta, steps_per_stage, instance, rng,
                                       refresh_every, accepts_since_refresh);
        state = std::move(next);
        result.trace.emplace_back(beta, stats.mean_eps);
        result.accepted += stats.accepted;
        result.proposed += stats.proposed;
        if (stats.min_eps < best_eps) {
            best_eps = stats.min_eps;
            result.best_support = stats.best_support;
        }
    }

    result.final_support = state.support();
    result.final_rss = refresh(state, instance).rss();
    result.best_rss = result.best_support == result.final_support
                          ? result.final_rss
                          : solve_restricted(instance, result.best_support).rss();
    return result;
}

}  // namespace ksparse
