// Cross-validation machinery: fold construction, SA-per-fold leave-one-out
// error, the K-sweep with argmin selection, selection-frequency tallies, and
// the common-support LOO diagnostic.
//
// Every (K, fold) cell is an independent work unit seeded by
// derive_seed(base_seed, K, fold), so the sweep gives identical reports at
// any thread count and in any execution order. sweep_k runs the cells on an
// OpenMP worker pool; sweep_k_reference is the plain serial loop kept as the
// correctness baseline.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ksparse/sampler.hpp"
#include "ksparse/types.hpp"

namespace ksparse {

enum class FoldKind { loo, kfold };

struct FoldPlan {
    struct Fold {
        std::vector<int> train;
        std::vector<int> validation;
    };
    FoldKind kind = FoldKind::loo;
    std::vector<Fold> folds;

    int count() const { return static_cast<int>(folds.size()); }
    int min_train_rows() const;
};

// M singleton validation folds in row order.
FoldPlan make_loo_folds(int m);
// k contiguous blocks of a seeded shuffle of 0..m-1, sizes differing by <= 1.
FoldPlan make_kfold_folds(int m, int k, std::uint64_t shuffle_seed);

// One annealing run on a fold's training rows.
struct CellOutcome {
    bool ok = false;
    Support support;       // best support found on the training rows
    double sq_err = 0.0;   // summed squared prediction error on validation rows
    int n_validation = 0;
    std::uint64_t seed = 0;
    std::string error;     // set when !ok
};

struct CvErrorResult {
    double looe = 0.0;
    std::vector<CellOutcome> folds;
};

// Eq.-style LOO CV error at a single K: anneal on each fold's training rows,
// refit on them, square the prediction error on the held-out rows, and
// normalize the total by 2M. Throws (naming the fold) if any fold fails.
CvErrorResult cv_error(const Instance& instance, int k, const Schedule& schedule,
                       const FoldPlan& plan, std::uint64_t base_seed, int restarts = 1);

struct CvReport {
    std::vector<int> k_values;
    std::map<int, double> looe;                      // K -> CV error
    std::map<int, std::vector<CellOutcome>> cells;   // K -> per-fold outcomes
    std::map<int, std::map<int, int>> frequencies;   // K -> column -> folds selecting it
    std::map<int, int> failed_folds;                 // K -> count excluded from looe
    int best_k = 0;                                  // argmin looe, ties to smaller K
};

// Full K-sweep. Failed cells are marked and excluded from that K's average
// rather than aborting the sweep. threads: 0 = all available.
CvReport sweep_k(const Instance& instance, const std::vector<int>& k_values,
                 const Schedule& schedule, const FoldPlan& plan, std::uint64_t base_seed,
                 int restarts = 1, int threads = 0);
// Serial twin of sweep_k; must produce an identical report.
CvReport sweep_k_reference(const Instance& instance, const std::vector<int>& k_values,
                           const Schedule& schedule, const FoldPlan& plan,
                           std::uint64_t base_seed, int restarts = 1);

// Tally how many folds selected each column.
std::map<int, int> selection_frequency(const std::vector<Support>& per_fold_supports);

// Common-support LOO error: the support is held fixed across all folds and
// only the coefficients are refit, evaluated in closed form through the hat
// matrix diagonal (LOO residual = residual / (1 - leverage), O(MK^2) total).
//
// Diagnostic only: this quantity keeps decreasing as K grows regardless of
// the true sparsity, so it can neither identify the true support nor pick K.
double common_support_looe(const Instance& instance, const Support& support);

}  // namespace ksparse
