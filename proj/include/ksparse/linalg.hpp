// Restricted least-squares engine.
//
// An LsState holds the least-squares fit of y on the columns named by a
// support: the lower Cholesky factor L of the Gram matrix A(c)^T A(c), the
// forward-solved vector z = L^{-1} A(c)^T y, and the residual sum of squares
// E = (1/2) ||y - A(c) x(c)||^2 = (1/2)(||y||^2 - ||z||^2).
//
// Swapping one column out and one in costs O(MK + K^2): the factor is
// downdated by Givens rotations when a column leaves and extended by one
// forward solve when a column enters, and z (hence the RSS) rides along for
// free. Orthogonal rotations keep the factor numerically tight over long
// swap chains; refresh() re-solves from scratch and alarms if the maintained
// RSS has drifted.
#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ksparse/types.hpp"

namespace ksparse {

// Numerical policy, shared by from-scratch and incremental paths.
// rank_rtol: a Cholesky pivot d^2 <= rank_rtol * diag means rank-deficient.
// drift_rtol: refresh alarms when |maintained - fresh| exceeds this,
//             relative to max(fresh RSS, 1e-4 * (1/2)||y||^2).
inline constexpr double kRankRtol = 1e-12;
inline constexpr double kDriftRtol = 1e-6;

class LsState {
public:
    LsState() = default;

    const Support& support() const { return support_; }
    // Columns in factor order (insertion order); support() is the sorted view.
    const std::vector<int>& cols() const { return cols_; }
    int k() const { return static_cast<int>(cols_.size()); }
    int m() const { return m_; }
    int n() const { return n_; }

    double rss() const { return rss_; }
    double rss_per_component() const { return rss_ / m_; }
    double half_y_norm2() const { return half_y2_; }

    // Coefficients aligned with the sorted support order.
    Eigen::VectorXd coeffs() const;
    // Length-n vector with exact zeros off the support.
    Eigen::VectorXd dense_coeffs() const;

    const Eigen::MatrixXd& factor() const { return factor_; }

private:
    std::vector<int> cols_;
    Support support_;
    Eigen::MatrixXd factor_;  // k x k lower triangular
    Eigen::VectorXd z_;       // L^{-1} A(c)^T y, factor order
    double rss_ = 0.0;
    double half_y2_ = 0.0;
    int m_ = 0;
    int n_ = 0;

    friend LsState solve_restricted(const Instance&, const Support&);
    friend std::optional<LsState> try_swap_update(const LsState&, int, int, const Instance&);
    friend class LsStateTestAccess;
};

// Exact minimizer of ||y - A(c) x||^2 over the support, solved from scratch.
// Throws RankDeficient if the selected columns are (numerically) collinear
// or |support| > M, DimensionMismatch for out-of-range indices.
LsState solve_restricted(const Instance& instance, const Support& support);

// Factor-level swap: remove out_idx, append in_idx. Returns nullopt when the
// incoming column makes the Gram matrix singular (callers treat the proposal
// as rejected). Throws IndexError on precondition violations.
std::optional<LsState> try_swap_update(const LsState& state, int out_idx, int in_idx,
                                       const Instance& instance);

// Same as try_swap_update but rank deficiency is an error.
LsState swap_update(const LsState& state, int out_idx, int in_idx, const Instance& instance);

// From-scratch re-solve on the same support. Throws DriftExceeded when the
// maintained RSS disagrees with the fresh one beyond the drift tolerance.
LsState refresh(const LsState& state, const Instance& instance);

}  // namespace ksparse
