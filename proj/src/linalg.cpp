#include "ksparse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ksparse {

namespace {

// Lower Cholesky with a relative pivot test: pivot d2 <= rank_rtol * G(i,i)
// is declared rank-deficient. The same test guards the incremental append,
// so both paths agree on what counts as singular.
std::optional<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& gram) {
    const Eigen::Index k = gram.rows();
    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double sum = gram(i, j);
            for (Eigen::Index p = 0; p < j; ++p) sum -= lower(i, p) * lower(j, p);
            if (i == j) {
                if (!(sum > kRankRtol * gram(i, i))) return std::nullopt;
                lower(i, i) = std::sqrt(sum);
            } else {
                lower(i, j) = sum / lower(j, j);
            }
        }
    }
    return lower;
}

void check_same_problem(const LsState& state, const Instance& instance) {
    if (state.m() != instance.m() || state.n() != instance.n())
        throw DimensionMismatch("state and instance dimensions differ");
}

}  // namespace

Eigen::VectorXd LsState::coeffs() const {
    // Back-substitute in factor order, then permute into sorted-support order.
    Eigen::VectorXd beta = factor_.triangularView<Eigen::Lower>().transpose().solve(z_);
    std::vector<int> order(cols_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return cols_[a] < cols_[b]; });
    Eigen::VectorXd out(beta.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = beta(order[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::VectorXd LsState::dense_coeffs() const {
    Eigen::VectorXd beta = factor_.triangularView<Eigen::Lower>().transpose().solve(z_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (std::size_t i = 0; i < cols_.size(); ++i) out(cols_[i]) = beta(static_cast<Eigen::Index>(i));
    return out;
}

LsState solve_restricted(const Instance& instance, const Support& support) {
    support.check_range(instance.n());
    const int k = support.k();
    const int m = instance.m();
    if (k > m)
        throw RankDeficient("support size " + std::to_string(k) + " exceeds row count " +
                            std::to_string(m) + "; the restricted system is underdetermined");

    LsState state;
    state.m_ = m;
    state.n_ = instance.n();
    state.half_y2_ = 0.5 * instance.y.squaredNorm();
    state.support_ = support;
    state.cols_ = support.indices();

    if (k == 0) {
        state.factor_.resize(0, 0);
        state.z_.resize(0);
        state.rss_ = state.half_y2_;
        return state;
    }

    Eigen::MatrixXd sub(m, k);
    for (int j = 0; j < k; ++j) sub.col(j) = instance.a.col(state.cols_[static_cast<std::size_t>(j)]);

    const Eigen::MatrixXd gram = sub.transpose() * sub;
    auto lower = cholesky(gram);
    if (!lower)
        throw RankDeficient("selected columns are collinear (Gram factorization failed)");
    state.factor_ = std::move(*lower);

    const Eigen::VectorXd rhs = sub.transpose() * instance.y;
    state.z_ = state.factor_.triangularView<Eigen::Lower>().solve(rhs);
    const Eigen::VectorXd beta =
        state.factor_.triangularView<Eigen::Lower>().transpose().solve(state.z_);
    // Explicit residual: immune to the cancellation that (1/2)(y^T y - z^T z)
    // suffers when the fit is near-exact.
    state.rss_ = 0.5 * (instance.y - sub * beta).squaredNorm();
    return state;
}

std::optional<LsState> try_swap_update(const LsState& state, int out_idx, int in_idx,
                                       const Instance& instance) {
    check_same_problem(state, instance);
    if (in_idx < 0 || in_idx >= state.n())
        throw IndexError("incoming column " + std::to_string(in_idx) + " out of range");
    if (state.support_.contains(in_idx))
        throw IndexError("incoming column " + std::to_string(in_idx) + " already in support");
    const auto pos = std::find(state.cols_.begin(), state.cols_.end(), out_idx);
    if (pos == state.cols_.end())
        throw IndexError("outgoing column " + std::to_string(out_idx) + " not in support");
    const int p = static_cast<int>(pos - state.cols_.begin());
    const int k = state.k();

    LsState next;
    next.m_ = state.m_;
    next.n_ = state.n_;
    next.half_y2_ = state.half_y2_;

    // Remove row/column p of the Gram matrix: drop row p of L, then chase the
    // staircase back to triangular with Givens rotations applied to column
    // pairs. z rides along as an extra row, so the dropped component gives
    // the RSS increase exactly: E' = E + z_dropped^2 / 2.
    Eigen::MatrixXd stair = Eigen::MatrixXd::Zero(k - 1, k);
    for (int i = 0; i < p; ++i) stair.row(i).head(i + 1) = state.factor_.row(i).head(i + 1);
    for (int i = p; i < k - 1; ++i) stair.row(i).head(i + 2) = state.factor_.row(i + 1).head(i + 2);
    Eigen::VectorXd zrot = state.z_;
    for (int j = p; j < k - 1; ++j) {
        const double x = stair(j, j);
        const double extra = stair(j, j + 1);
        const double r = std::hypot(x, extra);
        double c = 1.0, s = 0.0;
        if (r > 0.0) {
            c = x / r;
            s = extra / r;
        }
        for (int i = j; i < k - 1; ++i) {
            const double a = stair(i, j);
            const double b = stair(i, j + 1);
            stair(i, j) = c * a + s * b;
            stair(i, j + 1) = c * b - s * a;
        }
        const double za = zrot(j);
        const double zb = zrot(j + 1);
        zrot(j) = c * za + s * zb;
        zrot(j + 1) = c * zb - s * za;
    }
    double rss = state.rss_ + 0.5 * zrot(k - 1) * zrot(k - 1);

    next.cols_.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        if (i != p) next.cols_.push_back(state.cols_[static_cast<std::size_t>(i)]);

    // Append the incoming column: one new Gram row (the O(MK) part), one
    // forward solve, one new pivot.
    const auto in_col = instance.a.col(in_idx);
    Eigen::VectorXd gram_row(k - 1);
    for (int i = 0; i < k - 1; ++i)
        gram_row(i) = instance.a.col(next.cols_[static_cast<std::size_t>(i)]).dot(in_col);
    const double gamma = in_col.squaredNorm();
    const double b_in = in_col.dot(instance.y);

    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(k, k);
    lower.topLeftCorner(k - 1, k - 1) = stair.topLeftCorner(k - 1, k - 1);
    Eigen::VectorXd w(k - 1);
    if (k > 1)
        w = lower.topLeftCorner(k - 1, k - 1)
                .triangularView<Eigen::Lower>()
                .solve(gram_row);
    else
        w.resize(0);
    const double pivot2 = gamma - w.squaredNorm();
    if (!(pivot2 > kRankRtol * gamma)) return std::nullopt;
    const double pivot = std::sqrt(pivot2);
    lower.row(k - 1).head(k - 1) = w.transpose();
    lower(k - 1, k - 1) = pivot;

    Eigen::VectorXd z(k);
    z.head(k - 1) = zrot.head(k - 1);
    z(k - 1) = (b_in - w.dot(zrot.head(k - 1))) / pivot;
    rss -= 0.5 * z(k - 1) * z(k - 1);

    next.factor_ = std::move(lower);
    next.z_ = std::move(z);
    next.rss_ = std::max(rss, 0.0);
    next.cols_.push_back(in_idx);
    next.support_ = state.support_.with_swap(out_idx, in_idx);
    return next;
}

LsState swap_update(const LsState& state, int out_idx, int in_idx, const Instance& instance) {
    auto next = try_swap_update(state, out_idx, in_idx, instance);
    if (!next)
        throw RankDeficient("incoming column " + std::to_string(in_idx) +
                            " makes the Gram matrix singular");
    return std::move(*next);
}

LsState refresh(const LsState& state, const Instance& instance) {
    check_same_problem(state, instance);
    LsState fresh = solve_restricted(instance, state.support());
    // The maintained value carries roundoff at the data-energy scale
    // (~eps * ||y||^2 per swap), so near-exact fits cannot be judged
    // relative to an RSS of ~0; floor the scale at 1e-4 of the energy.
    const double scale = std::max({fresh.rss(), 1e-4 * fresh.half_y_norm2(), 1e-300});
    const double drift = std::abs(state.rss() - fresh.rss());
    if (drift > kDriftRtol * scale)
        throw DriftExceeded("maintained RSS " + std::to_string(state.rss()) +
                            " drifted from fresh solve " + std::to_string(fresh.rss()));
    return fresh;
}

}  // namespace ksparse
