// Problem data: dense design matrix plus response, and column-subset supports.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "ksparse/errors.hpp"

namespace ksparse {

// A dense M x N least-squares instance. Immutable once built; shared
// read-only across worker threads.
struct Instance {
    Eigen::MatrixXd a;
    Eigen::VectorXd y;

    Instance() = default;
    Instance(Eigen::MatrixXd design, Eigen::VectorXd response)
        : a(std::move(design)), y(std::move(response)) {
        if (a.rows() < 1 || a.cols() < 1)
            throw DimensionMismatch("instance needs at least one row and one column");
        if (y.size() != a.rows())
            throw DimensionMismatch("response length " + std::to_string(y.size()) +
                                    " does not match row count " + std::to_string(a.rows()));
        if (!a.allFinite() || !y.allFinite())
            throw DimensionMismatch("instance contains non-finite entries");
    }

    int m() const { return static_cast<int>(a.rows()); }
    int n() const { return static_cast<int>(a.cols()); }

    // Instance restricted to a subset of rows (order preserved).
    Instance rows(const std::vector<int>& idx) const {
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), a.cols());
        Eigen::VectorXd suby(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            sub.row(static_cast<Eigen::Index>(i)) = a.row(idx[i]);
            suby(static_cast<Eigen::Index>(i)) = y(idx[i]);
        }
        return Instance(std::move(sub), std::move(suby));
    }
};

// Sorted set of selected column indices (the ONES of the sparse weight).
class Support {
public:
    Support() = default;

    explicit Support(std::vector<int> indices) : ones_(std::move(indices)) {
        std::sort(ones_.begin(), ones_.end());
        if (!ones_.empty() && ones_.front() < 0)
            throw DimensionMismatch("negative column index in support");
        if (std::adjacent_find(ones_.begin(), ones_.end()) != ones_.end())
            throw DimensionMismatch("duplicate column index in support");
    }

    int k() const { return static_cast<int>(ones_.size()); }
    bool empty() const { return ones_.empty(); }
    const std::vector<int>& indices() const { return ones_; }

    bool contains(int col) const {
        return std::binary_search(ones_.begin(), ones_.end(), col);
    }

    // Largest index must fit in a width-n column space.
    void check_range(int n) const {
        if (!ones_.empty() && ones_.back() >= n)
            throw DimensionMismatch("support index " + std::to_string(ones_.back()) +
                                    " out of range for n=" + std::to_string(n));
    }

    Support with_swap(int out_idx, int in_idx) const {
        std::vector<int> next;
        next.reserve(ones_.size());
        for (int c : ones_)
            if (c != out_idx) next.push_back(c);
        auto pos = std::lower_bound(next.begin(), next.end(), in_idx);
        next.insert(pos, in_idx);
        Support s;
        s.ones_ = std::move(next);
        return s;
    }

    bool operator==(const Support&) const = default;
    auto operator<=>(const Support&) const = default;

private:
    std::vector<int> ones_;
};

}  // namespace ksparse
