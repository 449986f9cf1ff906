#pragma once

// Minimum-cost bipartite assignment and the class-constrained matching used
// by the set-based detection loss.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "qaf2d/errors.hpp"

namespace qaf2d {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  /// (row / prediction index, column / ground-truth index), ascending by row.
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;
};

namespace detail {

// Shortest-augmenting-path Hungarian method on a square matrix. Returns the
// row -> column assignment and leaves optimal dual potentials in u, v
// (u[i] + v[j] <= c(i, j), with equality on assigned pairs).
inline std::vector<int> solve_square(const CostMatrix& c, std::vector<double>& u, std::vector<double>& v) {
  const std::size_t n = c.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0.
  std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - pu[i0] - pv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          pu[owner[j]] += delta;
          pv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[owner[j] - 1] = static_cast<int>(j - 1);
  u.assign(pu.begin() + 1, pu.end());
  v.assign(pv.begin() + 1, pv.end());
  return row_to_col;
}

// Among all perfect matchings of the tight-edge graph (exactly the optimal
// assignments for the given optimal duals), picks the one whose row -> column
// sequence is lexicographically smallest. Rows are fixed in order; for each,
// the smallest tight column that can be swapped in along an alternating path
// through unfixed rows is taken.
inline void lexicographic_optimum(const std::vector<std::vector<char>>& tight, std::vector<int>& row_to_col) {
  const std::size_t n = row_to_col.size();
  std::vector<int> col_to_row(n);
  for (std::size_t r = 0; r < n; ++r) col_to_row[static_cast<std::size_t>(row_to_col[r])] = static_cast<int>(r);

  std::vector<int> next_col(n);  // reachable row r can move to column next_col[r]
  std::vector<char> reach(n);
  std::vector<int> queue;
  for (std::size_t i = 0; i < n; ++i) {
    const int target = row_to_col[i];
    // Rows (other than fixed rows and i) that can hand off towards `target`.
    std::fill(reach.begin(), reach.end(), 0);
    queue.clear();
    for (std::size_t r = i + 1; r < n; ++r) {
      if (tight[r][static_cast<std::size_t>(target)]) {
        reach[r] = 1;
        next_col[r] = target;
        queue.push_back(static_cast<int>(r));
      }
    }
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int freed = row_to_col[static_cast<std::size_t>(queue[q])];
      for (std::size_t r = i + 1; r < n; ++r) {
        if (!reach[r] && tight[r][static_cast<std::size_t>(freed)]) {
          reach[r] = 1;
          next_col[r] = freed;
          queue.push_back(static_cast<int>(r));
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<int>(j) == target) break;
      if (!tight[i][j]) continue;
      const int r0 = col_to_row[j];
      if (r0 <= static_cast<int>(i) || !reach[static_cast<std::size_t>(r0)]) continue;
      // Rotate along the path: i takes j, each row on the path takes its next column.
      row_to_col[i] = static_cast<int>(j);
      col_to_row[j] = static_cast<int>(i);
      int r = r0;
      for (;;) {
        const int c = next_col[static_cast<std::size_t>(r)];
        row_to_col[static_cast<std::size_t>(r)] = c;
        const int prev_owner = col_to_row[static_cast<std::size_t>(c)];
        col_to_row[static_cast<std::size_t>(c)] = r;
        if (c == target) break;
        r = prev_owner;
      }
      break;
    }
  }
}

}  // namespace detail

/// Minimum-cost assignment of size min(rows, cols). Among equal-cost optima
/// the lexicographically smallest pair list is returned. Costs are compared
/// with a tolerance of 1e-9 relative to the largest entry.
inline Assignment hungarian(const CostMatrix& cost) {
  Assignment out;
  if (cost.empty()) return out;
  double scale = 0.0;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (!std::isfinite(cost(r, c))) throw PreconditionError("cost matrix entries must be finite");
      scale = std::max(scale, std::abs(cost(r, c)));
    }
  }
  // Pad to square with zero-cost dummy rows or columns placed after the real ones.
  const std::size_t n = std::max(cost.rows(), cost.cols());
  CostMatrix square(n, n, 0.0);
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) square(r, c) = cost(r, c);
  }
  std::vector<double> u, v;
  std::vector<int> row_to_col = detail::solve_square(square, u, v);

  const double tol = 1e-9 * std::max(1.0, scale);
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) tight[r][c] = (square(r, c) - u[r] - v[c]) <= tol;
    tight[r][static_cast<std::size_t>(row_to_col[r])] = 1;
  }
  detail::lexicographic_optimum(tight, row_to_col);

  for (std::size_t r = 0; r < cost.rows(); ++r) {
    const int c = row_to_col[r];
    if (c < static_cast<int>(cost.cols())) {
      out.pairs.emplace_back(static_cast<int>(r), c);
      out.total_cost += cost(r, static_cast<std::size_t>(c));
    }
  }
  return out;
}

/// Box in query parameterization (x, y, z, w, l, h, sin yaw, cos yaw).
using QueryBox = std::array<double, 8>;

struct Prediction {
  QueryBox box{};
  int class_id = 0;
  double class_prob = 0.0;  ///< predicted probability of class_id
};

struct GroundTruth {
  QueryBox box{};
  int class_id = 0;
};

struct MatchWeights {
  double cls = 2.0;
  double box = 0.25;
};

inline double l1_distance(const QueryBox& a, const QueryBox& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

/// cls * (-class_prob) + box * L1(p.box, g.box). Only defined within a class.
inline double match_cost(const Prediction& p, const GroundTruth& g, MatchWeights weights = {}) {
  if (p.class_id != g.class_id) {
    throw PreconditionError("match_cost: prediction class " + std::to_string(p.class_id) +
                            " differs from ground-truth class " + std::to_string(g.class_id));
  }
  return weights.cls * (-p.class_prob) + weights.box * l1_distance(p.box, g.box);
}

/// Hungarian matching run separately inside each class; predictions never
/// match a ground truth of another class. Pairs use indices into the input
/// spans, ascending by prediction index; total_cost sums the per-class
/// totals in ascending class order.
inline Assignment class_constrained_match(std::span<const Prediction> preds, std::span<const GroundTruth> gts,
                                          MatchWeights weights = {}) {
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> groups;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i].class_prob >= 0.0 && preds[i].class_prob <= 1.0)) {
      throw PreconditionError("prediction class_prob must lie in [0, 1]");
    }
    groups[preds[i].class_id].first.push_back(static_cast<int>(i));
  }
  for (std::size_t j = 0; j < gts.size(); ++j) groups[gts[j].class_id].second.push_back(static_cast<int>(j));

  Assignment out;
  for (const auto& [cls, members] : groups) {
    const auto& [pi, gi] = members;
    if (pi.empty() || gi.empty()) continue;
    CostMatrix c(pi.size(), gi.size());
    for (std::size_t r = 0; r < pi.size(); ++r) {
      for (std::size_t k = 0; k < gi.size(); ++k) {
        c(r, k) = match_cost(preds[static_cast<std::size_t>(pi[r])], gts[static_cast<std::size_t>(gi[k])], weights);
      }
    }
    const Assignment part = hungarian(c);
    for (const auto& [r, k] : part.pairs) {
      out.pairs.emplace_back(pi[static_cast<std::size_t>(r)], gi[static_cast<std::size_t>(k)]);
    }
    out.total_cost += part.total_cost;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

}  // namespace qaf2d
