#include "hydra/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hydra::assignment {

namespace {

// Potentials-based Hungarian algorithm (O(n^2 m)), minimization, for
// n rows <= m cols. Returns col index per row.
std::vector<int> solve_min(const std::vector<std::vector<double>>& a, int n, int m) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost,
                                           bool maximize) {
    const int rows = static_cast<int>(cost.size());
    const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
    if (rows == 0 || cols == 0) return {};
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != cols) {
            throw std::invalid_argument("hungarian: ragged cost matrix");
        }
        for (double c : row) {
            if (!std::isfinite(c)) throw std::invalid_argument("hungarian: non-finite cost");
        }
    }

    const bool transpose = rows > cols;
    const int n = transpose ? cols : rows;
    const int m = transpose ? rows : cols;
    std::vector<std::vector<double>> a(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double c = transpose ? cost[j][i] : cost[i][j];
            a[i][j] = maximize ? -c : c;
        }
    }

    const std::vector<int> row_to_col = solve_min(a, n, m);
    std::vector<std::pair<int, int>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (row_to_col[i] < 0) continue;
        if (transpose) {
            out.emplace_back(row_to_col[i], i);
        } else {
            out.emplace_back(i, row_to_col[i]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

MatchSet match_by_iou(const geometry::DetectionSet& gt, const geometry::DetectionSet& pred,
                      double min_iou, geometry::IouMode mode) {
    if (gt.frame != pred.frame) {
        throw std::invalid_argument("match_by_iou: sets are in different frames");
    }
    const int n_gt = static_cast<int>(gt.items.size());
    const int n_pred = static_cast<int>(pred.items.size());

    MatchSet out;
    std::vector<char> gt_used(n_gt, 0), pred_used(n_pred, 0);

    if (n_gt > 0 && n_pred > 0) {
        std::vector<std::vector<double>> iou(n_gt, std::vector<double>(n_pred, 0.0));
        for (int i = 0; i < n_gt; ++i) {
            for (int k = 0; k < n_pred; ++k) {
                if (gt.items[i].class_id != pred.items[k].class_id) continue;
                iou[i][k] = geometry::iou_3d(gt.items[i], pred.items[k], mode);
            }
        }
        for (const auto& [i, k] : hungarian(iou, /*maximize=*/true)) {
            if (iou[i][k] < min_iou || iou[i][k] <= 0.0) continue;
            out.pairs.emplace_back(i, k);
            gt_used[i] = 1;
            pred_used[k] = 1;
        }
    }
    for (int i = 0; i < n_gt; ++i) {
        if (!gt_used[i]) out.unmatched_gt.push_back(i);
    }
    for (int k = 0; k < n_pred; ++k) {
        if (!pred_used[k]) out.unmatched_pred.push_back(k);
    }
    return out;
}

}  // namespace hydra::assignment
