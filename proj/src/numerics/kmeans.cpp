#include "lifetest/numerics/kmeans.hpp"

#include <limits>

#include "lifetest/core/error.hpp"
#include "lifetest/util/rng.hpp"

namespace lifetest::numerics {

namespace {

double sq_dist(const Eigen::MatrixXd& points, Eigen::Index row,
               const Eigen::MatrixXd& centroids, Eigen::Index c) {
    return (points.row(row) - centroids.row(c)).squaredNorm();
}

Clustering kmeans_once(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                       int max_iter, double tol) {
    const Eigen::Index n = points.rows();
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd centroids(k, points.cols());

    // k-means++ seeding: first center uniform, the rest distance-squared
    // weighted against the nearest chosen center.
    centroids.row(0) = points.row(static_cast<Eigen::Index>(bounded_index(rng, n)));
    Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], sq_dist(points, i, centroids, c - 1));
        const double total = min_d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(bounded_index(rng, n));
        } else {
            const double u = unit_real(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(pick);
    }

    Clustering result;
    result.assignments.assign(n, 0);

    for (int iter = 0; iter < max_iter; ++iter) {
        double sse = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points, i, centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points, i, centroids, c);
                if (d < best_d) {  // ties keep the lowest index
                    best_d = d;
                    best = c;
                }
            }
            result.assignments[static_cast<std::size_t>(i)] = best;
            sse += best_d;
        }
        result.sse = sse;
        result.sse_trace.push_back(sse);
        result.iterations = iter + 1;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = result.assignments[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            counts[c] += 1;
        }
        double max_move = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            const Eigen::RowVectorXd updated = sums.row(c) / counts[c];
            max_move = std::max(max_move, (updated - centroids.row(c)).norm());
            centroids.row(c) = updated;
        }
        if (max_move <= tol) break;
    }

    // final assignment against the converged centroids
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(points, i, centroids, 0);
        for (int c = 1; c < k; ++c) {
            const double d = sq_dist(points, i, centroids, c);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        result.assignments[static_cast<std::size_t>(i)] = best;
        sse += best_d;
    }
    result.sse = sse;
    result.sse_trace.push_back(sse);
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace

Clustering kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                  int max_iter, double tol, int n_init) {
    if (k < 1 || max_iter < 1 || tol < 0.0 || n_init < 1)
        raise(Errc::ConfigError, "kmeans requires k >= 1, max_iter >= 1, tol >= 0, n_init >= 1");
    if (points.rows() < k)
        raise(Errc::TooFewPoints, "kmeans needs at least k points");

    Clustering best;
    for (int restart = 0; restart < n_init; ++restart) {
        Clustering run = kmeans_once(points, k, derive_seed(seed, restart), max_iter, tol);
        if (restart == 0 || run.sse < best.sse) best = std::move(run);
    }
    return best;
}

}  // namespace lifetest::numerics
