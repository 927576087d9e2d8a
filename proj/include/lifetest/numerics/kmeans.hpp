#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lifetest::numerics {

struct Clustering {
    std::vector<int> assignments;   // nearest centroid per point
    Eigen::MatrixXd centroids;      // k x d
    double sse = 0.0;               // within-cluster sum of squared distances
    std::vector<double> sse_trace;  // SSE after each assignment step
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ initialization on the given seed.
/// points is n x d (row per point); distances are squared Euclidean on the
/// coordinates as given (callers scale features beforehand). Assignment ties
/// go to the lowest cluster index. Each restart iterates until the largest
/// centroid displacement is <= tol or max_iter is reached; the best of
/// n_init seeded restarts (lowest SSE, first on ties) is returned.
/// Deterministic in (points order, seed).
Clustering kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                  int max_iter = 300, double tol = 1e-12, int n_init = 10);

}  // namespace lifetest::numerics
