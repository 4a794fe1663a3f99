#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "serl/matrix.hpp"

namespace serl {

// Cosine kNN graph. Affinities are max(0, cos), symmetrized by
// averaging and row-normalized; rows without positive-affinity
// neighbors stay all-zero. Stored CSR for the spreading iteration.
struct NeighborGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> knn;  // (neighbor, cos sim)
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col_idx;
    std::vector<double> weights;
};

NeighborGraph build_knn_graph(const Matrix& z, std::size_t k);

struct SeedSet {
    std::vector<std::size_t> nodes;
    std::vector<int> labels;
};

// Seeds = all labeled nodes (graph nodes 0..n_labeled-1, clamped to
// their true labels) plus the floor(q * N_u) lowest-entropy unlabeled
// nodes (ties by index); exactly one-hot predictions always qualify.
SeedSet select_seeds(const ProbMatrix& unlabeled_probs, const std::vector<int>& labeled_labels,
                     double entropy_quantile);

struct PseudoLabels {
    std::size_t n = 0;
    std::size_t classes = 0;
    Matrix onehot;                   // n x c, each row one-hot
    std::vector<int> labels;         // argmax per node
    std::vector<double> confidence;  // normalized winning mass, 1 on seeds
    std::vector<bool> seed_mask;
    std::size_t unreachable = 0;  // nodes with no path from any seed
};

// Iterates Y <- alpha * S * Y + (1 - alpha) * Y0 with seed rows
// re-clamped each iteration until the max entry change drops below tol.
// Unreachable nodes fall back to the argmax of `fallback_probs` (the
// model's current predictions) with confidence 0; with no fallback they
// get class 0.
PseudoLabels propagate(const NeighborGraph& graph, const SeedSet& seeds, std::size_t classes,
                       double alpha, std::size_t max_iters, double tol,
                       const ProbMatrix* fallback_probs = nullptr);

// Optional debug dump of edges and pseudo-labels for inspection.
void dump_graph_csv(const NeighborGraph& graph, const PseudoLabels& labels,
                    const std::string& path);

double row_entropy(const double* p, std::size_t c);

}  // namespace serl
