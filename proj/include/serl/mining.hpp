#pragma once

#include <cstdint>
#include <vector>

#include "serl/data.hpp"
#include "serl/matrix.hpp"

namespace serl {

// How mix() pairs easy rows with hard rows.
enum class PairMode { CyclicRandom, WithinClass };
// Whether a class's mining pool is restricted to samples pseudo-labeled
// with that class or ranges over all unlabeled samples.
enum class HardPoolMode { ClassRestricted, Global };

struct MinedSets {
    std::size_t classes = 0;
    std::vector<std::vector<std::size_t>> easy;  // per class, indices into the unlabeled pool
    std::vector<std::vector<std::size_t>> hard;
    std::vector<std::vector<double>> easy_dist;  // cosine distances used for the ranking
    std::vector<std::vector<double>> hard_dist;
    std::vector<std::size_t> pool_sizes;
    std::size_t shrunk_classes = 0;
    std::size_t empty_classes = 0;

    std::size_t total_easy() const;
    std::size_t total_hard() const;
};

// Ranks each class's pool by cosine distance to the class anchor;
// easy = n_easy smallest, hard = n_hard largest, shrinking both
// proportionally when the pool is small (distance ties by index).
MinedSets mine(const Matrix& z_unlabeled, const std::vector<int>& pseudo_labels,
               const AnchorSet& anchor_rows, std::size_t n_easy, std::size_t n_hard,
               HardPoolMode pool_mode = HardPoolMode::ClassRestricted);

// Rows followed by their strong-augmented versions (doubling the count).
Matrix build_views(const Matrix& rows, const AugmentSpec& aug, std::uint64_t seed);

struct MixBatch {
    Matrix x;                    // mixed feature rows
    Matrix y;                    // mixed label rows, each on the simplex
    std::vector<double> thetas;  // drawn Beta(alpha, alpha) coefficients
};

// Convex mixes of easy and hard rows: easy rows cycle in order, hard
// partners are drawn uniformly (cross-class pairing allowed unless
// WithinClass). y_easy / y_hard rows are one-hot class labels.
MixBatch mix(const Matrix& x_easy, const Matrix& y_easy, const Matrix& x_hard,
             const Matrix& y_hard, double alpha, std::uint64_t seed,
             PairMode mode = PairMode::CyclicRandom);

}  // namespace serl
