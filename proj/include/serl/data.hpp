#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "serl/matrix.hpp"

namespace serl {

enum class Domain { Source, Target };
enum class Split { Labeled, Unlabeled, Test };

struct Dataset {
    std::size_t dim = 0;
    Matrix features;  // n x dim
    std::vector<int> labels;
    std::vector<Domain> domain;
    std::vector<Split> split;

    std::size_t size() const { return labels.size(); }
    std::vector<std::size_t> indices_of(Split s) const;
    Dataset take(const std::vector<std::size_t>& idx) const;
};

// Two-domain synthetic task: class means on the unit circle, isotropic
// Gaussian classes, and a rigid transform (rotation + translation +
// scale) plus label noise standing in for the domain gap.
struct DomainSpec {
    std::size_t classes = 5;
    double class_std = 0.25;
    std::size_t embed_dim = 2;  // >= 2; extra dims filled by a random orthonormal map
    double rotation_deg = 50.0;
    double translate_x = 0.3;
    double translate_y = -0.2;
    double scale = 1.0;
    double label_noise = 0.05;  // target-side flip rate

    void validate() const;
};

enum class AugmentStrength { Weak, Strong };

// Vector-space stand-in for image augmentation: weak adds small
// Gaussian noise, strong adds larger noise then zeroes a random
// fraction of coordinates.
struct AugmentSpec {
    double sigma_weak = 0.02;
    double sigma_strong = 0.3;
    double mask_frac = 0.25;  // per-coordinate drop probability, strong only

    void validate() const;
};

std::pair<Dataset, Dataset> gen_two_domain(const DomainSpec& spec,
                                           std::size_t n_per_class_per_domain,
                                           std::uint64_t seed);

// Tags exactly `shots` labeled rows per class, holds out a test
// fraction, and leaves the rest unlabeled.
void split_ssda(Dataset& target, std::size_t shots, double test_fraction, std::uint64_t seed);

Matrix augment(const Matrix& x, const AugmentSpec& spec, AugmentStrength strength,
               std::uint64_t seed);

// CSV schema: header f0,...,f{D-1},label,domain,split
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace serl
