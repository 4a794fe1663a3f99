#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "serl/mining.hpp"

namespace serl {

enum class PseudoSource { Propagate, Argmax };
enum class SpcrNorm { Mean, Sum };
enum class Objective { Serl, St };  // st = supervised losses only (S+T baseline)

// Every knob of the pipeline. Defaults mirror configs/default.cfg; the
// parser rejects unknown keys and load -> serialize -> load is identity.
struct ExperimentConfig {
    // data
    std::uint64_t data_seed = 7;
    std::size_t n_per_class = 200;
    std::size_t classes = 5;
    std::size_t embed_dim = 2;
    double class_std = 0.25;
    double rotation_deg = 50.0;
    double translate_x = 0.3;
    double translate_y = -0.2;
    double shift_scale = 1.0;
    double label_noise = 0.05;
    std::size_t shots = 3;
    double test_fraction = 0.3;
    // augmentation
    double sigma_weak = 0.02;
    double sigma_strong = 0.3;
    double mask_frac = 0.25;
    // model
    std::size_t hidden_dim = 16;
    std::size_t bottleneck_dim = 8;
    double cls_temperature = 0.05;
    // loss weights and temperatures
    double lambda_prob = 0.3;
    double lambda_mix = 60.0;
    double lambda_pre = 3.0;
    double tau = 0.15;
    double beta = 0.7;
    double mix_alpha = 1.0;
    // pseudo-label propagation
    std::size_t knn_k = 5;
    double prop_alpha = 0.99;
    double seed_quantile = 0.3;
    std::size_t prop_max_iters = 200;
    double prop_tol = 1e-6;
    // mining
    std::size_t n_easy = 15;
    std::size_t n_hard = 15;
    // trainer
    std::size_t source_epochs = 30;
    std::size_t adapt_epochs = 50;
    std::size_t batch_unlabeled = 64;
    std::size_t batch_labeled = 32;
    double lr_feature = 0.001;
    double lr_bottleneck = 0.01;
    double lr_classifier = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    // behavior flags
    Objective objective = Objective::Serl;
    PseudoSource pseudo_source = PseudoSource::Propagate;
    PairMode pair_mode = PairMode::CyclicRandom;
    HardPoolMode hard_pool = HardPoolMode::ClassRestricted;
    SpcrNorm spcr_normalize = SpcrNorm::Mean;

    void validate() const;  // throws ConfigError naming the field

    DomainSpec domain_spec() const;
    AugmentSpec augment_spec() const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& origin);
std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace serl
