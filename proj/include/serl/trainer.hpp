#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "serl/config.hpp"
#include "serl/data.hpp"
#include "serl/losses.hpp"
#include "serl/model.hpp"

namespace serl {

// SGD with momentum and decoupled parameter groups; v <- mu*v + g + wd*w,
// w <- w - lr*v.
class SgdOptimizer {
  public:
    SgdOptimizer(double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {}

    void add_group(std::vector<double>* params, double lr);
    void step(const std::vector<const std::vector<double>*>& grads);

  private:
    struct Group {
        std::vector<double>* params;
        double lr;
        std::vector<double> velocity;
    };
    std::vector<Group> groups_;
    double momentum_;
    double weight_decay_;
};

struct EpochRecord {
    std::size_t epoch = 0;
    LossValue loss;  // epoch mean over steps
    double accuracy = 0.0;  // source train accuracy (pretrain) / target test accuracy (adapt)
    double pseudo_accuracy = 0.0;
    std::size_t seed_count = 0;
    std::size_t unreachable = 0;
    std::size_t mining_shrunk = 0;
    std::size_t mining_empty = 0;
    double wall_seconds = 0.0;  // reported separately, not part of the metric stream
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    bool aborted = false;
    std::string abort_reason;
};

// Cross-entropy pretraining on the source domain; classifier rows are
// re-normalized after every step.
RunRecord pretrain_source(FeatureExtractor& fe, Classifier& cl, const Dataset& source,
                          const ExperimentConfig& cfg, std::uint64_t seed);

// One adaptation run of the frozen-classifier fine-tuning loop. The
// classifier must be frozen; its digest is asserted unchanged at the end.
RunRecord adapt_target(FeatureExtractor& fe, const Classifier& cl, const Dataset& target,
                       const ExperimentConfig& cfg, std::uint64_t seed);

// Fraction of rows in `split` whose predicted argmax matches the label.
double evaluate(const FeatureExtractor& fe, const Classifier& cl, const Dataset& ds, Split split);

// Deterministic per-step seed derivation, exposed so tests can
// reproduce the exact augmentation draws of a training step.
namespace trainer_detail {
inline constexpr std::uint64_t kShuffle = 101;
inline constexpr std::uint64_t kWeak = 102;
inline constexpr std::uint64_t kStrong = 103;
inline constexpr std::uint64_t kMix = 104;
inline constexpr std::uint64_t kViewsEasy = 105;
inline constexpr std::uint64_t kViewsHard = 106;

std::uint64_t epoch_seed(std::uint64_t run_seed, std::uint64_t epoch, std::uint64_t purpose);
std::uint64_t step_seed(std::uint64_t run_seed, std::uint64_t epoch, std::uint64_t step,
                        std::uint64_t purpose);
}  // namespace trainer_detail

}  // namespace serl
