#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "serl/config.hpp"
#include "serl/trainer.hpp"

namespace serl {
class MetricsStream;
}

namespace serl::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct PipelineResult {
    RunRecord pretrain;
    RunRecord adapt;
    double test_accuracy = 0.0;
    FeatureExtractor fe;
    Classifier cl;
};

// pretrain -> freeze -> adapt for one training seed; data comes from
// cfg.data_seed so every seed sees the same task.
PipelineResult run_pipeline(const ExperimentConfig& cfg, std::uint64_t train_seed,
                            MetricsStream* metrics);

struct RunOutcome {
    std::vector<double> per_seed_accuracy;
    double mean = 0.0;
    double stddev = 0.0;
};

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out,
                 std::ostream& err);

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, bool export_features,
            std::ostream& out, std::ostream& err, RunOutcome* outcome = nullptr);

struct AblateRow {
    std::string mask;  // "base", "prob", "prob+mix", ...
    bool prob = false, mix = false, pre = false;
    std::vector<double> per_seed_accuracy;
    double mean = 0.0;
    double stddev = 0.0;
};

// Grid over the on/off combinations of the requested terms (all three
// by default), base objective always active.
int cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::string>& terms,
               const std::string& out_dir, std::ostream& out, std::ostream& err,
               std::vector<AblateRow>* rows_out = nullptr);

int cmd_gradcheck(std::ostream& out, std::ostream& err, const std::string& inject_error = "");

}  // namespace serl::harness
