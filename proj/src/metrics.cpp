#include "serl/metrics.hpp"

#include <json.hpp>

#include "serl/errors.hpp"

namespace serl {

using ordered_json = nlohmann::ordered_json;

MetricsStream::MetricsStream(const std::string& path, const std::string& run_id,
                             const ExperimentConfig& snapshot)
    : path_(path), run_id_(run_id), out_(path), timings_(path + ".timings") {
    if (!out_) throw DataError("cannot open metrics stream: " + path);
    ordered_json head;
    head["schema"] = "serl-metrics-v1";
    head["run_id"] = run_id;
    head["config"] = serialize_config(snapshot);
    out_ << head.dump() << '\n';
    out_.flush();
}

void MetricsStream::write_epoch(const std::string& phase, const EpochRecord& rec) {
    ordered_json j;
    j["run_id"] = run_id_;
    j["phase"] = phase;
    j["epoch"] = rec.epoch;
    j["loss_total"] = rec.loss.total;
    j["loss_l"] = rec.loss.l_l;
    j["loss_u"] = rec.loss.l_u;
    j["loss_mi"] = rec.loss.l_mi;
    j["loss_prob"] = rec.loss.l_prob;
    j["loss_mix"] = rec.loss.l_mix;
    j["loss_pre"] = rec.loss.l_pre;
    j["accuracy"] = rec.accuracy;
    j["pseudo_accuracy"] = rec.pseudo_accuracy;
    j["seed_count"] = rec.seed_count;
    j["unreachable"] = rec.unreachable;
    j["mining_shrunk"] = rec.mining_shrunk;
    j["mining_empty"] = rec.mining_empty;
    out_ << j.dump() << '\n';
    out_.flush();

    ordered_json tj;
    tj["phase"] = phase;
    tj["epoch"] = rec.epoch;
    tj["wall_seconds"] = rec.wall_seconds;
    timings_ << tj.dump() << '\n';
    timings_.flush();
}

}  // namespace serl
