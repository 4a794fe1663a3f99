#pragma once

#include <fstream>
#include <string>

#include "serl/config.hpp"
#include "serl/trainer.hpp"

namespace serl {

// Append-only JSON-lines stream, one record per epoch. The first line
// carries the schema version and the config snapshot. Records contain
// only deterministic fields; per-epoch wall time goes to a separate
// timings file so reruns of the same config are byte-identical.
class MetricsStream {
  public:
    MetricsStream(const std::string& path, const std::string& run_id,
                  const ExperimentConfig& snapshot);

    void write_epoch(const std::string& phase, const EpochRecord& rec);

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::string run_id_;
    std::ofstream out_;
    std::ofstream timings_;
};

}  // namespace serl
