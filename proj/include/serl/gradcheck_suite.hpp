#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace serl {

struct GradCheckReport {
    std::string name;       // e.g. "L_prob/spcr"
    double max_rel_error = 0.0;
    std::size_t instances = 0;
};

// Central finite-difference checks for all six loss terms on randomized
// small instances (batch <= 6, c <= 4), differentiating through softmax
// from raw logits. `corrupt` names a loss (substring match) whose
// objective gets a value-dependent constant mixed in, which the check
// must flag; used as a negative control.
std::vector<GradCheckReport> run_loss_gradchecks(std::size_t instances_per_loss, double h,
                                                 std::uint64_t seed,
                                                 const std::string& corrupt = "");

}  // namespace serl
