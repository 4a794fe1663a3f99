#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "serl/matrix.hpp"
#include "serl/tensor.hpp"

namespace serl {

inline constexpr double kLogEps = 1e-8;  // clamp for every log and log(1-x)

// Eq-style scalar weights for the total objective.
struct LossWeights {
    double prob = 0.3;
    double mix = 60.0;
    double pre = 3.0;
};

// Per-step loss breakdown; total = base + prob*w + mix*w + pre*w.
struct LossValue {
    double total = 0.0;
    double l_l = 0.0;
    double l_u = 0.0;
    double l_mi = 0.0;
    double l_prob = 0.0;
    double l_mix = 0.0;
    double l_pre = 0.0;

    double base() const { return l_l + l_u + l_mi; }
};

LossValue total_loss(double l_l, double l_u, double l_mi, double l_prob, double l_mix,
                     double l_pre, const LossWeights& w);

// --- differentiable loss terms (scalar tape outputs) ----------------------

// mean of -log p_i[y_i]
autodiff::TensorPtr ce_labeled(autodiff::Tape& t, const autodiff::TensorPtr& probs,
                               const std::vector<int>& labels);

// same objective against one-hot pseudo-label rows
autodiff::TensorPtr ce_pseudo(autodiff::Tape& t, const autodiff::TensorPtr& probs,
                              const Matrix& pseudo_onehot);

// mean_i H(p_i) - H(mean_i p_i); minimizing favors confident rows and a
// diverse marginal
autodiff::TensorPtr mutual_info(autodiff::Tape& t, const autodiff::TensorPtr& probs);

autodiff::TensorPtr base_loss(autodiff::Tape& t, const autodiff::TensorPtr& l_l,
                              const autodiff::TensorPtr& l_u, const autodiff::TensorPtr& l_mi);

// pair weight: 1 for the counterpart view, p_i.p_k for same-argmax
// peers, 0 otherwise (argmax ties break toward the lower index)
double adaptive_weight(std::span<const double> p_i, std::span<const double> p_k, bool same_index);

// true iff p_i . p_j == 1 within 1e-12, which holds exactly when both
// rows are one-hot with the same argmax
bool check_onehot_product(std::span<const double> p_i, std::span<const double> p_j);

// Probability contrastive loss over 2B view rows. counterpart[i] is the
// index of row i's other view. Positives per anchor i: the counterpart
// (weight 1) and every other row sharing i's argmax (weight p_i.p_k);
// the denominator runs over all j != i. Divides by 2B when normalize.
autodiff::TensorPtr spcr_loss(autodiff::Tape& t, const autodiff::TensorPtr& probs,
                              const std::vector<std::size_t>& counterpart, double tau,
                              bool normalize = true);

// mean over rows of ||p - y_mix||^2
autodiff::TensorPtr hmr_loss(autodiff::Tape& t, const autodiff::TensorPtr& probs_mix,
                             const Matrix& y_mix);

// Per-unlabeled-sample moving average of past predictions, used as the
// early-learning target; updates are detached from the tape.
class EarlyPredictionStore {
  public:
    EarlyPredictionStore(std::size_t n_samples, std::size_t classes, double momentum);

    void update(const ProbMatrix& probs, const std::vector<std::size_t>& ids);
    bool initialized(std::size_t id) const;
    std::size_t update_count(std::size_t id) const;
    const double* target(std::size_t id) const;
    double momentum() const { return beta_; }
    std::size_t classes() const { return classes_; }
    std::size_t size() const { return counts_.size(); }

  private:
    std::size_t classes_;
    double beta_;
    Matrix targets_;
    std::vector<std::size_t> counts_;
};

// mean of log(1 - ytilde_i . p_i), argument clamped to >= kLogEps;
// gradient flows through p only. Every id must have been updated first.
autodiff::TensorPtr tpr_loss(autodiff::Tape& t, const EarlyPredictionStore& store,
                             const autodiff::TensorPtr& probs,
                             const std::vector<std::size_t>& ids);

// base + lambda-weighted regularizers, skipping zero-weight terms
autodiff::TensorPtr combine_total(autodiff::Tape& t, const autodiff::TensorPtr& base,
                                  const autodiff::TensorPtr& prob, const autodiff::TensorPtr& mix,
                                  const autodiff::TensorPtr& pre, const LossWeights& w);

}  // namespace serl
