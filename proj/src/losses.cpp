#include "serl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "serl/errors.hpp"

namespace serl {

using autodiff::Tape;
using autodiff::TensorPtr;

namespace {

std::size_t argmax_row(const double* p, std::size_t c) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j) {
        if (p[j] > p[arg]) arg = j;
    }
    return arg;
}

}  // namespace

LossValue total_loss(double l_l, double l_u, double l_mi, double l_prob, double l_mix,
                     double l_pre, const LossWeights& w) {
    if (w.prob < 0.0 || w.mix < 0.0 || w.pre < 0.0) {
        throw ConfigError("loss weights must be non-negative");
    }
    LossValue v;
    v.l_l = l_l;
    v.l_u = l_u;
    v.l_mi = l_mi;
    v.l_prob = l_prob;
    v.l_mix = l_mix;
    v.l_pre = l_pre;
    v.total = v.base() + w.prob * l_prob + w.mix * l_mix + w.pre * l_pre;
    return v;
}

TensorPtr ce_labeled(Tape& t, const TensorPtr& probs, const std::vector<int>& labels) {
    if (labels.size() != probs->rows) {
        throw DimensionError("ce_labeled: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(probs->rows) + " rows");
    }
    Matrix onehot(probs->rows, probs->cols);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs->cols) {
            throw IndexError("ce_labeled: label " + std::to_string(labels[i]) +
                             " out of range for " + std::to_string(probs->cols) + " classes");
        }
        onehot.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    auto mask = t.constant(onehot.rows, onehot.cols, onehot.v);
    auto picked = autodiff::row_dot(t, probs, mask);
    return autodiff::scale(t, autodiff::mean_all(t, autodiff::log_clamped(t, picked, kLogEps)),
                           -1.0);
}

TensorPtr ce_pseudo(Tape& t, const TensorPtr& probs, const Matrix& pseudo_onehot) {
    if (pseudo_onehot.rows != probs->rows || pseudo_onehot.cols != probs->cols) {
        throw DimensionError("ce_pseudo: pseudo-label shape mismatch");
    }
    auto mask = t.constant(pseudo_onehot.rows, pseudo_onehot.cols, pseudo_onehot.v);
    auto picked = autodiff::row_dot(t, probs, mask);
    return autodiff::scale(t, autodiff::mean_all(t, autodiff::log_clamped(t, picked, kLogEps)),
                           -1.0);
}

TensorPtr mutual_info(Tape& t, const TensorPtr& probs) {
    const std::size_t n = probs->rows;
    // mean per-row entropy
    auto plogp = autodiff::mul(t, probs, autodiff::log_clamped(t, probs, kLogEps));
    auto row_ent = autodiff::scale(t, autodiff::sum_rows(t, plogp), -1.0);
    auto mean_ent = autodiff::mean_all(t, row_ent);
    // entropy of the mean prediction
    auto avg = t.constant(1, n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    auto marginal = autodiff::matmul(t, avg, probs);
    auto marg_plogp = autodiff::mul(t, marginal, autodiff::log_clamped(t, marginal, kLogEps));
    auto marg_ent = autodiff::scale(t, autodiff::sum_all(t, marg_plogp), -1.0);
    return autodiff::sub(t, mean_ent, marg_ent);
}

TensorPtr base_loss(Tape& t, const TensorPtr& l_l, const TensorPtr& l_u, const TensorPtr& l_mi) {
    return autodiff::add(t, autodiff::add(t, l_l, l_u), l_mi);
}

double adaptive_weight(std::span<const double> p_i, std::span<const double> p_k,
                       bool same_index) {
    if (same_index) return 1.0;
    if (argmax_row(p_i.data(), p_i.size()) != argmax_row(p_k.data(), p_k.size())) return 0.0;
    double dot = 0.0;
    for (std::size_t j = 0; j < p_i.size(); ++j) dot += p_i[j] * p_k[j];
    return dot;
}

bool check_onehot_product(std::span<const double> p_i, std::span<const double> p_j) {
    double dot = 0.0;
    for (std::size_t k = 0; k < p_i.size(); ++k) dot += p_i[k] * p_j[k];
    return std::abs(dot - 1.0) <= 1e-12;
}

TensorPtr spcr_loss(Tape& t, const TensorPtr& probs, const std::vector<std::size_t>& counterpart,
                    double tau, bool normalize) {
    const std::size_t n = probs->rows;  // 2B view rows
    const std::size_t c = probs->cols;
    if (n < 4 || n % 2 != 0) {
        throw ContractError("spcr_loss: need 2B rows with B >= 2, got " + std::to_string(n));
    }
    if (counterpart.size() != n) {
        throw ContractError("spcr_loss: counterpart map size mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (counterpart[i] >= n || counterpart[i] == i || counterpart[counterpart[i]] != i) {
            throw ContractError("spcr_loss: counterpart map is not a fixed-point-free involution");
        }
    }
    if (!(tau > 0.0)) throw ConfigError("spcr_loss: tau must be > 0");

    std::vector<std::size_t> arg(n);
    for (std::size_t i = 0; i < n; ++i) arg[i] = argmax_row(probs->data.data() + i * c, c);

    // constant pair structure; the weights themselves stay on the tape
    Matrix counter_mask(n, n), same_mask(n, n), offdiag(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) offdiag.at(i, j) = 1.0;
        }
        counter_mask.at(i, counterpart[i]) = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != i && k != counterpart[i] && arg[k] == arg[i]) same_mask.at(i, k) = 1.0;
        }
    }

    auto gram = autodiff::matmul(t, probs, autodiff::transpose(t, probs));
    auto logits = autodiff::scale(t, gram, 1.0 / tau);
    auto expd = autodiff::exp(t, logits);
    auto denom = autodiff::sum_rows(
        t, autodiff::mul(t, expd, t.constant(n, n, offdiag.v)));  // n x 1
    auto log_denom = autodiff::log_clamped(t, denom, 1e-300);
    auto log_denom_bcast =
        autodiff::matmul(t, log_denom, t.constant(1, n, std::vector<double>(n, 1.0)));
    auto log_ratio = autodiff::sub(t, logits, log_denom_bcast);

    auto weights = autodiff::add(t, t.constant(n, n, counter_mask.v),
                                 autodiff::mul(t, gram, t.constant(n, n, same_mask.v)));
    auto total = autodiff::sum_all(t, autodiff::mul(t, weights, log_ratio));
    const double norm = normalize ? -1.0 / static_cast<double>(n) : -1.0;
    return autodiff::scale(t, total, norm);
}

TensorPtr hmr_loss(Tape& t, const TensorPtr& probs_mix, const Matrix& y_mix) {
    if (y_mix.rows != probs_mix->rows || y_mix.cols != probs_mix->cols) {
        throw DimensionError("hmr_loss: target shape " + std::to_string(y_mix.rows) + "x" +
                             std::to_string(y_mix.cols) + " vs probs " + probs_mix->shape_str());
    }
    auto target = t.constant(y_mix.rows, y_mix.cols, y_mix.v);
    auto diff = autodiff::sub(t, probs_mix, target);
    auto sq = autodiff::sum_all(t, autodiff::mul(t, diff, diff));
    return autodiff::scale(t, sq, 1.0 / static_cast<double>(y_mix.rows));
}

EarlyPredictionStore::EarlyPredictionStore(std::size_t n_samples, std::size_t classes,
                                           double momentum)
    : classes_(classes), beta_(momentum), targets_(n_samples, classes, 0.0),
      counts_(n_samples, 0) {
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ConfigError("EarlyPredictionStore: momentum must be in [0,1)");
    }
}

void EarlyPredictionStore::update(const ProbMatrix& probs, const std::vector<std::size_t>& ids) {
    if (probs.rows != ids.size() || probs.cols != classes_) {
        throw DimensionError("EarlyPredictionStore::update: shape mismatch");
    }
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const std::size_t id = ids[r];
        if (id >= counts_.size()) {
            throw IndexError("EarlyPredictionStore::update: unknown sample id " +
                             std::to_string(id));
        }
        for (std::size_t j = 0; j < classes_; ++j) {
            targets_.at(id, j) = beta_ * targets_.at(id, j) + (1.0 - beta_) * probs.at(r, j);
        }
        ++counts_[id];
    }
}

bool EarlyPredictionStore::initialized(std::size_t id) const {
    if (id >= counts_.size()) {
        throw IndexError("EarlyPredictionStore: unknown sample id " + std::to_string(id));
    }
    return counts_[id] > 0;
}

std::size_t EarlyPredictionStore::update_count(std::size_t id) const {
    if (id >= counts_.size()) {
        throw IndexError("EarlyPredictionStore: unknown sample id " + std::to_string(id));
    }
    return counts_[id];
}

const double* EarlyPredictionStore::target(std::size_t id) const {
    if (id >= counts_.size()) {
        throw IndexError("EarlyPredictionStore: unknown sample id " + std::to_string(id));
    }
    return targets_.row(id);
}

TensorPtr tpr_loss(Tape& t, const EarlyPredictionStore& store, const TensorPtr& probs,
                   const std::vector<std::size_t>& ids) {
    if (probs->rows != ids.size()) {
        throw DimensionError("tpr_loss: id count does not match probability rows");
    }
    Matrix targets(ids.size(), store.classes());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (!store.initialized(ids[r])) {
            throw ContractError("tpr_loss: sample " + std::to_string(ids[r]) +
                                " has no early prediction; update the store first");
        }
        const double* y = store.target(ids[r]);
        for (std::size_t j = 0; j < store.classes(); ++j) targets.at(r, j) = y[j];
    }
    auto y = t.constant(targets.rows, targets.cols, targets.v);
    auto agree = autodiff::row_dot(t, y, probs);  // n x 1
    auto ones = t.constant(agree->rows, 1, std::vector<double>(agree->rows, 1.0));
    auto gap = autodiff::sub(t, ones, agree);
    return autodiff::mean_all(t, autodiff::log_clamped(t, gap, kLogEps));
}

TensorPtr combine_total(Tape& t, const TensorPtr& base, const TensorPtr& prob,
                        const TensorPtr& mix, const TensorPtr& pre, const LossWeights& w) {
    if (w.prob < 0.0 || w.mix < 0.0 || w.pre < 0.0) {
        throw ConfigError("loss weights must be non-negative");
    }
    TensorPtr total = base;
    if (prob != nullptr && w.prob != 0.0) {
        total = autodiff::add(t, total, autodiff::scale(t, prob, w.prob));
    }
    if (mix != nullptr && w.mix != 0.0) {
        total = autodiff::add(t, total, autodiff::scale(t, mix, w.mix));
    }
    if (pre != nullptr && w.pre != 0.0) {
        total = autodiff::add(t, total, autodiff::scale(t, pre, w.pre));
    }
    return total;
}

}  // namespace serl
