#include "serl/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>

#include "serl/losses.hpp"
#include "serl/rng.hpp"

namespace serl {

using autodiff::GradCheckInput;
using autodiff::Tape;
using autodiff::TensorPtr;

namespace {

// logits whose softmax rows have a clear argmax, so the pair structure
// inside spcr/adaptive weights cannot flip under the fd perturbation
GradCheckInput separated_logits(Rng& rng, std::size_t rows, std::size_t cols) {
    GradCheckInput gi;
    gi.rows = rows;
    gi.cols = cols;
    for (;;) {
        gi.values.assign(rows * cols, 0.0);
        for (auto& v : gi.values) v = rng.uniform(-2.0, 2.0);
        bool ok = true;
        for (std::size_t i = 0; i < rows && ok; ++i) {
            double top = -1e300, second = -1e300;
            for (std::size_t j = 0; j < cols; ++j) {
                const double v = gi.values[i * cols + j];
                if (v > top) {
                    second = top;
                    top = v;
                } else if (v > second) {
                    second = v;
                }
            }
            if (top - second < 0.15) ok = false;
        }
        if (ok) return gi;
    }
}

// adds a value-dependent constant to the loss; the tape misses its
// dependence on the input, so the finite-difference check must fail
TensorPtr corrupt_term(Tape& t, const TensorPtr& loss, const TensorPtr& leaf) {
    auto frozen_copy = t.constant(leaf->rows, leaf->cols, leaf->data);
    auto bad = autodiff::scale(t, autodiff::sum_all(t, autodiff::mul(t, frozen_copy, leaf)), 0.01);
    return autodiff::add(t, loss, bad);
}

Matrix random_simplex_rows(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            m.at(i, j) = -std::log(std::max(rng.uniform(), 1e-12));
            sum += m.at(i, j);
        }
        for (std::size_t j = 0; j < cols; ++j) m.at(i, j) /= sum;
    }
    return m;
}

}  // namespace

std::vector<GradCheckReport> run_loss_gradchecks(std::size_t instances_per_loss, double h,
                                                 std::uint64_t seed, const std::string& corrupt) {
    std::vector<GradCheckReport> reports;
    Rng rng(Rng::fold(seed, 0x67636bULL));

    auto matches = [&corrupt](const std::string& name) {
        return !corrupt.empty() && name.find(corrupt) != std::string::npos;
    };

    // L_l: labeled cross entropy
    {
        GradCheckReport rep{"L_l/ce_labeled", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(5);
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, b, c);
            std::vector<int> labels(b);
            for (auto& l : labels) l = static_cast<int>(rng.uniform_int(c));
            auto builder = [labels, bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = ce_labeled(t, probs, labels);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    // L_u: pseudo-label cross entropy
    {
        GradCheckReport rep{"L_u/ce_pseudo", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(5);
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, b, c);
            Matrix pseudo(b, c);
            for (std::size_t i = 0; i < b; ++i) pseudo.at(i, rng.uniform_int(c)) = 1.0;
            auto builder = [pseudo, bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = ce_pseudo(t, probs, pseudo);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    // L_mi: mutual information
    {
        GradCheckReport rep{"L_mi/mutual_info", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(5);
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, b, c);
            auto builder = [bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = mutual_info(t, probs);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    // L_prob: probability contrastive regularization over 2B views
    {
        GradCheckReport rep{"L_prob/spcr", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(2);  // B in {2,3}
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, 2 * b, c);
            std::vector<std::size_t> counterpart(2 * b);
            for (std::size_t i = 0; i < b; ++i) {
                counterpart[i] = b + i;
                counterpart[b + i] = i;
            }
            auto builder = [counterpart, bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = spcr_loss(t, probs, counterpart, 0.15, true);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    // L_mix: hard-sample mixup regularization
    {
        GradCheckReport rep{"L_mix/hmr", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(5);
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, b, c);
            // mixed targets: convex combinations of two one-hots
            Matrix y(b, c);
            for (std::size_t i = 0; i < b; ++i) {
                const double theta = rng.uniform();
                const std::size_t a = rng.uniform_int(c);
                const std::size_t bb = rng.uniform_int(c);
                y.at(i, a) += theta;
                y.at(i, bb) += 1.0 - theta;
            }
            auto builder = [y, bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = hmr_loss(t, probs, y);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    // L_pre: target prediction regularization
    {
        GradCheckReport rep{"L_pre/tpr", 0.0, instances_per_loss};
        const bool bad = matches(rep.name);
        for (std::size_t n = 0; n < instances_per_loss; ++n) {
            const std::size_t b = 2 + rng.uniform_int(5);
            const std::size_t c = 2 + rng.uniform_int(3);
            auto gi = separated_logits(rng, b, c);
            EarlyPredictionStore store(b, c, 0.7);
            std::vector<std::size_t> ids(b);
            for (std::size_t i = 0; i < b; ++i) ids[i] = i;
            const std::size_t warm = 1 + rng.uniform_int(3);
            for (std::size_t u = 0; u < warm; ++u) {
                store.update(random_simplex_rows(rng, b, c), ids);
            }
            // store is fixed state; the builder closes over it read-only
            auto builder = [&store, ids, bad](Tape& t, const std::vector<TensorPtr>& in) {
                auto probs = autodiff::softmax_rows(t, in[0]);
                auto loss = tpr_loss(t, store, probs, ids);
                return bad ? corrupt_term(t, loss, in[0]) : loss;
            };
            rep.max_rel_error =
                std::max(rep.max_rel_error, autodiff::grad_check(builder, {gi}, h));
        }
        reports.push_back(rep);
    }

    return reports;
}

}  // namespace serl
