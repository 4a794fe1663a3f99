#include "serl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "serl/errors.hpp"
#include "serl/propagation.hpp"
#include "serl/rng.hpp"

namespace serl {

using autodiff::Tape;
using autodiff::TensorPtr;

namespace trainer_detail {
std::uint64_t epoch_seed(std::uint64_t run_seed, std::uint64_t epoch, std::uint64_t purpose) {
    return Rng::fold(run_seed, epoch + 1, purpose);
}
std::uint64_t step_seed(std::uint64_t run_seed, std::uint64_t epoch, std::uint64_t step,
                        std::uint64_t purpose) {
    return Rng::fold(run_seed, epoch + 1, step + 1, purpose);
}
}  // namespace trainer_detail

void SgdOptimizer::add_group(std::vector<double>* params, double lr) {
    groups_.push_back(Group{params, lr, std::vector<double>(params->size(), 0.0)});
}

void SgdOptimizer::step(const std::vector<const std::vector<double>*>& grads) {
    if (grads.size() != groups_.size()) {
        throw ContractError("SgdOptimizer::step: gradient count does not match groups");
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        auto& grp = groups_[g];
        const auto& grad = *grads[g];
        if (grad.size() != grp.params->size()) {
            throw DimensionError("SgdOptimizer::step: gradient shape mismatch");
        }
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g_i = grad[i] + weight_decay_ * (*grp.params)[i];
            grp.velocity[i] = momentum_ * grp.velocity[i] + g_i;
            if (grp.lr != 0.0) (*grp.params)[i] -= grp.lr * grp.velocity[i];
        }
    }
}

namespace {

Matrix rows_of(const Dataset& ds, const std::vector<std::size_t>& idx) {
    return ds.features.take_rows(idx);
}

std::vector<int> labels_of(const Dataset& ds, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(ds.labels[i]);
    return out;
}

std::vector<const std::vector<double>*> extractor_grads(const ModelBinding& bind) {
    for (const auto& t : {bind.w1, bind.b1, bind.w2, bind.b2, bind.w3, bind.b3}) {
        t->ensure_grad();
    }
    return {&bind.w1->grad, &bind.b1->grad, &bind.w2->grad,
            &bind.b2->grad, &bind.w3->grad, &bind.b3->grad};
}

SgdOptimizer make_extractor_optimizer(FeatureExtractor& fe, const ExperimentConfig& cfg) {
    SgdOptimizer opt(cfg.momentum, cfg.weight_decay);
    opt.add_group(&fe.w1, cfg.lr_feature);
    opt.add_group(&fe.b1, cfg.lr_feature);
    opt.add_group(&fe.w2, cfg.lr_feature);
    opt.add_group(&fe.b2, cfg.lr_feature);
    opt.add_group(&fe.w3, cfg.lr_bottleneck);
    opt.add_group(&fe.b3, cfg.lr_bottleneck);
    return opt;
}

}  // namespace

double evaluate(const FeatureExtractor& fe, const Classifier& cl, const Dataset& ds,
                Split split) {
    const auto idx = ds.indices_of(split);
    if (idx.empty()) throw DataError("evaluate: split is empty");
    const Matrix x = rows_of(ds, idx);
    const ProbMatrix p = predict_probs(fe, cl, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < p.cols; ++j) {
            if (p.at(i, j) > p.at(i, arg)) arg = j;
        }
        if (static_cast<int>(arg) == ds.labels[idx[i]]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

RunRecord pretrain_source(FeatureExtractor& fe, Classifier& cl, const Dataset& source,
                          const ExperimentConfig& cfg, std::uint64_t seed) {
    RunRecord rec;
    rec.seed = seed;
    if (source.size() == 0) throw DataError("pretrain_source: empty dataset");

    SgdOptimizer opt = make_extractor_optimizer(fe, cfg);
    opt.add_group(&cl.weights, cfg.lr_classifier);

    std::vector<std::size_t> order(source.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.source_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng(trainer_detail::epoch_seed(seed, epoch, trainer_detail::kShuffle));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_unlabeled) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_unlabeled);
            std::vector<std::size_t> batch(order.begin() + static_cast<long>(start),
                                           order.begin() + static_cast<long>(end));
            Tape tape;
            ModelBinding bind(tape, fe, cl, true, true);
            auto x = tape.constant(batch.size(), source.dim, rows_of(source, batch).v);
            auto probs = bind.probs(x);
            auto loss = ce_labeled(tape, probs, labels_of(source, batch));
            const double lv = loss->value();
            if (!std::isfinite(lv)) {
                rec.aborted = true;
                rec.abort_reason = "pretrain loss diverged at epoch " + std::to_string(epoch);
                return rec;
            }
            tape.backward(loss);
            auto grads = extractor_grads(bind);
            bind.cls->ensure_grad();
            grads.push_back(&bind.cls->grad);
            opt.step(grads);
            normalize_classifier_rows(cl);
            loss_sum += lv;
            ++steps;
        }
        EpochRecord er;
        er.epoch = epoch;
        er.loss.l_l = steps ? loss_sum / static_cast<double>(steps) : 0.0;
        er.loss.total = er.loss.l_l;
        er.accuracy = evaluate(fe, cl, source, Split::Labeled);
        er.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.epochs.push_back(er);
    }
    return rec;
}

namespace {

struct EpochPlan {
    std::vector<int> pseudo_labels;  // per unlabeled-pool position
    Matrix pseudo_onehot;            // N_u x c
    std::size_t seed_count = 0;
    std::size_t unreachable = 0;
    double pseudo_accuracy = 0.0;
    // mined mixup pools in input space, views included
    Matrix easy_x, easy_y, hard_x, hard_y;
    std::size_t mining_shrunk = 0, mining_empty = 0;
    bool has_mix_pools = false;
};

EpochPlan plan_epoch(const FeatureExtractor& fe, const Classifier& cl, const Dataset& target,
                     const std::vector<std::size_t>& labeled_idx,
                     const std::vector<std::size_t>& unlabeled_idx, const ExperimentConfig& cfg,
                     std::uint64_t seed, std::size_t epoch, bool need_mix) {
    EpochPlan plan;
    const std::size_t c = cfg.classes;
    const std::size_t n_u = unlabeled_idx.size();

    const Matrix x_l = target.features.take_rows(labeled_idx);
    const Matrix x_u = target.features.take_rows(unlabeled_idx);
    const Matrix feats_l = extract_features(fe, x_l);
    const Matrix feats_u = extract_features(fe, x_u);
    const ProbMatrix probs_u = predict_probs(fe, cl, x_u);

    plan.pseudo_onehot = Matrix(n_u, c);
    plan.pseudo_labels.assign(n_u, 0);

    if (cfg.pseudo_source == PseudoSource::Propagate) {
        Matrix z(feats_l.rows + feats_u.rows, feats_l.cols);
        std::copy(feats_l.v.begin(), feats_l.v.end(), z.v.begin());
        std::copy(feats_u.v.begin(), feats_u.v.end(),
                  z.v.begin() + static_cast<long>(feats_l.numel()));
        const NeighborGraph graph = build_knn_graph(z, cfg.knn_k);
        const SeedSet seeds =
            select_seeds(probs_u, labels_of(target, labeled_idx), cfg.seed_quantile);
        // model predictions serve as the fallback for unreachable nodes
        const ProbMatrix probs_l = predict_probs(fe, cl, x_l);
        ProbMatrix fallback(z.rows, c);
        std::copy(probs_l.v.begin(), probs_l.v.end(), fallback.v.begin());
        std::copy(probs_u.v.begin(), probs_u.v.end(),
                  fallback.v.begin() + static_cast<long>(probs_l.numel()));
        const PseudoLabels pl = propagate(graph, seeds, c, cfg.prop_alpha, cfg.prop_max_iters,
                                          cfg.prop_tol, &fallback);
        plan.seed_count = seeds.nodes.size();
        plan.unreachable = pl.unreachable;
        for (std::size_t i = 0; i < n_u; ++i) {
            const std::size_t node = labeled_idx.size() + i;
            plan.pseudo_labels[i] = pl.labels[node];
            plan.pseudo_onehot.at(i, static_cast<std::size_t>(pl.labels[node])) = 1.0;
        }
    } else {
        for (std::size_t i = 0; i < n_u; ++i) {
            std::size_t arg = 0;
            for (std::size_t j = 1; j < c; ++j) {
                if (probs_u.at(i, j) > probs_u.at(i, arg)) arg = j;
            }
            plan.pseudo_labels[i] = static_cast<int>(arg);
            plan.pseudo_onehot.at(i, arg) = 1.0;
        }
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_u; ++i) {
        if (plan.pseudo_labels[i] == target.labels[unlabeled_idx[i]]) ++hits;
    }
    plan.pseudo_accuracy = n_u ? static_cast<double>(hits) / static_cast<double>(n_u) : 0.0;

    if (need_mix) {
        const MinedSets mined = mine(feats_u, plan.pseudo_labels, anchors(cl), cfg.n_easy,
                                     cfg.n_hard, cfg.hard_pool);
        plan.mining_shrunk = mined.shrunk_classes;
        plan.mining_empty = mined.empty_classes;
        std::vector<std::size_t> easy_rows, hard_rows;
        std::vector<int> easy_cls, hard_cls;
        for (std::size_t k = 0; k < c; ++k) {
            for (std::size_t id : mined.easy[k]) {
                easy_rows.push_back(unlabeled_idx[id]);
                easy_cls.push_back(static_cast<int>(k));
            }
            for (std::size_t id : mined.hard[k]) {
                hard_rows.push_back(unlabeled_idx[id]);
                hard_cls.push_back(static_cast<int>(k));
            }
        }
        if (!easy_rows.empty() && !hard_rows.empty()) {
            const AugmentSpec aug = cfg.augment_spec();
            plan.easy_x = build_views(
                target.features.take_rows(easy_rows), aug,
                trainer_detail::epoch_seed(seed, epoch, trainer_detail::kViewsEasy));
            plan.hard_x = build_views(
                target.features.take_rows(hard_rows), aug,
                trainer_detail::epoch_seed(seed, epoch, trainer_detail::kViewsHard));
            // view rows come back as [originals; augmented], labels repeat
            Matrix ey(easy_rows.size() * 2, c), hy(hard_rows.size() * 2, c);
            for (std::size_t r = 0; r < easy_rows.size(); ++r) {
                ey.at(r, static_cast<std::size_t>(easy_cls[r])) = 1.0;
                ey.at(easy_rows.size() + r, static_cast<std::size_t>(easy_cls[r])) = 1.0;
            }
            for (std::size_t r = 0; r < hard_rows.size(); ++r) {
                hy.at(r, static_cast<std::size_t>(hard_cls[r])) = 1.0;
                hy.at(hard_rows.size() + r, static_cast<std::size_t>(hard_cls[r])) = 1.0;
            }
            plan.easy_y = std::move(ey);
            plan.hard_y = std::move(hy);
            plan.has_mix_pools = true;
        }
    }
    return plan;
}

}  // namespace

RunRecord adapt_target(FeatureExtractor& fe, const Classifier& cl, const Dataset& target,
                       const ExperimentConfig& cfg, std::uint64_t seed) {
    if (!cl.frozen) {
        throw ContractError("adapt_target: classifier must be frozen before adaptation");
    }
    const ParamDigest digest_before = classifier_digest(cl);

    RunRecord rec;
    rec.seed = seed;

    const auto labeled_idx = target.indices_of(Split::Labeled);
    const auto unlabeled_idx = target.indices_of(Split::Unlabeled);
    if (labeled_idx.empty()) throw DataError("adapt_target: no labeled target rows");
    if (unlabeled_idx.empty()) throw DataError("adapt_target: no unlabeled target rows");

    const std::size_t c = cfg.classes;
    const LossWeights weights{cfg.lambda_prob, cfg.lambda_mix, cfg.lambda_pre};
    const bool st_only = cfg.objective == Objective::St;
    const AugmentSpec aug = cfg.augment_spec();

    SgdOptimizer opt = make_extractor_optimizer(fe, cfg);
    EarlyPredictionStore store(unlabeled_idx.size(), c, cfg.beta);

    const std::vector<int> labeled_labels = labels_of(target, labeled_idx);
    const Matrix labeled_x = target.features.take_rows(labeled_idx);

    std::vector<std::size_t> u_order(unlabeled_idx.size());
    std::iota(u_order.begin(), u_order.end(), 0);
    std::size_t labeled_cursor = 0;

    for (std::size_t epoch = 0; epoch < cfg.adapt_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord er;
        er.epoch = epoch;

        LossValue sum;
        std::size_t steps = 0;

        if (st_only) {
            // supervised baseline: labeled-target cross entropy only
            std::vector<std::size_t> l_order(labeled_idx.size());
            std::iota(l_order.begin(), l_order.end(), 0);
            Rng shuffle_rng(trainer_detail::epoch_seed(seed, epoch, trainer_detail::kShuffle));
            shuffle_rng.shuffle(l_order);
            for (std::size_t start = 0; start < l_order.size(); start += cfg.batch_labeled) {
                const std::size_t end = std::min(l_order.size(), start + cfg.batch_labeled);
                std::vector<std::size_t> raw;
                std::vector<int> y;
                for (std::size_t p = start; p < end; ++p) {
                    raw.push_back(labeled_idx[l_order[p]]);
                    y.push_back(target.labels[labeled_idx[l_order[p]]]);
                }
                Tape tape;
                ModelBinding bind(tape, fe, cl, true, false);
                auto x = tape.constant(raw.size(), target.dim, rows_of(target, raw).v);
                auto loss = ce_labeled(tape, bind.probs(x), y);
                const double lv = loss->value();
                if (!std::isfinite(lv)) {
                    rec.aborted = true;
                    rec.abort_reason = "adapt loss diverged at epoch " + std::to_string(epoch);
                    return rec;
                }
                tape.backward(loss);
                opt.step(extractor_grads(bind));
                sum.l_l += lv;
                sum.total += lv;
                ++steps;
            }
        } else {
            const bool need_mix = weights.mix > 0.0;
            EpochPlan plan = plan_epoch(fe, cl, target, labeled_idx, unlabeled_idx, cfg, seed,
                                        epoch, need_mix);
            er.seed_count = plan.seed_count;
            er.unreachable = plan.unreachable;
            er.pseudo_accuracy = plan.pseudo_accuracy;
            er.mining_shrunk = plan.mining_shrunk;
            er.mining_empty = plan.mining_empty;

            Rng shuffle_rng(trainer_detail::epoch_seed(seed, epoch, trainer_detail::kShuffle));
            shuffle_rng.shuffle(u_order);

            std::vector<std::vector<std::size_t>> batches;
            for (std::size_t start = 0; start < u_order.size(); start += cfg.batch_unlabeled) {
                const std::size_t end = std::min(u_order.size(), start + cfg.batch_unlabeled);
                batches.emplace_back(u_order.begin() + static_cast<long>(start),
                                     u_order.begin() + static_cast<long>(end));
            }
            // spcr needs at least two instances per batch
            if (batches.size() > 1 && batches.back().size() < 2) {
                auto tail = batches.back();
                batches.pop_back();
                for (std::size_t v : tail) batches.back().push_back(v);
            }

            for (std::size_t s = 0; s < batches.size(); ++s) {
                const auto& ids = batches[s];  // positions in the unlabeled pool
                std::vector<std::size_t> raw;
                raw.reserve(ids.size());
                for (std::size_t id : ids) raw.push_back(unlabeled_idx[id]);

                const Matrix x_u = rows_of(target, raw);
                const Matrix x_w = augment(
                    x_u, aug, AugmentStrength::Weak,
                    trainer_detail::step_seed(seed, epoch, s, trainer_detail::kWeak));
                const Matrix x_s = augment(
                    x_u, aug, AugmentStrength::Strong,
                    trainer_detail::step_seed(seed, epoch, s, trainer_detail::kStrong));

                // labeled batch cycles with wraparound
                std::vector<std::size_t> l_raw;
                std::vector<int> l_y;
                for (std::size_t p = 0; p < std::min(cfg.batch_labeled, labeled_idx.size());
                     ++p) {
                    const std::size_t li = (labeled_cursor + p) % labeled_idx.size();
                    l_raw.push_back(labeled_idx[li]);
                    l_y.push_back(labeled_labels[li]);
                }
                labeled_cursor = (labeled_cursor + l_raw.size()) % labeled_idx.size();

                Matrix pseudo_rows(ids.size(), c);
                for (std::size_t r = 0; r < ids.size(); ++r) {
                    for (std::size_t j = 0; j < c; ++j) {
                        pseudo_rows.at(r, j) = plan.pseudo_onehot.at(ids[r], j);
                    }
                }

                Tape tape;
                ModelBinding bind(tape, fe, cl, true, false);

                auto xl = tape.constant(l_raw.size(), target.dim, rows_of(target, l_raw).v);
                auto l_l = ce_labeled(tape, bind.probs(xl), l_y);

                auto xw = tape.constant(x_w.rows, x_w.cols, x_w.v);
                auto xs = tape.constant(x_s.rows, x_s.cols, x_s.v);
                auto p_w = bind.probs(xw);
                auto l_u = ce_pseudo(tape, p_w, pseudo_rows);
                auto l_mi = mutual_info(tape, p_w);
                auto base = base_loss(tape, l_l, l_u, l_mi);

                // update-then-evaluate: the store sees this epoch's
                // predictions before the tpr term reads them
                store.update(ProbMatrix(p_w->rows, p_w->cols, p_w->data), ids);

                TensorPtr l_prob, l_mix, l_pre;
                if (weights.prob > 0.0 && ids.size() >= 2) {
                    auto p_s = bind.probs(xs);
                    auto views = autodiff::concat_rows(tape, p_w, p_s);
                    std::vector<std::size_t> counterpart(2 * ids.size());
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                        counterpart[i] = ids.size() + i;
                        counterpart[ids.size() + i] = i;
                    }
                    l_prob = spcr_loss(tape, views, counterpart, cfg.tau,
                                       cfg.spcr_normalize == SpcrNorm::Mean);
                }
                if (weights.mix > 0.0 && plan.has_mix_pools) {
                    const MixBatch mb =
                        mix(plan.easy_x, plan.easy_y, plan.hard_x, plan.hard_y, cfg.mix_alpha,
                            trainer_detail::step_seed(seed, epoch, s, trainer_detail::kMix),
                            cfg.pair_mode);
                    auto xm = tape.constant(mb.x.rows, mb.x.cols, mb.x.v);
                    l_mix = hmr_loss(tape, bind.probs(xm), mb.y);
                }
                if (weights.pre > 0.0) {
                    l_pre = tpr_loss(tape, store, p_w, ids);
                }

                auto total = combine_total(tape, base, l_prob, l_mix, l_pre, weights);
                const double tv = total->value();
                if (!std::isfinite(tv)) {
                    rec.aborted = true;
                    rec.abort_reason = "adapt loss diverged at epoch " + std::to_string(epoch);
                    return rec;
                }
                tape.backward(total);
                opt.step(extractor_grads(bind));

                const LossValue lv = total_loss(
                    l_l->value(), l_u->value(), l_mi->value(), l_prob ? l_prob->value() : 0.0,
                    l_mix ? l_mix->value() : 0.0, l_pre ? l_pre->value() : 0.0, weights);
                sum.l_l += lv.l_l;
                sum.l_u += lv.l_u;
                sum.l_mi += lv.l_mi;
                sum.l_prob += lv.l_prob;
                sum.l_mix += lv.l_mix;
                sum.l_pre += lv.l_pre;
                sum.total += lv.total;
                ++steps;
            }
        }

        if (steps > 0) {
            const double inv = 1.0 / static_cast<double>(steps);
            er.loss.l_l = sum.l_l * inv;
            er.loss.l_u = sum.l_u * inv;
            er.loss.l_mi = sum.l_mi * inv;
            er.loss.l_prob = sum.l_prob * inv;
            er.loss.l_mix = sum.l_mix * inv;
            er.loss.l_pre = sum.l_pre * inv;
            er.loss.total = sum.total * inv;
        }
        er.accuracy = evaluate(fe, cl, target, Split::Test);
        er.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.epochs.push_back(er);
    }

    if (classifier_digest(cl) != digest_before) {
        throw ContractError("adapt_target: classifier changed while frozen");
    }
    return rec;
}

}  // namespace serl
