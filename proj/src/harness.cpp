#include "serl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "serl/errors.hpp"
#include "serl/gradcheck_suite.hpp"
#include "serl/metrics.hpp"

namespace serl::harness {

namespace fs = std::filesystem;

namespace {

std::pair<Dataset, Dataset> make_task(const ExperimentConfig& cfg) {
    auto [source, target] = gen_two_domain(cfg.domain_spec(), cfg.n_per_class, cfg.data_seed);
    split_ssda(target, cfg.shots, cfg.test_fraction, cfg.data_seed);
    return {std::move(source), std::move(target)};
}

void mean_std(const std::vector<double>& xs, double& mean, double& stddev) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
}

void export_features_csv(const FeatureExtractor& fe, const Dataset& target,
                         const std::string& path) {
    const Matrix feats = extract_features(fe, target.features);
    std::ofstream os(path);
    if (!os) throw DataError("cannot write features: " + path);
    for (std::size_t j = 0; j < feats.cols; ++j) os << 'f' << j << ',';
    os << "label,split\n";
    os << std::setprecision(17);
    const char* names[] = {"labeled", "unlabeled", "test"};
    for (std::size_t i = 0; i < feats.rows; ++i) {
        for (std::size_t j = 0; j < feats.cols; ++j) os << feats.at(i, j) << ',';
        os << target.labels[i] << ',' << names[static_cast<int>(target.split[i])] << '\n';
    }
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, std::uint64_t train_seed,
                            MetricsStream* metrics) {
    auto [source, target] = make_task(cfg);

    LayerDims dims;
    dims.in_dim = cfg.embed_dim;
    dims.hidden = cfg.hidden_dim;
    dims.bottleneck = cfg.bottleneck_dim;
    dims.classes = cfg.classes;

    PipelineResult res;
    auto [fe, cl] = init_params(train_seed, dims, cfg.cls_temperature);

    res.pretrain = pretrain_source(fe, cl, source, cfg, train_seed);
    if (metrics != nullptr) {
        for (const auto& er : res.pretrain.epochs) metrics->write_epoch("pretrain", er);
    }
    if (res.pretrain.aborted) {
        throw NumericError("pipeline: " + res.pretrain.abort_reason);
    }

    freeze_classifier(cl);

    res.adapt = adapt_target(fe, cl, target, cfg, train_seed);
    if (metrics != nullptr) {
        for (const auto& er : res.adapt.epochs) metrics->write_epoch("adapt", er);
    }
    if (res.adapt.aborted) {
        throw NumericError("pipeline: " + res.adapt.abort_reason);
    }

    res.test_accuracy = evaluate(fe, cl, target, Split::Test);
    res.fe = std::move(fe);
    res.cl = std::move(cl);
    return res;
}

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out,
                 std::ostream& err) {
    try {
        cfg.validate();
        fs::create_directories(out_dir);
        auto [source, target] = make_task(cfg);
        const std::string src_path = out_dir + "/source.csv";
        const std::string tgt_path = out_dir + "/target.csv";
        save_csv(source, src_path);
        save_csv(target, tgt_path);
        const auto labeled = target.indices_of(Split::Labeled).size();
        const auto unlabeled = target.indices_of(Split::Unlabeled).size();
        const auto test = target.indices_of(Split::Test).size();
        out << "wrote " << src_path << ": " << source.size() << " rows\n";
        out << "wrote " << tgt_path << ": " << target.size() << " rows (labeled " << labeled
            << ", unlabeled " << unlabeled << ", test " << test << ")\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, bool export_features,
            std::ostream& out, std::ostream& err, RunOutcome* outcome) {
    try {
        cfg.validate();
        fs::create_directories(out_dir);
        std::vector<double> accs;
        for (const std::uint64_t seed : cfg.seeds) {
            const std::string run_id = "seed" + std::to_string(seed);
            MetricsStream metrics(out_dir + "/metrics-" + run_id + ".jsonl", run_id, cfg);
            PipelineResult res = run_pipeline(cfg, seed, &metrics);
            save_checkpoint(out_dir + "/checkpoint-" + run_id + ".txt", res.fe, res.cl);
            if (export_features) {
                auto [source, target] = make_task(cfg);
                (void)source;
                export_features_csv(res.fe, target, out_dir + "/features-" + run_id + ".csv");
            }
            out << "seed " << seed << ": target-test accuracy " << std::fixed
                << std::setprecision(4) << res.test_accuracy << '\n';
            accs.push_back(res.test_accuracy);
        }
        double mean = 0.0, stddev = 0.0;
        mean_std(accs, mean, stddev);
        out << "mean target-test accuracy: " << std::fixed << std::setprecision(4) << mean
            << " +/- " << stddev << " over " << accs.size() << " seed(s)\n";
        if (outcome != nullptr) {
            outcome->per_seed_accuracy = accs;
            outcome->mean = mean;
            outcome->stddev = stddev;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::string>& terms,
               const std::string& out_dir, std::ostream& out, std::ostream& err,
               std::vector<AblateRow>* rows_out) {
    try {
        cfg.validate();
        std::vector<std::string> grid_terms = terms;
        if (grid_terms.empty()) grid_terms = {"prob", "mix", "pre"};
        for (const auto& t : grid_terms) {
            if (t != "prob" && t != "mix" && t != "pre") {
                throw ConfigError("ablate: unknown term '" + t + "' (expected prob|mix|pre)");
            }
        }
        fs::create_directories(out_dir);

        const std::size_t n_rows = std::size_t{1} << grid_terms.size();
        std::vector<AblateRow> rows;
        for (std::size_t mask = 0; mask < n_rows; ++mask) {
            AblateRow row;
            ExperimentConfig rc = cfg;
            rc.lambda_prob = 0.0;
            rc.lambda_mix = 0.0;
            rc.lambda_pre = 0.0;
            std::string name;
            for (std::size_t b = 0; b < grid_terms.size(); ++b) {
                if (!(mask & (std::size_t{1} << b))) continue;
                if (!name.empty()) name += '+';
                name += grid_terms[b];
                if (grid_terms[b] == "prob") {
                    rc.lambda_prob = cfg.lambda_prob;
                    row.prob = true;
                } else if (grid_terms[b] == "mix") {
                    rc.lambda_mix = cfg.lambda_mix;
                    row.mix = true;
                } else {
                    rc.lambda_pre = cfg.lambda_pre;
                    row.pre = true;
                }
            }
            row.mask = name.empty() ? "base" : name;

            for (const std::uint64_t seed : rc.seeds) {
                const std::string run_id = "ablate-" + row.mask + "-seed" + std::to_string(seed);
                MetricsStream metrics(out_dir + "/metrics-" + run_id + ".jsonl", run_id, rc);
                PipelineResult res = run_pipeline(rc, seed, &metrics);
                row.per_seed_accuracy.push_back(res.test_accuracy);
            }
            mean_std(row.per_seed_accuracy, row.mean, row.stddev);
            out << std::left << std::setw(16) << row.mask << " mean " << std::fixed
                << std::setprecision(4) << row.mean << " +/- " << row.stddev << '\n';
            rows.push_back(std::move(row));
        }
        if (rows_out != nullptr) *rows_out = rows;
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_gradcheck(std::ostream& out, std::ostream& err, const std::string& inject_error) {
    try {
        const auto reports = run_loss_gradchecks(20, 1e-4, 20240811, inject_error);
        bool ok = true;
        std::string worst;
        for (const auto& r : reports) {
            const bool pass = r.max_rel_error < 1e-4;
            out << std::left << std::setw(20) << r.name << " max rel error "
                << std::scientific << std::setprecision(3) << r.max_rel_error << "  ("
                << r.instances << " instances) " << (pass ? "ok" : "FAIL") << '\n';
            if (!pass) {
                ok = false;
                worst = r.name;
            }
        }
        if (!ok) {
            err << "gradient check failed for " << worst << '\n';
            return kExitRuntime;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace serl::harness
