#include "serl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "serl/errors.hpp"

namespace serl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& v) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(parse_u64(key, tok));
    }
    if (out.empty()) throw ConfigError(key + ": empty seed list");
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const char* objective_str(Objective o) { return o == Objective::Serl ? "serl" : "st"; }
const char* pseudo_str(PseudoSource p) {
    return p == PseudoSource::Propagate ? "propagate" : "argmax";
}
const char* pair_str(PairMode p) {
    return p == PairMode::CyclicRandom ? "cyclic-random" : "within-class";
}
const char* pool_str(HardPoolMode p) {
    return p == HardPoolMode::ClassRestricted ? "class-restricted" : "global";
}
const char* spcr_str(SpcrNorm s) { return s == SpcrNorm::Mean ? "mean" : "sum"; }

// field table shared by parse + serialize so the two stay in sync
struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

std::vector<Field> fields() {
    auto dbl = [](const std::string& key, double ExperimentConfig::* member) {
        return Field{key,
                     [key, member](ExperimentConfig& c, const std::string& v) {
                         c.*member = parse_double(key, v);
                     },
                     [member](const ExperimentConfig& c) { return format_double(c.*member); }};
    };
    auto num = [](const std::string& key, std::size_t ExperimentConfig::* member) {
        return Field{key,
                     [key, member](ExperimentConfig& c, const std::string& v) {
                         c.*member = static_cast<std::size_t>(parse_u64(key, v));
                     },
                     [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
    };

    std::vector<Field> f;
    f.push_back(Field{"data_seed",
                      [](ExperimentConfig& c, const std::string& v) {
                          c.data_seed = parse_u64("data_seed", v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.data_seed); }});
    f.push_back(num("n_per_class", &ExperimentConfig::n_per_class));
    f.push_back(num("classes", &ExperimentConfig::classes));
    f.push_back(num("embed_dim", &ExperimentConfig::embed_dim));
    f.push_back(dbl("class_std", &ExperimentConfig::class_std));
    f.push_back(dbl("rotation_deg", &ExperimentConfig::rotation_deg));
    f.push_back(dbl("translate_x", &ExperimentConfig::translate_x));
    f.push_back(dbl("translate_y", &ExperimentConfig::translate_y));
    f.push_back(dbl("shift_scale", &ExperimentConfig::shift_scale));
    f.push_back(dbl("label_noise", &ExperimentConfig::label_noise));
    f.push_back(num("shots", &ExperimentConfig::shots));
    f.push_back(dbl("test_fraction", &ExperimentConfig::test_fraction));
    f.push_back(dbl("sigma_weak", &ExperimentConfig::sigma_weak));
    f.push_back(dbl("sigma_strong", &ExperimentConfig::sigma_strong));
    f.push_back(dbl("mask_frac", &ExperimentConfig::mask_frac));
    f.push_back(num("hidden_dim", &ExperimentConfig::hidden_dim));
    f.push_back(num("bottleneck_dim", &ExperimentConfig::bottleneck_dim));
    f.push_back(dbl("cls_temperature", &ExperimentConfig::cls_temperature));
    f.push_back(dbl("lambda_prob", &ExperimentConfig::lambda_prob));
    f.push_back(dbl("lambda_mix", &ExperimentConfig::lambda_mix));
    f.push_back(dbl("lambda_pre", &ExperimentConfig::lambda_pre));
    f.push_back(dbl("tau", &ExperimentConfig::tau));
    f.push_back(dbl("beta", &ExperimentConfig::beta));
    f.push_back(dbl("mix_alpha", &ExperimentConfig::mix_alpha));
    f.push_back(num("knn_k", &ExperimentConfig::knn_k));
    f.push_back(dbl("prop_alpha", &ExperimentConfig::prop_alpha));
    f.push_back(dbl("seed_quantile", &ExperimentConfig::seed_quantile));
    f.push_back(num("prop_max_iters", &ExperimentConfig::prop_max_iters));
    f.push_back(dbl("prop_tol", &ExperimentConfig::prop_tol));
    f.push_back(num("n_easy", &ExperimentConfig::n_easy));
    f.push_back(num("n_hard", &ExperimentConfig::n_hard));
    f.push_back(num("source_epochs", &ExperimentConfig::source_epochs));
    f.push_back(num("adapt_epochs", &ExperimentConfig::adapt_epochs));
    f.push_back(num("batch_unlabeled", &ExperimentConfig::batch_unlabeled));
    f.push_back(num("batch_labeled", &ExperimentConfig::batch_labeled));
    f.push_back(dbl("lr_feature", &ExperimentConfig::lr_feature));
    f.push_back(dbl("lr_bottleneck", &ExperimentConfig::lr_bottleneck));
    f.push_back(dbl("lr_classifier", &ExperimentConfig::lr_classifier));
    f.push_back(dbl("momentum", &ExperimentConfig::momentum));
    f.push_back(dbl("weight_decay", &ExperimentConfig::weight_decay));
    f.push_back(Field{"seeds",
                      [](ExperimentConfig& c, const std::string& v) {
                          c.seeds = parse_seed_list("seeds", v);
                      },
                      [](const ExperimentConfig& c) {
                          std::string s;
                          for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                              if (i) s += ',';
                              s += std::to_string(c.seeds[i]);
                          }
                          return s;
                      }});
    f.push_back(Field{"objective",
                      [](ExperimentConfig& c, const std::string& v) {
                          if (v == "serl") c.objective = Objective::Serl;
                          else if (v == "st") c.objective = Objective::St;
                          else throw ConfigError("objective: expected serl|st, got '" + v + "'");
                      },
                      [](const ExperimentConfig& c) { return objective_str(c.objective); }});
    f.push_back(Field{"pseudo_source",
                      [](ExperimentConfig& c, const std::string& v) {
                          if (v == "propagate") c.pseudo_source = PseudoSource::Propagate;
                          else if (v == "argmax") c.pseudo_source = PseudoSource::Argmax;
                          else throw ConfigError("pseudo_source: expected propagate|argmax, got '" + v + "'");
                      },
                      [](const ExperimentConfig& c) { return pseudo_str(c.pseudo_source); }});
    f.push_back(Field{"pair",
                      [](ExperimentConfig& c, const std::string& v) {
                          if (v == "cyclic-random") c.pair_mode = PairMode::CyclicRandom;
                          else if (v == "within-class") c.pair_mode = PairMode::WithinClass;
                          else throw ConfigError("pair: expected cyclic-random|within-class, got '" + v + "'");
                      },
                      [](const ExperimentConfig& c) { return pair_str(c.pair_mode); }});
    f.push_back(Field{"hard_pool",
                      [](ExperimentConfig& c, const std::string& v) {
                          if (v == "class-restricted") c.hard_pool = HardPoolMode::ClassRestricted;
                          else if (v == "global") c.hard_pool = HardPoolMode::Global;
                          else throw ConfigError("hard_pool: expected class-restricted|global, got '" + v + "'");
                      },
                      [](const ExperimentConfig& c) { return pool_str(c.hard_pool); }});
    f.push_back(Field{"spcr_normalize",
                      [](ExperimentConfig& c, const std::string& v) {
                          if (v == "mean") c.spcr_normalize = SpcrNorm::Mean;
                          else if (v == "sum") c.spcr_normalize = SpcrNorm::Sum;
                          else throw ConfigError("spcr_normalize: expected mean|sum, got '" + v + "'");
                      },
                      [](const ExperimentConfig& c) { return spcr_str(c.spcr_normalize); }});
    return f;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (classes < 2) throw ConfigError("classes: must be >= 2");
    if (n_per_class < shots + 1) throw ConfigError("n_per_class: must exceed shots");
    if (embed_dim < 2) throw ConfigError("embed_dim: must be >= 2");
    if (!(class_std > 0.0)) throw ConfigError("class_std: must be > 0");
    if (!(shift_scale > 0.0)) throw ConfigError("shift_scale: must be > 0");
    if (label_noise < 0.0 || label_noise >= 1.0) throw ConfigError("label_noise: must be in [0,1)");
    if (shots < 1) throw ConfigError("shots: must be >= 1");
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw ConfigError("test_fraction: must be in [0,1)");
    }
    if (sigma_weak < 0.0) throw ConfigError("sigma_weak: must be >= 0");
    if (sigma_strong < sigma_weak) throw ConfigError("sigma_strong: must be >= sigma_weak");
    if (mask_frac < 0.0 || mask_frac > 1.0) throw ConfigError("mask_frac: must be in [0,1]");
    if (hidden_dim < 1 || bottleneck_dim < 1) throw ConfigError("hidden_dim/bottleneck_dim: must be >= 1");
    if (!(cls_temperature > 0.0)) throw ConfigError("cls_temperature: must be > 0");
    if (lambda_prob < 0.0) throw ConfigError("lambda_prob: must be >= 0");
    if (lambda_mix < 0.0) throw ConfigError("lambda_mix: must be >= 0");
    if (lambda_pre < 0.0) throw ConfigError("lambda_pre: must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau: must be > 0");
    if (beta < 0.0 || beta >= 1.0) throw ConfigError("beta: must be in [0,1)");
    if (!(mix_alpha > 0.0)) throw ConfigError("mix_alpha: must be > 0");
    if (knn_k < 1) throw ConfigError("knn_k: must be >= 1");
    if (prop_alpha < 0.0 || prop_alpha >= 1.0) throw ConfigError("prop_alpha: must be in [0,1)");
    if (!(seed_quantile > 0.0) || !(seed_quantile < 1.0)) {
        throw ConfigError("seed_quantile: must be in (0,1)");
    }
    if (prop_max_iters < 1) throw ConfigError("prop_max_iters: must be >= 1");
    if (!(prop_tol > 0.0)) throw ConfigError("prop_tol: must be > 0");
    if (n_easy < 1 || n_hard < 1) throw ConfigError("n_easy/n_hard: must be >= 1");
    if (batch_unlabeled < 2) throw ConfigError("batch_unlabeled: must be >= 2");
    if (batch_labeled < 1) throw ConfigError("batch_labeled: must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum: must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("weight_decay: must be >= 0");
    if (seeds.empty()) throw ConfigError("seeds: must not be empty");
}

DomainSpec ExperimentConfig::domain_spec() const {
    DomainSpec s;
    s.classes = classes;
    s.class_std = class_std;
    s.embed_dim = embed_dim;
    s.rotation_deg = rotation_deg;
    s.translate_x = translate_x;
    s.translate_y = translate_y;
    s.scale = shift_scale;
    s.label_noise = label_noise;
    return s;
}

AugmentSpec ExperimentConfig::augment_spec() const {
    AugmentSpec a;
    a.sigma_weak = sigma_weak;
    a.sigma_strong = sigma_strong;
    a.mask_frac = mask_frac;
    return a;
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
    const auto table = fields();
    std::map<std::string, const Field*> by_key;
    for (const auto& f : table) by_key[f.key] = &f;

    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        }
        it->second->set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config: " + path);
    return parse_config(is, path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write config: " + path);
    os << serialize_config(cfg);
}

}  // namespace serl
