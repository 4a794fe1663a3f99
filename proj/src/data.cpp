#include "serl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "serl/errors.hpp"
#include "serl/rng.hpp"

namespace serl {

namespace {
constexpr double kPi = 3.14159265358979323846;

const char* domain_str(Domain d) { return d == Domain::Source ? "source" : "target"; }
const char* split_str(Split s) {
    switch (s) {
        case Split::Labeled: return "labeled";
        case Split::Unlabeled: return "unlabeled";
        case Split::Test: return "test";
    }
    return "?";
}

Domain parse_domain(const std::string& s, std::size_t line) {
    if (s == "source") return Domain::Source;
    if (s == "target") return Domain::Target;
    throw ParseError("line " + std::to_string(line) + ": unknown domain '" + s + "'");
}

Split parse_split(const std::string& s, std::size_t line) {
    if (s == "labeled") return Split::Labeled;
    if (s == "unlabeled") return Split::Unlabeled;
    if (s == "test") return Split::Test;
    throw ParseError("line " + std::to_string(line) + ": unknown split '" + s + "'");
}

// random orthonormal basis via Gram-Schmidt on Gaussian vectors
Matrix orthonormal_basis(std::size_t d, Rng& rng) {
    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (std::size_t p = 0; p < i; ++p) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += v[j] * q.at(p, j);
            for (std::size_t j = 0; j < d; ++j) v[j] -= dot * q.at(p, j);
        }
        double n = 0.0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        for (std::size_t j = 0; j < d; ++j) q.at(i, j) = v[j] / n;
    }
    return q;
}

}  // namespace

std::vector<std::size_t> Dataset::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(i);
    }
    return out;
}

Dataset Dataset::take(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.dim = dim;
    out.features = features.take_rows(idx);
    for (std::size_t i : idx) {
        out.labels.push_back(labels[i]);
        out.domain.push_back(domain[i]);
        out.split.push_back(split[i]);
    }
    return out;
}

void DomainSpec::validate() const {
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (!(class_std > 0.0)) throw ConfigError("class_std must be > 0");
    if (embed_dim < 2) throw ConfigError("embed_dim must be >= 2");
    if (!(scale > 0.0)) throw ConfigError("scale must be > 0");
    if (label_noise < 0.0 || label_noise >= 1.0) throw ConfigError("label_noise must be in [0,1)");
}

void AugmentSpec::validate() const {
    if (sigma_weak < 0.0) throw ConfigError("sigma_weak must be >= 0");
    if (sigma_strong < sigma_weak) throw ConfigError("sigma_strong must be >= sigma_weak");
    if (mask_frac < 0.0 || mask_frac > 1.0) throw ConfigError("mask_frac must be in [0,1]");
}

std::pair<Dataset, Dataset> gen_two_domain(const DomainSpec& spec,
                                           std::size_t n_per_class_per_domain,
                                           std::uint64_t seed) {
    spec.validate();
    if (n_per_class_per_domain < 1) throw ConfigError("n_per_class_per_domain must be >= 1");

    const std::size_t c = spec.classes;
    const std::size_t d = spec.embed_dim;
    const double theta = spec.rotation_deg * kPi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);

    std::vector<double> mean_x(c), mean_y(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double ang = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(c);
        mean_x[k] = std::cos(ang);
        mean_y[k] = std::sin(ang);
    }

    Rng rng(Rng::fold(seed, 0x646174ULL));
    Matrix basis;
    if (d > 2) {
        Rng basis_rng(Rng::fold(seed, 0x656d626564ULL));
        basis = orthonormal_basis(d, basis_rng);
    }

    auto emplace_row = [&](Dataset& ds, double x, double y, int label, Domain dom) {
        std::vector<double> row(d, 0.0);
        if (d == 2) {
            row[0] = x;
            row[1] = y;
        } else {
            // embed (x, y, 0, ..., 0) through the orthonormal basis
            for (std::size_t j = 0; j < d; ++j) row[j] = x * basis.at(0, j) + y * basis.at(1, j);
        }
        for (double v : row) ds.features.v.push_back(v);
        ds.labels.push_back(label);
        ds.domain.push_back(dom);
        ds.split.push_back(dom == Domain::Source ? Split::Labeled : Split::Unlabeled);
        ++ds.features.rows;
    };

    Dataset source, target;
    source.dim = target.dim = d;
    source.features.cols = target.features.cols = d;

    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < n_per_class_per_domain; ++i) {
            const double x = mean_x[k] + spec.class_std * rng.normal();
            const double y = mean_y[k] + spec.class_std * rng.normal();
            emplace_row(source, x, y, static_cast<int>(k), Domain::Source);
        }
    }
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < n_per_class_per_domain; ++i) {
            const double x = mean_x[k] + spec.class_std * rng.normal();
            const double y = mean_y[k] + spec.class_std * rng.normal();
            const double tx = spec.scale * (ct * x - st * y) + spec.translate_x;
            const double ty = spec.scale * (st * x + ct * y) + spec.translate_y;
            int label = static_cast<int>(k);
            if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) {
                const int shift = 1 + static_cast<int>(rng.uniform_int(c - 1));
                label = (label + shift) % static_cast<int>(c);
            }
            emplace_row(target, tx, ty, label, Domain::Target);
        }
    }
    return {std::move(source), std::move(target)};
}

void split_ssda(Dataset& target, std::size_t shots, double test_fraction, std::uint64_t seed) {
    if (shots < 1) throw ConfigError("shots must be >= 1");
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw ConfigError("test_fraction must be in [0,1)");
    }
    int max_label = -1;
    for (int l : target.labels) max_label = std::max(max_label, l);
    const std::size_t c = static_cast<std::size_t>(max_label + 1);

    std::vector<std::vector<std::size_t>> per_class(c);
    for (std::size_t i = 0; i < target.size(); ++i) {
        per_class[static_cast<std::size_t>(target.labels[i])].push_back(i);
    }

    Rng rng(Rng::fold(seed, 0x73706c6974ULL));
    std::fill(target.split.begin(), target.split.end(), Split::Unlabeled);
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < c; ++k) {
        if (per_class[k].size() < shots + 1) {
            throw DataError("split_ssda: class " + std::to_string(k) + " has only " +
                            std::to_string(per_class[k].size()) + " samples, needs > " +
                            std::to_string(shots));
        }
        rng.shuffle(per_class[k]);
        for (std::size_t i = 0; i < per_class[k].size(); ++i) {
            if (i < shots) {
                target.split[per_class[k][i]] = Split::Labeled;
            } else {
                rest.push_back(per_class[k][i]);
            }
        }
    }
    std::sort(rest.begin(), rest.end());
    rng.shuffle(rest);
    const std::size_t n_test =
        static_cast<std::size_t>(test_fraction * static_cast<double>(target.size()));
    for (std::size_t i = 0; i < std::min(n_test, rest.size()); ++i) {
        target.split[rest[i]] = Split::Test;
    }
}

Matrix augment(const Matrix& x, const AugmentSpec& spec, AugmentStrength strength,
               std::uint64_t seed) {
    spec.validate();
    Rng rng(Rng::fold(seed, 0x617567ULL, strength == AugmentStrength::Weak ? 1 : 2));
    Matrix out = x;
    const double sigma = strength == AugmentStrength::Weak ? spec.sigma_weak : spec.sigma_strong;
    for (auto& v : out.v) v += sigma * rng.normal();
    if (strength == AugmentStrength::Strong) {
        for (auto& v : out.v) {
            if (rng.uniform() < spec.mask_frac) v = 0.0;
        }
    }
    return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write csv: " + path);
    for (std::size_t j = 0; j < ds.dim; ++j) os << 'f' << j << ',';
    os << "label,domain,split\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim; ++j) os << ds.features.at(i, j) << ',';
        os << ds.labels[i] << ',' << domain_str(ds.domain[i]) << ',' << split_str(ds.split[i])
           << '\n';
    }
}

Dataset load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot read csv: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("line 1: empty file " + path);

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    if (header.size() < 4) throw ParseError("line 1: header too short");
    const std::size_t d = header.size() - 3;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "f" + std::to_string(j)) {
            throw ParseError("line 1: expected column f" + std::to_string(j) + ", got '" +
                             header[j] + "'");
        }
    }
    if (header[d] != "label" || header[d + 1] != "domain" || header[d + 2] != "split") {
        throw ParseError("line 1: expected trailing columns label,domain,split");
    }

    Dataset ds;
    ds.dim = d;
    ds.features.cols = d;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ss, tok, ',')) toks.push_back(tok);
        if (toks.size() != d + 3) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(d + 3) + " fields, got " + std::to_string(toks.size()));
        }
        for (std::size_t j = 0; j < d; ++j) {
            try {
                ds.features.v.push_back(std::stod(toks[j]));
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ": bad number '" + toks[j] +
                                 "'");
            }
        }
        try {
            ds.labels.push_back(std::stoi(toks[d]));
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(lineno) + ": bad label '" + toks[d] + "'");
        }
        ds.domain.push_back(parse_domain(toks[d + 1], lineno));
        ds.split.push_back(parse_split(toks[d + 2], lineno));
        ++ds.features.rows;
    }
    return ds;
}

}  // namespace serl
