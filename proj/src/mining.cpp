#include "serl/mining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "serl/errors.hpp"
#include "serl/rng.hpp"

namespace serl {

namespace {

double cosine_distance(const double* a, const double* b, std::size_t d) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        dot += a[j] * b[j];
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    const double cos = denom > 0.0 ? dot / denom : 0.0;
    return 1.0 - cos;
}

std::size_t argmax_row(const double* p, std::size_t c) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j) {
        if (p[j] > p[arg]) arg = j;
    }
    return arg;
}

}  // namespace

std::size_t MinedSets::total_easy() const {
    std::size_t n = 0;
    for (const auto& v : easy) n += v.size();
    return n;
}

std::size_t MinedSets::total_hard() const {
    std::size_t n = 0;
    for (const auto& v : hard) n += v.size();
    return n;
}

MinedSets mine(const Matrix& z_unlabeled, const std::vector<int>& pseudo_labels,
               const AnchorSet& anchor_rows, std::size_t n_easy, std::size_t n_hard,
               HardPoolMode pool_mode) {
    if (n_easy < 1 || n_hard < 1) throw ConfigError("mine: n_easy and n_hard must be >= 1");
    if (pseudo_labels.size() != z_unlabeled.rows) {
        throw DimensionError("mine: pseudo-label count does not match feature rows");
    }
    if (anchor_rows.cols != z_unlabeled.cols) {
        throw DimensionError("mine: anchor dim " + std::to_string(anchor_rows.cols) +
                             " vs feature dim " + std::to_string(z_unlabeled.cols));
    }
    const std::size_t c = anchor_rows.rows;
    const std::size_t d = z_unlabeled.cols;

    MinedSets out;
    out.classes = c;
    out.easy.resize(c);
    out.hard.resize(c);
    out.easy_dist.resize(c);
    out.hard_dist.resize(c);
    out.pool_sizes.resize(c, 0);

    for (std::size_t k = 0; k < c; ++k) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < z_unlabeled.rows; ++i) {
            if (pool_mode == HardPoolMode::Global ||
                pseudo_labels[i] == static_cast<int>(k)) {
                pool.push_back(i);
            }
        }
        out.pool_sizes[k] = pool.size();
        if (pool.empty()) {
            ++out.empty_classes;
            continue;
        }
        std::vector<double> dist(pool.size());
        for (std::size_t p = 0; p < pool.size(); ++p) {
            dist[p] = cosine_distance(z_unlabeled.row(pool[p]), anchor_rows.row(k), d);
        }
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] < dist[b];
            return pool[a] < pool[b];
        });

        std::size_t take_easy = n_easy, take_hard = n_hard;
        if (pool.size() < n_easy + n_hard) {
            const double frac = static_cast<double>(pool.size()) /
                                static_cast<double>(n_easy + n_hard);
            take_easy = static_cast<std::size_t>(static_cast<double>(n_easy) * frac);
            take_hard = static_cast<std::size_t>(static_cast<double>(n_hard) * frac);
            ++out.shrunk_classes;
        }
        for (std::size_t p = 0; p < take_easy; ++p) {
            out.easy[k].push_back(pool[order[p]]);
            out.easy_dist[k].push_back(dist[order[p]]);
        }
        for (std::size_t p = 0; p < take_hard; ++p) {
            const std::size_t r = order[order.size() - take_hard + p];
            out.hard[k].push_back(pool[r]);
            out.hard_dist[k].push_back(dist[r]);
        }
    }
    return out;
}

Matrix build_views(const Matrix& rows, const AugmentSpec& aug, std::uint64_t seed) {
    const Matrix strong = augment(rows, aug, AugmentStrength::Strong, seed);
    Matrix out(rows.rows * 2, rows.cols);
    std::copy(rows.v.begin(), rows.v.end(), out.v.begin());
    std::copy(strong.v.begin(), strong.v.end(),
              out.v.begin() + static_cast<long>(rows.numel()));
    return out;
}

MixBatch mix(const Matrix& x_easy, const Matrix& y_easy, const Matrix& x_hard,
             const Matrix& y_hard, double alpha, std::uint64_t seed, PairMode mode) {
    if (x_easy.rows == 0 || x_hard.rows == 0) {
        throw DataError("mix: empty easy or hard pool");
    }
    if (x_easy.cols != x_hard.cols || y_easy.cols != y_hard.cols ||
        y_easy.rows != x_easy.rows || y_hard.rows != x_hard.rows) {
        throw DimensionError("mix: inconsistent pool shapes");
    }
    if (!(alpha > 0.0)) throw ConfigError("mix: alpha must be > 0");

    const std::size_t n = x_easy.rows;
    const std::size_t d = x_easy.cols;
    const std::size_t c = y_easy.cols;
    Rng rng(Rng::fold(seed, 0x6d6978ULL));

    // hard candidates per class for within-class pairing
    std::vector<std::vector<std::size_t>> hard_by_class(c);
    if (mode == PairMode::WithinClass) {
        for (std::size_t j = 0; j < x_hard.rows; ++j) {
            hard_by_class[argmax_row(y_hard.row(j), c)].push_back(j);
        }
    }

    MixBatch out;
    out.x = Matrix(n, d);
    out.y = Matrix(n, c);
    out.thetas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = rng.beta(alpha, alpha);
        std::size_t j;
        if (mode == PairMode::WithinClass) {
            const std::size_t cls = argmax_row(y_easy.row(i), c);
            const auto& cand = hard_by_class[cls];
            j = cand.empty() ? rng.uniform_int(x_hard.rows)
                             : cand[rng.uniform_int(cand.size())];
        } else {
            j = rng.uniform_int(x_hard.rows);
        }
        out.thetas[i] = theta;
        for (std::size_t p = 0; p < d; ++p) {
            out.x.at(i, p) = theta * x_easy.at(i, p) + (1.0 - theta) * x_hard.at(j, p);
        }
        for (std::size_t p = 0; p < c; ++p) {
            out.y.at(i, p) = theta * y_easy.at(i, p) + (1.0 - theta) * y_hard.at(j, p);
        }
    }
    return out;
}

}  // namespace serl
