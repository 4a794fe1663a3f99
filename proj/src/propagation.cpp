#include "serl/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "serl/errors.hpp"
#include "serl/kernels.hpp"

namespace serl {

double row_entropy(const double* p, std::size_t c) {
    double h = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    }
    return h;
}

NeighborGraph build_knn_graph(const Matrix& z, std::size_t k) {
    const std::size_t n = z.rows;
    if (k >= n) {
        throw ConfigError("build_knn_graph: k=" + std::to_string(k) + " must be < n=" +
                          std::to_string(n));
    }
    NeighborGraph g;
    g.n = n;
    g.knn.resize(n);

    Matrix sims(n, n);
    kernels::pairwise_cosine(z.v.data(), n, z.cols, sims.v.data());

    // k nearest by cosine similarity, ties broken by lower index
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order;
        order.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) order.push_back(j);
        }
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (sims.at(i, a) != sims.at(i, b)) {
                                  return sims.at(i, a) > sims.at(i, b);
                              }
                              return a < b;
                          });
        for (std::size_t p = 0; p < k; ++p) {
            g.knn[i].emplace_back(order[p], sims.at(i, order[p]));
        }
    }

    // affinity a_ij = max(0, cos), symmetrize by averaging
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, s] : g.knn[i]) a.at(i, j) = std::max(0.0, s);
    }
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) s.at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));
    }

    // row-normalize into CSR; all-zero rows stay empty
    g.row_ptr.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += s.at(i, j);
        if (row_sum > 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                if (s.at(i, j) > 0.0) {
                    g.col_idx.push_back(j);
                    g.weights.push_back(s.at(i, j) / row_sum);
                }
            }
        }
        g.row_ptr[i + 1] = g.col_idx.size();
    }
    return g;
}

SeedSet select_seeds(const ProbMatrix& unlabeled_probs, const std::vector<int>& labeled_labels,
                     double entropy_quantile) {
    if (!(entropy_quantile > 0.0) || !(entropy_quantile < 1.0)) {
        throw ConfigError("select_seeds: entropy_quantile must be in (0,1)");
    }
    SeedSet out;
    const std::size_t n_l = labeled_labels.size();
    for (std::size_t i = 0; i < n_l; ++i) {
        out.nodes.push_back(i);
        out.labels.push_back(labeled_labels[i]);
    }
    const std::size_t n_u = unlabeled_probs.rows;
    if (n_u == 0) return out;

    const std::size_t c = unlabeled_probs.cols;
    std::vector<double> ent(n_u);
    for (std::size_t i = 0; i < n_u; ++i) ent[i] = row_entropy(unlabeled_probs.row(i), c);

    std::vector<std::size_t> order(n_u);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ent[a] != ent[b]) return ent[a] < ent[b];
        return a < b;
    });

    const std::size_t quota =
        static_cast<std::size_t>(entropy_quantile * static_cast<double>(n_u));
    std::vector<bool> pick(n_u, false);
    for (std::size_t r = 0; r < quota && r < n_u; ++r) pick[order[r]] = true;
    // exactly one-hot predictions carry zero uncertainty and always seed
    for (std::size_t i = 0; i < n_u; ++i) {
        if (ent[i] == 0.0) pick[i] = true;
    }
    for (std::size_t i = 0; i < n_u; ++i) {
        if (!pick[i]) continue;
        const double* p = unlabeled_probs.row(i);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (p[j] > p[arg]) arg = j;
        }
        out.nodes.push_back(n_l + i);
        out.labels.push_back(static_cast<int>(arg));
    }
    return out;
}

PseudoLabels propagate(const NeighborGraph& graph, const SeedSet& seeds, std::size_t classes,
                       double alpha, std::size_t max_iters, double tol,
                       const ProbMatrix* fallback_probs) {
    if (alpha < 0.0 || alpha >= 1.0) {
        throw ConfigError("propagate: alpha must be in [0,1)");
    }
    const std::size_t n = graph.n;
    const std::size_t c = classes;

    Matrix y0(n, c);
    std::vector<bool> seed_mask(n, false);
    for (std::size_t s = 0; s < seeds.nodes.size(); ++s) {
        const std::size_t node = seeds.nodes[s];
        const int lbl = seeds.labels[s];
        if (node >= n || lbl < 0 || static_cast<std::size_t>(lbl) >= c) {
            throw IndexError("propagate: seed out of range");
        }
        seed_mask[node] = true;
        for (std::size_t j = 0; j < c; ++j) y0.at(node, j) = 0.0;
        y0.at(node, static_cast<std::size_t>(lbl)) = 1.0;
    }

    Matrix y = y0;
    Matrix sy(n, c);
    for (std::size_t it = 0; it < max_iters; ++it) {
        kernels::spread_step(graph.row_ptr.data(), graph.col_idx.data(), graph.weights.data(), n,
                             y.v.data(), c, sy.v.data());
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (seed_mask[i]) {
                // re-clamp seed rows to their one-hot labels
                for (std::size_t j = 0; j < c; ++j) {
                    const double nv = y0.at(i, j);
                    delta = std::max(delta, std::abs(nv - y.at(i, j)));
                    y.at(i, j) = nv;
                }
            } else {
                for (std::size_t j = 0; j < c; ++j) {
                    const double nv = alpha * sy.at(i, j) + (1.0 - alpha) * y0.at(i, j);
                    delta = std::max(delta, std::abs(nv - y.at(i, j)));
                    y.at(i, j) = nv;
                }
            }
        }
        if (delta < tol) break;
    }

    PseudoLabels out;
    out.n = n;
    out.classes = c;
    out.onehot = Matrix(n, c);
    out.labels.assign(n, 0);
    out.confidence.assign(n, 0.0);
    out.seed_mask = seed_mask;
    for (std::size_t i = 0; i < n; ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < c; ++j) mass += y.at(i, j);
        if (mass <= 0.0 && !seed_mask[i]) {
            ++out.unreachable;
            std::size_t arg = 0;
            if (fallback_probs != nullptr) {
                const double* p = fallback_probs->row(i);
                for (std::size_t j = 1; j < c; ++j) {
                    if (p[j] > p[arg]) arg = j;
                }
            }
            out.labels[i] = static_cast<int>(arg);
            out.onehot.at(i, arg) = 1.0;
            out.confidence[i] = 0.0;
            continue;
        }
        std::size_t arg = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (y.at(i, j) > y.at(i, arg)) arg = j;
        }
        out.labels[i] = static_cast<int>(arg);
        out.onehot.at(i, arg) = 1.0;
        out.confidence[i] = seed_mask[i] ? 1.0 : y.at(i, arg) / mass;
    }
    return out;
}

void dump_graph_csv(const NeighborGraph& graph, const PseudoLabels& labels,
                    const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write graph dump: " + path);
    os << "src,dst,weight,src_label,src_confidence,src_is_seed\n";
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t e = graph.row_ptr[i]; e < graph.row_ptr[i + 1]; ++e) {
            os << i << ',' << graph.col_idx[e] << ',' << graph.weights[e] << ','
               << labels.labels[i] << ',' << labels.confidence[i] << ','
               << (labels.seed_mask[i] ? 1 : 0) << '\n';
        }
    }
}

}  // namespace serl
