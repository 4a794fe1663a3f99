#include "serl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "serl/errors.hpp"
#include "serl/kernels.hpp"

namespace serl::autodiff {

namespace {

std::string dims(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw DimensionError(std::string(op) + ": shape mismatch " + dims(a.rows, a.cols) +
                             " vs " + dims(b.rows, b.cols));
    }
}

void accumulate(Tensor& t, const std::vector<double>& g) {
    t.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

}  // namespace

double Tensor::value() const {
    if (numel() != 1) {
        throw ContractError("value(): tensor is not scalar, shape " + shape_str());
    }
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != numel()) grad.assign(numel(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

std::string Tensor::shape_str() const { return dims(rows, cols); }

TensorPtr Tape::leaf(std::size_t rows, std::size_t cols, std::vector<double> values,
                     bool requires_grad) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("leaf: zero-sized tensor " + dims(rows, cols));
    }
    if (values.size() != rows * cols) {
        throw DimensionError("leaf: data length " + std::to_string(values.size()) +
                             " does not match shape " + dims(rows, cols));
    }
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    t->is_leaf = true;
    leaves_.push_back(t);
    return t;
}

TensorPtr Tape::make_output(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->data.assign(rows * cols, 0.0);
    t->requires_grad = requires_grad;
    t->is_leaf = false;
    return t;
}

void Tape::record(const TensorPtr& out, std::function<void()> backward_fn) {
    out->node_index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{out, std::move(backward_fn)});
}

void Tape::backward(const TensorPtr& root) {
    if (root->numel() != 1) {
        throw ContractError("backward: root must be scalar, got " + root->shape_str());
    }
    // intermediate adjoints are fresh per call; leaf grads accumulate
    for (auto& node : nodes_) {
        node.out->ensure_grad();
        node.out->zero_grad();
    }
    root->ensure_grad();
    root->grad[0] += 1.0;
    const int start = root->node_index;
    for (int i = start; i >= 0; --i) {
        nodes_[static_cast<std::size_t>(i)].backward_fn();
    }
}

void Tape::zero_grad() {
    for (auto& node : nodes_) {
        node.out->ensure_grad();
        node.out->zero_grad();
    }
    for (auto& l : leaves_) {
        l->ensure_grad();
        l->zero_grad();
    }
}

// --- primitives ---------------------------------------------------------

TensorPtr matmul(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->rows) {
        throw DimensionError("matmul: inner dimensions differ, " + a->shape_str() + " vs " +
                             b->shape_str());
    }
    const std::size_t m = a->rows, k = a->cols, n = b->cols;
    auto out = t.make_output(m, n, a->requires_grad || b->requires_grad);
    kernels::matmul(a->data.data(), false, b->data.data(), false, out->data.data(), m, k, n);
    if (out->requires_grad) {
        t.record(out, [a, b, out, m, k, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                // a.grad += g . b^T
                kernels::matmul(out->grad.data(), false, b->data.data(), true, a->grad.data(),
                                m, n, k, /*accumulate=*/true);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                // b.grad += a^T . g
                kernels::matmul(a->data.data(), true, out->grad.data(), false, b->grad.data(),
                                k, m, n, /*accumulate=*/true);
            }
        });
    }
    return out;
}

TensorPtr transpose(Tape& t, const TensorPtr& a) {
    auto out = t.make_output(a->cols, a->rows, a->requires_grad);
    for (std::size_t i = 0; i < a->rows; ++i) {
        for (std::size_t j = 0; j < a->cols; ++j) out->at(j, i) = a->at(i, j);
    }
    if (out->requires_grad) {
        t.record(out, [a, out] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->rows; ++i) {
                for (std::size_t j = 0; j < a->cols; ++j) {
                    a->grad[i * a->cols + j] += out->grad[j * out->cols + i];
                }
            }
        });
    }
    return out;
}

TensorPtr add(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("add", *a, *b);
    auto out = t.make_output(a->rows, a->cols, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
    if (out->requires_grad) {
        t.record(out, [a, b, out] {
            if (a->requires_grad) accumulate(*a, out->grad);
            if (b->requires_grad) accumulate(*b, out->grad);
        });
    }
    return out;
}

TensorPtr sub(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("sub", *a, *b);
    auto out = t.make_output(a->rows, a->cols, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] - b->data[i];
    if (out->requires_grad) {
        t.record(out, [a, b, out] {
            if (a->requires_grad) accumulate(*a, out->grad);
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) b->grad[i] -= out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr mul(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("mul", *a, *b);
    auto out = t.make_output(a->rows, a->cols, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
    if (out->requires_grad) {
        t.record(out, [a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) {
                    a->grad[i] += out->grad[i] * b->data[i];
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) {
                    b->grad[i] += out->grad[i] * a->data[i];
                }
            }
        });
    }
    return out;
}

TensorPtr scale(Tape& t, const TensorPtr& a, double k) {
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * k;
    if (out->requires_grad) {
        t.record(out, [a, out, k] {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i] * k;
        });
    }
    return out;
}

TensorPtr add_rowvec(Tape& t, const TensorPtr& a, const TensorPtr& v) {
    if (v->rows != 1 || v->cols != a->cols) {
        throw DimensionError("add_rowvec: expected 1x" + std::to_string(a->cols) + ", got " +
                             v->shape_str());
    }
    auto out = t.make_output(a->rows, a->cols, a->requires_grad || v->requires_grad);
    for (std::size_t i = 0; i < a->rows; ++i) {
        for (std::size_t j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j) + v->data[j];
    }
    if (out->requires_grad) {
        t.record(out, [a, v, out] {
            if (a->requires_grad) accumulate(*a, out->grad);
            if (v->requires_grad) {
                v->ensure_grad();
                for (std::size_t i = 0; i < a->rows; ++i) {
                    for (std::size_t j = 0; j < a->cols; ++j) {
                        v->grad[j] += out->grad[i * a->cols + j];
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr exp(Tape& t, const TensorPtr& a) {
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = std::exp(a->data[i]);
    if (out->requires_grad) {
        t.record(out, [a, out] {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                a->grad[i] += out->grad[i] * out->data[i];
            }
        });
    }
    return out;
}

TensorPtr relu(Tape& t, const TensorPtr& a) {
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) {
        out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    }
    if (out->requires_grad) {
        t.record(out, [a, out] {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                if (a->data[i] > 0.0) a->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr log_clamped(Tape& t, const TensorPtr& a, double eps) {
    if (!(eps > 0.0)) throw ContractError("log_clamped: eps must be positive");
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < out->numel(); ++i) {
        out->data[i] = std::log(std::max(a->data[i], eps));
    }
    if (out->requires_grad) {
        t.record(out, [a, out, eps] {
            a->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                if (a->data[i] > eps) a->grad[i] += out->grad[i] / a->data[i];
            }
        });
    }
    return out;
}

TensorPtr reduce(Tape& t, const TensorPtr& a, Reduce mode, Axis axis) {
    if (a->numel() == 0) throw DimensionError("reduce: empty tensor");
    if (axis == Axis::All) {
        auto out = t.make_output(1, 1, a->requires_grad);
        double acc = 0.0;
        for (double v : a->data) acc += v;
        const double scale_f = mode == Reduce::Mean ? 1.0 / static_cast<double>(a->numel()) : 1.0;
        out->data[0] = acc * scale_f;
        if (out->requires_grad) {
            t.record(out, [a, out, scale_f] {
                a->ensure_grad();
                const double g = out->grad[0] * scale_f;
                for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
            });
        }
        return out;
    }
    auto out = t.make_output(a->rows, 1, a->requires_grad);
    const double scale_f = mode == Reduce::Mean ? 1.0 / static_cast<double>(a->cols) : 1.0;
    for (std::size_t i = 0; i < a->rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a->cols; ++j) acc += a->at(i, j);
        out->data[i] = acc * scale_f;
    }
    if (out->requires_grad) {
        t.record(out, [a, out, scale_f] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->rows; ++i) {
                const double g = out->grad[i] * scale_f;
                for (std::size_t j = 0; j < a->cols; ++j) a->grad[i * a->cols + j] += g;
            }
        });
    }
    return out;
}

TensorPtr softmax_rows(Tape& t, const TensorPtr& a) {
    for (double v : a->data) {
        if (std::isnan(v)) throw NumericError("softmax_rows: NaN input");
    }
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    kernels::softmax_rows(a->data.data(), out->data.data(), a->rows, a->cols);
    if (out->requires_grad) {
        t.record(out, [a, out] {
            a->ensure_grad();
            // dx = p .* (g - (g . p))  per row
            for (std::size_t i = 0; i < a->rows; ++i) {
                const double* p = out->data.data() + i * a->cols;
                const double* g = out->grad.data() + i * a->cols;
                double dot = 0.0;
                for (std::size_t j = 0; j < a->cols; ++j) dot += g[j] * p[j];
                for (std::size_t j = 0; j < a->cols; ++j) {
                    a->grad[i * a->cols + j] += p[j] * (g[j] - dot);
                }
            }
        });
    }
    return out;
}

TensorPtr concat_rows(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->cols) {
        throw DimensionError("concat_rows: column mismatch " + a->shape_str() + " vs " +
                             b->shape_str());
    }
    auto out = t.make_output(a->rows + b->rows, a->cols, a->requires_grad || b->requires_grad);
    std::copy(a->data.begin(), a->data.end(), out->data.begin());
    std::copy(b->data.begin(), b->data.end(), out->data.begin() + static_cast<long>(a->numel()));
    if (out->requires_grad) {
        t.record(out, [a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                const std::size_t off = a->numel();
                for (std::size_t i = 0; i < b->numel(); ++i) b->grad[i] += out->grad[off + i];
            }
        });
    }
    return out;
}

TensorPtr l2_normalize_rows(Tape& t, const TensorPtr& a) {
    constexpr double kEps = 1e-12;
    auto out = t.make_output(a->rows, a->cols, a->requires_grad);
    std::vector<double> norms(a->rows);
    for (std::size_t i = 0; i < a->rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a->cols; ++j) s += a->at(i, j) * a->at(i, j);
        norms[i] = std::max(std::sqrt(s), kEps);
        for (std::size_t j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j) / norms[i];
    }
    if (out->requires_grad) {
        t.record(out, [a, out, norms] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->rows; ++i) {
                const double* x = a->data.data() + i * a->cols;
                const double* g = out->grad.data() + i * a->cols;
                const double n = norms[i];
                double xg = 0.0;
                for (std::size_t j = 0; j < a->cols; ++j) xg += x[j] * g[j];
                double s = 0.0;
                for (std::size_t j = 0; j < a->cols; ++j) s += x[j] * x[j];
                const bool clamped = std::sqrt(s) < n;
                for (std::size_t j = 0; j < a->cols; ++j) {
                    double d = g[j] / n;
                    if (!clamped) d -= x[j] * xg / (n * n * n);
                    a->grad[i * a->cols + j] += d;
                }
            }
        });
    }
    return out;
}

TensorPtr row_dot(Tape& t, const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("row_dot", *a, *b);
    auto out = t.make_output(a->rows, 1, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < a->rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a->cols; ++j) acc += a->at(i, j) * b->at(i, j);
        out->data[i] = acc;
    }
    if (out->requires_grad) {
        t.record(out, [a, b, out] {
            for (std::size_t i = 0; i < a->rows; ++i) {
                const double g = out->grad[i];
                if (a->requires_grad) {
                    a->ensure_grad();
                    for (std::size_t j = 0; j < a->cols; ++j) {
                        a->grad[i * a->cols + j] += g * b->data[i * a->cols + j];
                    }
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    for (std::size_t j = 0; j < a->cols; ++j) {
                        b->grad[i * a->cols + j] += g * a->data[i * a->cols + j];
                    }
                }
            }
        });
    }
    return out;
}

// --- gradient checking ---------------------------------------------------

double grad_check(const LossBuilder& loss_builder, const std::vector<GradCheckInput>& inputs,
                  double h) {
    if (!(h > 0.0)) throw ContractError("grad_check: step h must be positive");

    auto evaluate = [&](const std::vector<GradCheckInput>& in) {
        Tape tape;
        std::vector<TensorPtr> leaves;
        leaves.reserve(in.size());
        for (const auto& gi : in) {
            leaves.push_back(tape.leaf(gi.rows, gi.cols, gi.values, true));
        }
        auto loss = loss_builder(tape, leaves);
        if (loss->numel() != 1) {
            throw ContractError("grad_check: loss_builder did not return a scalar");
        }
        return std::make_pair(loss->value(), std::move(leaves));
    };

    // determinism check: two evaluations at the same point must agree exactly
    {
        const double v1 = evaluate(inputs).first;
        const double v2 = evaluate(inputs).first;
        if (v1 != v2) {
            throw ContractError("grad_check: loss_builder is not deterministic");
        }
    }

    // analytic gradients
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        std::vector<TensorPtr> leaves;
        for (const auto& gi : inputs) {
            leaves.push_back(tape.leaf(gi.rows, gi.cols, gi.values, true));
        }
        auto loss = loss_builder(tape, leaves);
        tape.backward(loss);
        for (auto& l : leaves) {
            l->ensure_grad();
            analytic.push_back(l->grad);
        }
    }

    double max_rel = 0.0;
    std::vector<GradCheckInput> work = inputs;
    for (std::size_t t = 0; t < work.size(); ++t) {
        for (std::size_t i = 0; i < work[t].values.size(); ++i) {
            const double orig = work[t].values[i];
            work[t].values[i] = orig + h;
            const double vp = evaluate(work).first;
            work[t].values[i] = orig - h;
            const double vm = evaluate(work).first;
            work[t].values[i] = orig;
            const double fd = (vp - vm) / (2.0 * h);
            const double rel = std::abs(analytic[t][i] - fd) / std::max(1.0, std::abs(fd));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace serl::autodiff
