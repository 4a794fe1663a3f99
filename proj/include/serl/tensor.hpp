#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace serl::autodiff {

// Dense row-major matrix with a gradient slot. Scalars are 1x1, vectors
// are 1xN. Tensors live on a Tape for the duration of one loss
// evaluation (define-by-run, the tape is rebuilt per evaluation).
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<double> grad;  // materialized lazily, same length as data

    std::size_t numel() const { return rows * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double value() const;  // scalar tensors only
    void ensure_grad();
    void zero_grad();
    std::string shape_str() const;

    int node_index = -1;  // index of the producing tape node, -1 for leaves
};

using TensorPtr = std::shared_ptr<Tensor>;

// Ordered record of primitive applications. Creation order is a
// topological order of the data-flow graph, so replaying backward in
// reverse record order visits every node after all its consumers.
class Tape {
  public:
    TensorPtr leaf(std::size_t rows, std::size_t cols, std::vector<double> values,
                   bool requires_grad);
    TensorPtr constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
        return leaf(rows, cols, std::move(values), false);
    }
    TensorPtr scalar(double v, bool requires_grad = false) {
        return leaf(1, 1, {v}, requires_grad);
    }

    // Propagates d(root)/d(tensor) into the grad slot of every
    // requires_grad tensor reachable from root. Root must be scalar.
    // Leaf grads accumulate across calls; zero_grad() resets them.
    void backward(const TensorPtr& root);

    void zero_grad();

    // used by the op implementations
    TensorPtr make_output(std::size_t rows, std::size_t cols, bool requires_grad);
    void record(const TensorPtr& out, std::function<void()> backward_fn);
    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        TensorPtr out;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
    std::vector<TensorPtr> leaves_;
};

enum class Reduce { Sum, Mean };
enum class Axis { All, Rows };

// --- primitives ---------------------------------------------------------

TensorPtr matmul(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(Tape& t, const TensorPtr& a);
TensorPtr add(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape& t, const TensorPtr& a, double k);
// a is m x n, v is 1 x n; adds v to every row
TensorPtr add_rowvec(Tape& t, const TensorPtr& a, const TensorPtr& v);
TensorPtr exp(Tape& t, const TensorPtr& a);
TensorPtr relu(Tape& t, const TensorPtr& a);
// elementwise log(max(x, eps)); gradient is zero where clamped
TensorPtr log_clamped(Tape& t, const TensorPtr& a, double eps);
TensorPtr reduce(Tape& t, const TensorPtr& a, Reduce mode, Axis axis);
TensorPtr softmax_rows(Tape& t, const TensorPtr& a);
TensorPtr concat_rows(Tape& t, const TensorPtr& a, const TensorPtr& b);
TensorPtr l2_normalize_rows(Tape& t, const TensorPtr& a);
// out_i = a_i . b_i, shape m x 1
TensorPtr row_dot(Tape& t, const TensorPtr& a, const TensorPtr& b);

inline TensorPtr sum_all(Tape& t, const TensorPtr& a) { return reduce(t, a, Reduce::Sum, Axis::All); }
inline TensorPtr mean_all(Tape& t, const TensorPtr& a) { return reduce(t, a, Reduce::Mean, Axis::All); }
inline TensorPtr sum_rows(Tape& t, const TensorPtr& a) { return reduce(t, a, Reduce::Sum, Axis::Rows); }
inline TensorPtr mean_rows(Tape& t, const TensorPtr& a) { return reduce(t, a, Reduce::Mean, Axis::Rows); }

// --- gradient checking ---------------------------------------------------

struct GradCheckInput {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
};

using LossBuilder = std::function<TensorPtr(Tape&, const std::vector<TensorPtr>&)>;

// Compares the tape gradient of loss_builder against central finite
// differences with step h. Returns the max over all coordinates of
// |analytic - fd| / max(1, |fd|). The builder must be deterministic;
// two evaluations that disagree raise ContractError.
double grad_check(const LossBuilder& loss_builder, const std::vector<GradCheckInput>& inputs,
                  double h);

}  // namespace serl::autodiff
