#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ddf {

using Array = Eigen::ArrayXd;
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One value in a reverse-mode computation graph. Data is a flat row-major
// array; `parents` plus `backward_fn` form the recorded tape. Gradients
// accumulate additively across fan-out and are cleared explicitly.
struct TensorNode {
    std::vector<std::int64_t> shape;
    Array data;
    Array grad;  // size 0 until first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(TensorNode&)> backward_fn;

    std::int64_t numel() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad = Array::Zero(data.size());
    }
};

// Value-semantics handle to a graph node; copies alias the same node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
    static Tensor from_array(std::vector<std::int64_t> shape, Array data,
                             bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::int64_t>& shape() const { return node_->shape; }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t rank() const { return static_cast<std::int64_t>(node_->shape.size()); }
    std::int64_t dim(std::size_t i) const { return node_->shape[i]; }

    Array& data() { return node_->data; }
    const Array& data() const { return node_->data; }
    Array& grad() { return node_->grad; }
    const Array& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad.size() == node_->data.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }
    void clear_grad() { node_->grad.resize(0); }

    // Value of a one-element tensor.
    double item() const;

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

// A named, possibly frozen leaf tensor. Frozen parameters still take part
// in forward and backward passes but optimizer updates skip them.
struct Parameter {
    Tensor tensor;
    bool frozen = false;
    std::string name;
};

// Thread-local switch: while disabled, operations do not record the tape
// and results carry requires_grad = false. Forward-only evaluation under
// the guard is pure and reentrant.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_recording_enabled();

// --- primitive operations -------------------------------------------------

// C[m x n] = A[m x k] . B[k x n]; with transpose_b, B is given as [n x k].
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// Same-shape elementwise sum, or rank-2 [m x n] plus rank-1 [n] broadcast
// over the leading batch axis.
Tensor add(const Tensor& a, const Tensor& b);

// Same-shape elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);

// Elementwise max(0, x). The subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);

// Elementwise logistic 1 / (1 + exp(-x)).
Tensor sigmoid(const Tensor& x);

// Mean of squared differences, reduced to a one-element tensor.
Tensor mse(const Tensor& prediction, const Tensor& target);

Tensor reshape(const Tensor& x, std::vector<std::int64_t> shape);

// Concatenation of two rank-2 tensors along axis 0 (rows) or 1 (columns).
Tensor concat(const Tensor& a, const Tensor& b, int axis);

// --- backward & optimizer --------------------------------------------------

// Reverse-mode sweep from a one-element loss. Every requires_grad tensor
// reachable through the tape receives d(loss)/d(tensor), accumulated on top
// of whatever gradient it already holds.
void backward(const Tensor& loss);

// Plain gradient descent: non-frozen parameters move by -lr * grad, frozen
// parameters stay bitwise identical, all listed gradients are cleared.
void optimizer_step(std::vector<Parameter>& params, double learning_rate);

// Gradient descent with momentum; state is keyed per parameter node.
// momentum = 0 reproduces optimizer_step exactly.
class SgdOptimizer {
public:
    SgdOptimizer(double learning_rate, double momentum = 0.0)
        : learning_rate_(learning_rate), momentum_(momentum) {}

    void step(std::vector<Parameter>& params);

private:
    double learning_rate_;
    double momentum_;
    std::vector<std::pair<TensorNode*, Array>> velocity_;
};

std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace ddf
