#include "ddf/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace ddf {

namespace {

thread_local bool g_grad_enabled = true;

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: shape entries must be positive");
        n *= d;
    }
    return n;
}

NodePtr make_node(std::vector<std::int64_t> shape, Array data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("tensor: shape " + shape_to_string(shape) +
                                    " does not match data length " + std::to_string(data.size()));
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return node;
}

// Wires a result node into the tape when recording is on and any input
// requires grad; otherwise the result is a detached constant.
Tensor make_result(std::vector<std::int64_t> shape, Array data,
                   std::vector<NodePtr> parents, std::function<void(TensorNode&)> backward_fn) {
    bool track = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) track = track || p->requires_grad;
    }
    NodePtr node = make_node(std::move(shape), std::move(data), track);
    if (track) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

void check_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected a rank-2 tensor, got shape " +
                                    shape_to_string(t.shape()));
    }
}

}  // namespace

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    std::int64_t n = shape_numel(shape);
    return Tensor(make_node(std::move(shape), Array::Zero(n), requires_grad));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
    std::int64_t n = shape_numel(shape);
    return Tensor(make_node(std::move(shape), Array::Constant(n, value), requires_grad));
}

Tensor Tensor::from_array(std::vector<std::int64_t> shape, Array data, bool requires_grad) {
    return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return full({1}, value, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) {
        throw std::invalid_argument("item: tensor has " + std::to_string(numel()) +
                                    " elements, expected 1");
    }
    return node_->data[0];
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_recording_enabled() { return g_grad_enabled; }

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
    check_rank2(a, "matmul");
    check_rank2(b, "matmul");
    const std::int64_t m = a.dim(0);
    const std::int64_t k = a.dim(1);
    const std::int64_t bk = transpose_b ? b.dim(1) : b.dim(0);
    const std::int64_t n = transpose_b ? b.dim(0) : b.dim(1);
    if (k != bk) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()) +
                                    (transpose_b ? " (b transposed)" : ""));
    }

    ConstMatMap A(a.data().data(), m, k);
    Array out(m * n);
    MatMap C(out.data(), m, n);
    if (transpose_b) {
        ConstMatMap B(b.data().data(), n, k);
        C.noalias() = A * B.transpose();
    } else {
        ConstMatMap B(b.data().data(), k, n);
        C.noalias() = A * B;
    }

    NodePtr an = a.node();
    NodePtr bn = b.node();
    return make_result({m, n}, std::move(out), {an, bn},
                       [an, bn, m, k, n, transpose_b](TensorNode& self) {
                           ConstMatMap G(self.grad.data(), m, n);
                           ConstMatMap A(an->data.data(), m, k);
                           if (transpose_b) {
                               ConstMatMap B(bn->data.data(), n, k);
                               if (an->requires_grad) {
                                   an->ensure_grad();
                                   MatMap dA(an->grad.data(), m, k);
                                   dA.noalias() += G * B;
                               }
                               if (bn->requires_grad) {
                                   bn->ensure_grad();
                                   MatMap dB(bn->grad.data(), n, k);
                                   dB.noalias() += G.transpose() * A;
                               }
                           } else {
                               ConstMatMap B(bn->data.data(), k, n);
                               if (an->requires_grad) {
                                   an->ensure_grad();
                                   MatMap dA(an->grad.data(), m, k);
                                   dA.noalias() += G * B.transpose();
                               }
                               if (bn->requires_grad) {
                                   bn->ensure_grad();
                                   MatMap dB(bn->grad.data(), k, n);
                                   dB.noalias() += A.transpose() * G;
                               }
                           }
                       });
}

Tensor add(const Tensor& a, const Tensor& b) {
    NodePtr an = a.node();
    NodePtr bn = b.node();

    if (a.shape() == b.shape()) {
        return make_result(a.shape(), a.data() + b.data(), {an, bn}, [an, bn](TensorNode& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                an->grad += self.grad;
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                bn->grad += self.grad;
            }
        });
    }

    if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) {
        const std::int64_t m = a.dim(0);
        const std::int64_t n = a.dim(1);
        Array out(m * n);
        ConstMatMap A(a.data().data(), m, n);
        MatMap O(out.data(), m, n);
        O = A.rowwise() + Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), n);
        return make_result(a.shape(), std::move(out), {an, bn}, [an, bn, m, n](TensorNode& self) {
            ConstMatMap G(self.grad.data(), m, n);
            if (an->requires_grad) {
                an->ensure_grad();
                MatMap dA(an->grad.data(), m, n);
                dA += G;
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                Eigen::Map<Eigen::RowVectorXd> dB(bn->grad.data(), n);
                dB += G.colwise().sum();
            }
        });
    }

    throw std::invalid_argument("add: incompatible shapes " + shape_to_string(a.shape()) +
                                " and " + shape_to_string(b.shape()));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("mul: shapes differ, " + shape_to_string(a.shape()) +
                                    " vs " + shape_to_string(b.shape()));
    }
    NodePtr an = a.node();
    NodePtr bn = b.node();
    return make_result(a.shape(), a.data() * b.data(), {an, bn}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            an->grad += self.grad * bn->data;
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            bn->grad += self.grad * an->data;
        }
    });
}

Tensor relu(const Tensor& x) {
    NodePtr xn = x.node();
    return make_result(x.shape(), x.data().max(0.0), {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        xn->grad += self.grad * (xn->data > 0.0).cast<double>();
    });
}

Tensor sigmoid(const Tensor& x) {
    // Evaluated in a form that never exponentiates a large positive value.
    Array out = (x.data() >= 0.0)
                    .select(1.0 / (1.0 + (-x.data()).exp()),
                            x.data().exp() / (1.0 + x.data().exp()));
    NodePtr xn = x.node();
    Array saved = out;
    return make_result(x.shape(), std::move(out), {xn},
                       [xn, saved = std::move(saved)](TensorNode& self) {
                           if (!xn->requires_grad) return;
                           xn->ensure_grad();
                           xn->grad += self.grad * saved * (1.0 - saved);
                       });
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape() != target.shape()) {
        throw std::invalid_argument("mse: shapes differ, " +
                                    shape_to_string(prediction.shape()) + " vs " +
                                    shape_to_string(target.shape()));
    }
    NodePtr pn = prediction.node();
    NodePtr tn = target.node();
    const double inv_n = 1.0 / static_cast<double>(prediction.numel());
    Array diff = prediction.data() - target.data();
    Array out(1);
    out[0] = (diff * diff).sum() * inv_n;
    return make_result({1}, std::move(out), {pn, tn}, [pn, tn, inv_n](TensorNode& self) {
        const double g = self.grad[0];
        if (pn->requires_grad) {
            pn->ensure_grad();
            pn->grad += (2.0 * inv_n * g) * (pn->data - tn->data);
        }
        if (tn->requires_grad) {
            tn->ensure_grad();
            tn->grad -= (2.0 * inv_n * g) * (pn->data - tn->data);
        }
    });
}

Tensor reshape(const Tensor& x, std::vector<std::int64_t> shape) {
    if (shape_numel(shape) != x.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_to_string(x.shape()) +
                                    " as " + shape_to_string(shape));
    }
    NodePtr xn = x.node();
    return make_result(std::move(shape), x.data(), {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        xn->grad += self.grad;
    });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    check_rank2(a, "concat");
    check_rank2(b, "concat");
    if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
    const std::int64_t shared = axis == 0 ? 1 : 0;
    if (a.dim(shared) != b.dim(shared)) {
        throw std::invalid_argument("concat: shapes " + shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()) + " disagree on axis " +
                                    std::to_string(shared));
    }

    std::int64_t m, n;
    Array out;
    if (axis == 0) {
        m = a.dim(0) + b.dim(0);
        n = a.dim(1);
        out.resize(m * n);
        out.head(a.numel()) = a.data();
        out.tail(b.numel()) = b.data();
    } else {
        m = a.dim(0);
        n = a.dim(1) + b.dim(1);
        out.resize(m * n);
        MatMap O(out.data(), m, n);
        O.leftCols(a.dim(1)) = ConstMatMap(a.data().data(), m, a.dim(1));
        O.rightCols(b.dim(1)) = ConstMatMap(b.data().data(), m, b.dim(1));
    }

    NodePtr an = a.node();
    NodePtr bn = b.node();
    const std::int64_t a_cols = a.dim(1);
    const std::int64_t b_cols = b.dim(1);
    const std::int64_t a_rows = a.dim(0);
    return make_result({m, n}, std::move(out), {an, bn},
                       [an, bn, axis, m, n, a_rows, a_cols, b_cols](TensorNode& self) {
                           if (axis == 0) {
                               if (an->requires_grad) {
                                   an->ensure_grad();
                                   an->grad += self.grad.head(an->data.size());
                               }
                               if (bn->requires_grad) {
                                   bn->ensure_grad();
                                   bn->grad += self.grad.tail(bn->data.size());
                               }
                           } else {
                               ConstMatMap G(self.grad.data(), m, n);
                               if (an->requires_grad) {
                                   an->ensure_grad();
                                   MatMap dA(an->grad.data(), a_rows, a_cols);
                                   dA += G.leftCols(a_cols);
                               }
                               if (bn->requires_grad) {
                                   bn->ensure_grad();
                                   MatMap dB(bn->grad.data(), a_rows, b_cols);
                                   dB += G.rightCols(b_cols);
                               }
                           }
                       });
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be a one-element tensor, got shape " +
                                    shape_to_string(loss.shape()));
    }

    // Iterative post-order DFS over parents; reversed order is topological.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* parent = node->parents[next++].get();
            if (visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward_fn && node->grad.size() == node->data.size()) {
            node->backward_fn(*node);
        }
    }
}

void optimizer_step(std::vector<Parameter>& params, double learning_rate) {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("optimizer_step: learning rate must be positive");
    }
    for (Parameter& p : params) {
        if (p.frozen) continue;
        if (!p.tensor.has_grad()) {
            throw std::invalid_argument("optimizer_step: parameter '" + p.name +
                                        "' has no gradient");
        }
        p.tensor.data() -= learning_rate * p.tensor.grad();
    }
    for (Parameter& p : params) p.tensor.clear_grad();
}

void SgdOptimizer::step(std::vector<Parameter>& params) {
    for (Parameter& p : params) {
        if (p.frozen) continue;
        if (!p.tensor.has_grad()) {
            throw std::invalid_argument("optimizer: parameter '" + p.name + "' has no gradient");
        }
        if (momentum_ == 0.0) {
            p.tensor.data() -= learning_rate_ * p.tensor.grad();
            continue;
        }
        TensorNode* key = p.tensor.node().get();
        Array* v = nullptr;
        for (auto& [node, vel] : velocity_) {
            if (node == key) {
                v = &vel;
                break;
            }
        }
        if (v == nullptr) {
            velocity_.emplace_back(key, Array::Zero(p.tensor.numel()));
            v = &velocity_.back().second;
        }
        *v = momentum_ * *v + p.tensor.grad();
        p.tensor.data() -= learning_rate_ * *v;
    }
    for (Parameter& p : params) p.tensor.clear_grad();
}

}  // namespace ddf
