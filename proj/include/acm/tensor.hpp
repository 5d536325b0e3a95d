#pragma once

// Dense float64 tensors with tape-free reverse-mode differentiation.
//
// Every op returns a new Tensor whose node keeps shared references to its
// inputs and a backward closure. Feature maps use rank-3 [C, H, W] layout;
// batching is an outer loop over independent per-sample graphs (see batch.hpp).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace acm {

// Raised by ops that refuse NaN or infinite inputs. Training treats it as divergence.
class NonFiniteError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t numel() const noexcept { return numel_; }
    std::size_t operator[](std::size_t i) const { return dims_.at(i); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    // Feature-map view. Rank-1 [C] is read as C x 1 x 1.
    std::size_t channels() const;
    std::size_t height() const;
    std::size_t width() const;
    std::size_t plane() const { return height() * width(); }

    bool is_chw() const noexcept { return dims_.size() == 3; }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
    std::size_t numel_ = 0;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node&)>;

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a backward pass reaches this node
    bool requires_grad = false;
    const char* op = nullptr;  // null for leaves
    std::vector<NodePtr> inputs;
    BackwardFn backward;

    // Gradient buffer of an input, or null if that input does not take gradients.
    double* input_grad(std::size_t i) const;
    const double* input_value(std::size_t i) const { return inputs[i]->value.data(); }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double v, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->shape.numel(); }

    std::span<const double> values() const { return node_->value; }
    // Leaves only; mutating an op result would desynchronize its graph.
    std::span<double> mutable_values();
    double operator[](std::size_t i) const { return node_->value[i]; }
    double item() const;
    double at(std::size_t c, std::size_t i, std::size_t j) const;

    bool requires_grad() const { return node_->requires_grad; }
    bool is_leaf() const { return node_->op == nullptr; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad();
    void set_grad(std::vector<double> g);
    void zero_grad();
    const char* op() const { return node_->op; }

    // New leaf with a copy of the values.
    Tensor detach(bool requires_grad = false) const;

    const NodePtr& node() const noexcept { return node_; }
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

private:
    NodePtr node_;
};

// Builds an op result. When no input requires a gradient the inputs and the
// closure are dropped and the result is a constant leaf-like node.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> inputs, BackwardFn backward);

// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};
bool grad_enabled() noexcept;

// Topologically ordered nodes reachable from a root through gradient-carrying edges.
class Graph {
public:
    explicit Graph(const Tensor& root);
    const std::vector<Node*>& nodes() const noexcept { return order_; }
    std::size_t size() const noexcept { return order_.size(); }

private:
    std::vector<Node*> order_;
};

Tensor randn(const Shape& shape, std::uint64_t seed, double stddev, bool requires_grad = false);

// Elementwise with the single broadcast pattern C x 1 x 1 against C x H x W.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// 1x1 grouped convolution. weight is [G, out_per_group, in_per_group] with
// in_per_group = C / G; bias, when given, has G * out_per_group entries.
Tensor grouped_channel_linear(const Tensor& x, const Tensor& weight,
                              const std::optional<Tensor>& bias = std::nullopt);

Tensor spatial_softmax(const Tensor& logits);
Tensor weighted_spatial_sum(const Tensor& x, const Tensor& weights, std::size_t groups);
Tensor spatial_mean(const Tensor& x);

// Per-location normalization across channels: zero mean, unit variance over
// C at every (i, j). No affine parameters.
Tensor channel_norm(const Tensor& x, double eps = 1e-5);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// [C, H, W] -> [C]. Max routes the gradient to the first row-major argmax.
Tensor global_max_pool(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);

// Inner product over equal element counts; result has shape [1].
Tensor dot(const Tensor& a, const Tensor& b);

inline constexpr double kBceEpsilon = 1e-7;
Tensor bce_loss(const Tensor& prob, int label);

// Seeds the root gradient with 1 and accumulates d(root)/d(leaf) into every
// reachable leaf that requires a gradient.
void backward(const Tensor& root);

struct GradcheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool passed = true;
};

// Relative error per coordinate is |a - n| / max(|a|, |n|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-3;

// Central differences on every coordinate of leaf x; f must rebuild its graph
// from x on each call.
GradcheckReport gradcheck(const std::function<Tensor()>& f, Tensor& x, double h, double tol);

}  // namespace acm
