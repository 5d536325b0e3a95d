#include "acm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace acm {

// ---------------------------------------------------------------- Shape

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("Shape: rank must be at least 1");
    numel_ = 1;
    for (auto d : dims_) {
        if (d == 0) throw std::invalid_argument("Shape: every dim must be >= 1, got " + str());
        numel_ *= d;
    }
}

std::size_t Shape::channels() const {
    if (dims_.size() != 1 && dims_.size() != 3)
        throw std::invalid_argument("Shape: not a feature map: " + str());
    return dims_[0];
}
std::size_t Shape::height() const {
    if (dims_.size() == 1) return 1;
    if (dims_.size() != 3) throw std::invalid_argument("Shape: not a feature map: " + str());
    return dims_[1];
}
std::size_t Shape::width() const {
    if (dims_.size() == 1) return 1;
    if (dims_.size() != 3) throw std::invalid_argument("Shape: not a feature map: " + str());
    return dims_[2];
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "x" : "") << dims_[i];
    os << ']';
    return os.str();
}

// ---------------------------------------------------------------- Node / Tensor

double* Node::input_grad(std::size_t i) const {
    Node& in = *inputs[i];
    if (!in.requires_grad) return nullptr;
    return in.grad.data();
}

namespace {

thread_local bool t_grad_enabled = true;

NodePtr new_leaf(const Shape& shape, std::vector<double> values, bool requires_grad) {
    if (values.size() != shape.numel())
        throw std::invalid_argument("Tensor: value count does not match shape " + shape.str());
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return n;
}

}  // namespace

bool grad_enabled() noexcept { return t_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return full(shape, 0.0, requires_grad);
}
Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
    return Tensor(new_leaf(shape, std::vector<double>(shape.numel(), v), requires_grad));
}
Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
    return Tensor(new_leaf(shape, std::move(values), requires_grad));
}
Tensor Tensor::scalar(double v, bool requires_grad) { return from(Shape{1}, {v}, requires_grad); }

std::span<double> Tensor::mutable_values() {
    if (!is_leaf()) throw std::logic_error("Tensor: only leaf values may be mutated");
    return node_->value;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item on non-scalar " + shape().str());
    return node_->value[0];
}

double Tensor::at(std::size_t c, std::size_t i, std::size_t j) const {
    const Shape& s = shape();
    return node_->value[(c * s.height() + i) * s.width() + j];
}

std::span<double> Tensor::mutable_grad() {
    if (node_->grad.empty()) node_->grad.assign(numel(), 0.0);
    return node_->grad;
}

void Tensor::set_grad(std::vector<double> g) {
    if (g.size() != numel()) throw std::invalid_argument("Tensor::set_grad: size mismatch");
    node_->grad = std::move(g);
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach(bool requires_grad) const {
    return Tensor(new_leaf(shape(), node_->value, requires_grad));
}

Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> inputs, BackwardFn backward) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    bool any = false;
    if (t_grad_enabled)
        for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) {
        n->requires_grad = true;
        n->inputs.reserve(inputs.size());
        for (auto& t : inputs) n->inputs.push_back(t.node());
        n->backward = std::move(backward);
    }
    return Tensor(std::move(n));
}

// ---------------------------------------------------------------- Graph

Graph::Graph(const Tensor& root) {
    if (!root.defined() || !root.requires_grad()) return;
    std::unordered_set<const Node*> seen;
    // Iterative post-order DFS: (node, next input index).
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order_.push_back(node);
            stack.pop_back();
        }
    }
}

void backward(const Tensor& root) {
    if (!root.defined()) throw std::invalid_argument("backward: undefined root");
    if (root.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar, got " + root.shape().str());
    Graph graph(root);
    for (Node* n : graph.nodes()) {
        if (n->op != nullptr || n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
    }
    if (graph.size() == 0) return;
    graph.nodes().back()->grad[0] += 1.0;
    const auto& order = graph.nodes();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward) n->backward(*n);
    }
}

// ---------------------------------------------------------------- ops

Tensor randn(const Shape& shape, std::uint64_t seed, double stddev, bool requires_grad) {
    if (!(stddev > 0.0)) throw std::invalid_argument("randn: stddev must be > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(shape.numel());
    for (auto& x : v) x = dist(rng);
    return Tensor::from(shape, std::move(v), requires_grad);
}

namespace {

enum class Bcast { none, a_vec, b_vec };

Bcast broadcast_kind(const Shape& a, const Shape& b, const char* op) {
    if (a == b) return Bcast::none;
    if (a.is_chw() && b.is_chw() && a.channels() == b.channels()) {
        if (a.plane() == 1) return Bcast::a_vec;
        if (b.plane() == 1) return Bcast::b_vec;
    }
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.str() + " and " +
                                b.str());
}

// Reduces an output-shaped gradient onto a C x 1 x 1 operand.
void reduce_into_vec(const double* g, std::size_t channels, std::size_t plane, double* dst) {
    for (std::size_t c = 0; c < channels; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += g[c * plane + p];
        dst[c] += s;
    }
}

template <class Fwd, class DA, class DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
    const Bcast kind = broadcast_kind(a.shape(), b.shape(), name);
    const Shape out_shape = kind == Bcast::a_vec ? b.shape() : a.shape();
    const std::size_t n = out_shape.numel();
    const std::size_t plane = kind == Bcast::none ? 1 : out_shape.plane();
    const bool a_vec = kind == Bcast::a_vec, b_vec = kind == Bcast::b_vec;
    auto ai = [=](std::size_t k) { return a_vec ? k / plane : k; };
    auto bi = [=](std::size_t k) { return b_vec ? k / plane : k; };

    const double* av = a.values().data();
    const double* bv = b.values().data();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = fwd(av[ai(k)], bv[bi(k)]);

    return make_op(name, out_shape, std::move(out), {a, b}, [=](Node& self) {
        const double* g = self.grad.data();
        const double* x = self.input_value(0);
        const double* y = self.input_value(1);
        if (double* ga = self.input_grad(0)) {
            if (a_vec) {
                std::vector<double> tmp(n);
                for (std::size_t k = 0; k < n; ++k) tmp[k] = g[k] * da(x[ai(k)], y[bi(k)]);
                reduce_into_vec(tmp.data(), n / plane, plane, ga);
            } else {
                for (std::size_t k = 0; k < n; ++k) ga[k] += g[k] * da(x[ai(k)], y[bi(k)]);
            }
        }
        if (double* gb = self.input_grad(1)) {
            if (b_vec) {
                std::vector<double> tmp(n);
                for (std::size_t k = 0; k < n; ++k) tmp[k] = g[k] * db(x[ai(k)], y[bi(k)]);
                reduce_into_vec(tmp.data(), n / plane, plane, gb);
            } else {
                for (std::size_t k = 0; k < n; ++k) gb[k] += g[k] * db(x[ai(k)], y[bi(k)]);
            }
        }
    });
}

void require_chw(const Tensor& x, const char* op) {
    if (!x.shape().is_chw())
        throw std::invalid_argument(std::string(op) + ": expected [C,H,W], got " + x.shape().str());
}

void require_finite(std::span<const double> v, const char* op) {
    for (double x : v)
        if (!std::isfinite(x)) throw NonFiniteError(std::string(op) + ": non-finite input");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.values().begin(), a.values().end());
    for (auto& v : out) v *= s;
    return make_op("scale", a.shape(), std::move(out), {a}, [s](Node& self) {
        double* ga = self.input_grad(0);
        for (std::size_t k = 0; k < self.grad.size(); ++k) ga[k] += s * self.grad[k];
    });
}

Tensor grouped_channel_linear(const Tensor& x, const Tensor& weight,
                              const std::optional<Tensor>& bias) {
    require_chw(x, "grouped_channel_linear");
    if (weight.shape().rank() != 3)
        throw std::invalid_argument("grouped_channel_linear: weight must be [G,out,in], got " +
                                    weight.shape().str());
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    const std::size_t G = weight.shape()[0], out_g = weight.shape()[1], in_g = weight.shape()[2];
    if (C % G != 0)
        throw std::invalid_argument("grouped_channel_linear: channels " + std::to_string(C) +
                                    " not divisible by groups " + std::to_string(G));
    if (C / G != in_g)
        throw std::invalid_argument("grouped_channel_linear: weight expects " +
                                    std::to_string(in_g) + " inputs per group, input has " +
                                    std::to_string(C / G));
    const std::size_t out_c = G * out_g;
    if (bias && bias->numel() != out_c)
        throw std::invalid_argument("grouped_channel_linear: bias must have " +
                                    std::to_string(out_c) + " entries");

    const double* xv = x.values().data();
    const double* wv = weight.values().data();
    std::vector<double> out(out_c * plane, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t o = 0; o < out_g; ++o) {
            double* dst = out.data() + (g * out_g + o) * plane;
            const double* wrow = wv + (g * out_g + o) * in_g;
            for (std::size_t i = 0; i < in_g; ++i) {
                const double w = wrow[i];
                const double* src = xv + (g * in_g + i) * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] += w * src[p];
            }
            if (bias) {
                const double b = (*bias)[g * out_g + o];
                for (std::size_t p = 0; p < plane; ++p) dst[p] += b;
            }
        }
    }

    std::vector<Tensor> inputs{x, weight};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    return make_op("grouped_channel_linear", Shape{out_c, x.shape().height(), x.shape().width()},
                   std::move(out), std::move(inputs), [=](Node& self) {
                       const double* gy = self.grad.data();
                       const double* xin = self.input_value(0);
                       const double* w = self.input_value(1);
                       double* gx = self.input_grad(0);
                       double* gw = self.input_grad(1);
                       double* gb = has_bias ? self.input_grad(2) : nullptr;
                       for (std::size_t g = 0; g < G; ++g) {
                           for (std::size_t o = 0; o < out_g; ++o) {
                               const std::size_t oc = g * out_g + o;
                               const double* gyo = gy + oc * plane;
                               if (gb) {
                                   double s = 0.0;
                                   for (std::size_t p = 0; p < plane; ++p) s += gyo[p];
                                   gb[oc] += s;
                               }
                               for (std::size_t i = 0; i < in_g; ++i) {
                                   const std::size_t ic = g * in_g + i;
                                   if (gw) {
                                       double s = 0.0;
                                       const double* src = xin + ic * plane;
                                       for (std::size_t p = 0; p < plane; ++p) s += gyo[p] * src[p];
                                       gw[oc * in_g + i] += s;
                                   }
                                   if (gx) {
                                       const double wv_ = w[oc * in_g + i];
                                       double* dst = gx + ic * plane;
                                       for (std::size_t p = 0; p < plane; ++p) dst[p] += wv_ * gyo[p];
                                   }
                               }
                           }
                       }
                   });
}

Tensor spatial_softmax(const Tensor& logits) {
    require_chw(logits, "spatial_softmax");
    require_finite(logits.values(), "spatial_softmax");
    const std::size_t G = logits.shape().channels(), plane = logits.shape().plane();
    const double* z = logits.values().data();
    std::vector<double> out(G * plane);
    for (std::size_t g = 0; g < G; ++g) {
        const double* zg = z + g * plane;
        double* yg = out.data() + g * plane;
        const double m = *std::max_element(zg, zg + plane);
        double sum = 0.0;
        for (std::size_t p = 0; p < plane; ++p) sum += (yg[p] = std::exp(zg[p] - m));
        for (std::size_t p = 0; p < plane; ++p) yg[p] /= sum;
    }
    return make_op("spatial_softmax", logits.shape(), std::move(out), {logits},
                   [G, plane](Node& self) {
                       double* gz = self.input_grad(0);
                       const double* y = self.value.data();
                       const double* gy = self.grad.data();
                       for (std::size_t g = 0; g < G; ++g) {
                           const std::size_t o = g * plane;
                           double inner = 0.0;
                           for (std::size_t p = 0; p < plane; ++p) inner += y[o + p] * gy[o + p];
                           for (std::size_t p = 0; p < plane; ++p)
                               gz[o + p] += y[o + p] * (gy[o + p] - inner);
                       }
                   });
}

Tensor weighted_spatial_sum(const Tensor& x, const Tensor& weights, std::size_t groups) {
    require_chw(x, "weighted_spatial_sum");
    require_chw(weights, "weighted_spatial_sum");
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    if (groups == 0 || C % groups != 0)
        throw std::invalid_argument("weighted_spatial_sum: channels " + std::to_string(C) +
                                    " not divisible by groups " + std::to_string(groups));
    if (weights.shape().channels() != groups || weights.shape().plane() != plane ||
        weights.shape().height() != x.shape().height())
        throw std::invalid_argument("weighted_spatial_sum: weights " + weights.shape().str() +
                                    " do not match input " + x.shape().str());
    const std::size_t per = C / groups;
    const double* xv = x.values().data();
    const double* av = weights.values().data();
    std::vector<double> out(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        const double* a = av + (c / per) * plane;
        const double* xc = xv + c * plane;
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += a[p] * xc[p];
        out[c] = s;
    }
    return make_op("weighted_spatial_sum", Shape{C, 1, 1}, std::move(out), {x, weights},
                   [=](Node& self) {
                       const double* go = self.grad.data();
                       const double* xin = self.input_value(0);
                       const double* a = self.input_value(1);
                       double* gx = self.input_grad(0);
                       double* ga = self.input_grad(1);
                       for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t g = c / per;
                           if (gx)
                               for (std::size_t p = 0; p < plane; ++p)
                                   gx[c * plane + p] += a[g * plane + p] * go[c];
                           if (ga)
                               for (std::size_t p = 0; p < plane; ++p)
                                   ga[g * plane + p] += xin[c * plane + p] * go[c];
                       }
                   });
}

Tensor spatial_mean(const Tensor& x) {
    require_chw(x, "spatial_mean");
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    const double* xv = x.values().data();
    std::vector<double> out(C);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += xv[c * plane + p];
        out[c] = s / static_cast<double>(plane);
    }
    return make_op("spatial_mean", Shape{C, 1, 1}, std::move(out), {x}, [C, plane](Node& self) {
        double* gx = self.input_grad(0);
        const double inv = 1.0 / static_cast<double>(plane);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < plane; ++p) gx[c * plane + p] += self.grad[c] * inv;
    });
}

Tensor channel_norm(const Tensor& x, double eps) {
    require_chw(x, "channel_norm");
    if (!(eps > 0.0)) throw std::invalid_argument("channel_norm: eps must be > 0");
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    const double inv_c = 1.0 / static_cast<double>(C);
    const double* xv = x.values().data();
    std::vector<double> out(C * plane);
    std::vector<double> inv_std(plane);
    for (std::size_t p = 0; p < plane; ++p) {
        double mean = 0.0;
        for (std::size_t c = 0; c < C; ++c) mean += xv[c * plane + p];
        mean *= inv_c;
        double var = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double d = xv[c * plane + p] - mean;
            var += d * d;
        }
        var *= inv_c;
        inv_std[p] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < C; ++c) out[c * plane + p] = (xv[c * plane + p] - mean) * inv_std[p];
    }
    return make_op("channel_norm", x.shape(), std::move(out), {x},
                   [C, plane, inv_c, inv_std = std::move(inv_std)](Node& self) {
                       double* gx = self.input_grad(0);
                       const double* y = self.value.data();
                       const double* gy = self.grad.data();
                       for (std::size_t p = 0; p < plane; ++p) {
                           double mean_g = 0.0, mean_gy = 0.0;
                           for (std::size_t c = 0; c < C; ++c) {
                               mean_g += gy[c * plane + p];
                               mean_gy += gy[c * plane + p] * y[c * plane + p];
                           }
                           mean_g *= inv_c;
                           mean_gy *= inv_c;
                           for (std::size_t c = 0; c < C; ++c) {
                               const std::size_t k = c * plane + p;
                               gx[k] += inv_std[p] * (gy[k] - mean_g - y[k] * mean_gy);
                           }
                       }
                   });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (auto& v : out) v = v > 0.0 ? v : 0.0;
    return make_op("relu", x.shape(), std::move(out), {x}, [](Node& self) {
        double* gx = self.input_grad(0);
        const double* xin = self.input_value(0);
        for (std::size_t k = 0; k < self.grad.size(); ++k)
            if (xin[k] > 0.0) gx[k] += self.grad[k];
    });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (auto& v : out) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    return make_op("sigmoid", x.shape(), std::move(out), {x}, [](Node& self) {
        double* gx = self.input_grad(0);
        for (std::size_t k = 0; k < self.grad.size(); ++k) {
            const double y = self.value[k];
            gx[k] += self.grad[k] * y * (1.0 - y);
        }
    });
}

Tensor global_max_pool(const Tensor& x) {
    require_chw(x, "global_max_pool");
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    const double* xv = x.values().data();
    std::vector<double> out(C);
    std::vector<std::size_t> argmax(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double* xc = xv + c * plane;
        // max_element returns the first maximum.
        argmax[c] = static_cast<std::size_t>(std::max_element(xc, xc + plane) - xc);
        out[c] = xc[argmax[c]];
    }
    return make_op("global_max_pool", Shape{C}, std::move(out), {x},
                   [argmax = std::move(argmax), plane](Node& self) {
                       double* gx = self.input_grad(0);
                       for (std::size_t c = 0; c < argmax.size(); ++c)
                           gx[c * plane + argmax[c]] += self.grad[c];
                   });
}

Tensor global_avg_pool(const Tensor& x) {
    require_chw(x, "global_avg_pool");
    const std::size_t C = x.shape().channels(), plane = x.shape().plane();
    const double* xv = x.values().data();
    std::vector<double> out(C);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += xv[c * plane + p];
        out[c] = s / static_cast<double>(plane);
    }
    return make_op("global_avg_pool", Shape{C}, std::move(out), {x}, [C, plane](Node& self) {
        double* gx = self.input_grad(0);
        const double inv = 1.0 / static_cast<double>(plane);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < plane; ++p) gx[c * plane + p] += self.grad[c] * inv;
    });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel())
        throw std::invalid_argument("dot: length mismatch " + a.shape().str() + " vs " +
                                    b.shape().str());
    double s = 0.0;
    for (std::size_t k = 0; k < a.numel(); ++k) s += a[k] * b[k];
    return make_op("dot", Shape{1}, {s}, {a, b}, [](Node& self) {
        const double g = self.grad[0];
        const double* av = self.input_value(0);
        const double* bv = self.input_value(1);
        const std::size_t n = self.inputs[0]->value.size();
        if (double* ga = self.input_grad(0))
            for (std::size_t k = 0; k < n; ++k) ga[k] += g * bv[k];
        if (double* gb = self.input_grad(1))
            for (std::size_t k = 0; k < n; ++k) gb[k] += g * av[k];
    });
}

Tensor bce_loss(const Tensor& prob, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1");
    const double p = prob.item();
    const double pc = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
    const bool clamped = pc != p;
    const double y = label;
    const double loss = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    return make_op("bce_loss", Shape{1}, {loss}, {prob}, [=](Node& self) {
        if (clamped) return;
        self.input_grad(0)[0] += self.grad[0] * (-(y / pc) + (1.0 - y) / (1.0 - pc));
    });
}

// ---------------------------------------------------------------- gradcheck

GradcheckReport gradcheck(const std::function<Tensor()>& f, Tensor& x, double h, double tol) {
    if (!(h > 0.0)) throw std::invalid_argument("gradcheck: step must be > 0");
    if (!x.is_leaf() || !x.requires_grad())
        throw std::invalid_argument("gradcheck: x must be a leaf that requires a gradient");

    x.zero_grad();
    backward(f());
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

    GradcheckReport report;
    NoGradGuard no_grad;
    auto values = x.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double orig = values[i];
        values[i] = orig + h;
        const double fp = f().item();
        values[i] = orig - h;
        const double fm = f().item();
        values[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double abs_err = std::abs(analytic[i] - numeric);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradcheckFloor});
        const double rel = abs_err / denom;
        if (!(rel <= report.max_rel_error)) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        ++report.checked;
    }
    report.passed = report.max_rel_error <= tol;
    return report;
}

}  // namespace acm
