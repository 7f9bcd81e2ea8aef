#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hgat/common.hpp"

namespace hgat {

using Shape = std::vector<std::size_t>;

namespace detail {
struct TensorData {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;   // allocated lazily on first accumulation
    bool requires_grad = false; // leaf whose gradient the caller wants
    bool needs_grad = false;    // reachable from a requires_grad leaf
};
}  // namespace detail

// Dense row-major tensor of 64-bit reals. Copies share storage; treat values
// as immutable once an op has consumed them. Gradients live alongside the
// values and are filled in by Tape::backward.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor from(Shape shape, std::vector<double> value);
    static Tensor scalar(double v);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t size() const { return d_->value.size(); }
    std::size_t extent(std::size_t axis) const { return d_->shape.at(axis); }

    std::span<const double> value() const { return d_->value; }
    std::span<double> mutable_value() { return d_->value; }
    double item() const;

    void set_requires_grad(bool on);
    bool requires_grad() const { return d_->requires_grad; }

    // Zeros if backward never reached this tensor.
    std::span<const double> grad() const;
    void clear_grad();

    // Deep copy of the values; gradient state is not copied.
    Tensor clone() const;

    detail::TensorData* data() const { return d_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<detail::TensorData> d_;
    friend class Tape;
};

enum class Activation { LeakyRelu, Elu, Sigmoid, Identity };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

// Reverse-mode differentiation tape. Ops record a backward rule as they
// execute; entries are naturally in topological order, so backward() is a
// single reverse sweep with additive gradient accumulation. One backward per
// tape; build a fresh tape per training step.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor matmul(const Tensor& a, const Tensor& b);      // [m,k]x[k,n] -> [m,n]
    Tensor transpose(const Tensor& a);                    // [m,n] -> [n,m]
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);         // elementwise
    Tensor affine(const Tensor& x, double scale, double shift);
    Tensor concat(const std::vector<Tensor>& parts);      // along last axis
    Tensor reshape(const Tensor& x, Shape shape);
    Tensor row(const Tensor& m, std::size_t i);           // [r,c] -> [c]
    Tensor rows(const Tensor& m, const std::vector<std::size_t>& idx);  // gather -> [k,c]
    Tensor stack(const std::vector<Tensor>& scalars);     // k scalars -> [k]
    Tensor stack_rows(const std::vector<Tensor>& vectors);  // k x [c] -> [k,c]
    Tensor dot(const Tensor& a, const Tensor& b);         // [n]·[n] -> scalar
    Tensor masked_softmax(const Tensor& logits, const std::vector<bool>& mask);
    Tensor softmax(const Tensor& logits);                 // masked_softmax, all retained
    Tensor activation(Activation kind, const Tensor& x, double leaky_slope = 0.2);
    Tensor log(const Tensor& x);
    Tensor clamp(const Tensor& x, double lo, double hi);
    Tensor pick(const Tensor& v, std::size_t index);      // [n] -> scalar
    Tensor sum(const Tensor& x);                          // -> scalar

    // Seeds d(loss)/d(loss) = 1 and sweeps the record in reverse. Throws on a
    // non-scalar loss and on a second call without a fresh tape.
    void backward(const Tensor& loss);

    std::size_t recorded_ops() const { return entries_.size(); }

private:
    struct Entry {
        std::function<void()> backward;
    };

    void record(Tensor& out, std::initializer_list<const Tensor*> inputs,
                std::function<void()> backward_fn);
    void record_multi(Tensor& out, const std::vector<Tensor>& inputs,
                      std::function<void()> backward_fn);

    std::vector<Entry> entries_;
    bool backward_done_ = false;
};

// Central finite differences (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps), the
// independent gradient oracle the analytic backward rules are checked against.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x, double eps);

namespace detail {
void accumulate_grad(TensorData* t, std::span<const double> g);
std::vector<double>& grad_buffer(TensorData* t);
}  // namespace detail

}  // namespace hgat
