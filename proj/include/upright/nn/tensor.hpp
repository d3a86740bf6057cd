// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dynamic-graph reverse-mode tensor. Each op output keeps shared ownership of its
// inputs and a closure that scatters its gradient into them; backward() walks the
// graph in reverse topological order.

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace upright::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Graph recording is on by default; a live NoGradGuard disables it on this thread.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until something flows into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    /// Gradient buffer, zero-filled on first access.
    std::vector<T>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), T(0));
        return grad;
    }
};

template <typename T>
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    const Shape& shape() const { return node_->shape; }
    int dim(int i) const;
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    std::size_t size() const { return node_->value.size(); }

    std::span<const T> values() const { return node_->value; }
    std::span<T> values() { return node_->value; }
    /// Empty span when no gradient has been accumulated.
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> grad() { return node_->grad; }
    T item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    void zero_grad() { node_->grad.clear(); }

    /// Same values, no history.
    Tensor detach() const;

    /// Reverse-mode accumulation from this scalar (seed gradient 1).
    void backward() const;

    /// Throws std::runtime_error naming `what` if any value is NaN or infinite.
    void check_finite(const char* what) const;

    Node<T>& node() const { return *node_; }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

    /// Builds an op output. History is recorded only when grad mode is on and some
    /// input requires a gradient.
    static Tensor make(Shape shape, std::vector<T> values, std::initializer_list<Tensor> inputs,
                       std::function<void(Node<T>&)> backward_fn);
    static Tensor make(Shape shape, std::vector<T> values, const std::vector<Tensor>& inputs,
                       std::function<void(Node<T>&)> backward_fn);

private:
    std::shared_ptr<Node<T>> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace upright::nn
