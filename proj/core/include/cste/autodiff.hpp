#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cste {

/// Dense row-major matrix; column vectors have cols == 1, scalars are 1x1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    static Tensor vec(std::vector<double> values) {
        Tensor t;
        t.rows = static_cast<int>(values.size());
        t.cols = 1;
        t.v = std::move(values);
        return t;
    }
    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.v[0] = x;
        return t;
    }

    int size() const { return rows * cols; }
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool operator==(const Tensor&) const = default;
};

/// Append-only computation tape for reverse-mode differentiation. Node ids
/// are handles into the tape; every op's operands precede it, so walking ids
/// in reverse is a valid topological order for backprop.
class Tape {
public:
    using Id = int;

    Id leaf(Tensor value);

    const Tensor& val(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    /// Backpropagates from a scalar root: seeds d root/d root = 1 and applies
    /// each node's backward rule in reverse creation order.
    void backward(Id root);

    std::size_t size() const { return nodes_.size(); }

    // ---- ops ---------------------------------------------------------

    Id matvec(Id m, Id x);                      // (r x c) * (c x 1)
    Id add(Id a, Id b);                         // same shape
    Id concat(Id a, Id b);                      // column vectors
    Id relu(Id a);
    Id leaky_relu(Id a, double slope);
    Id sigmoid(Id a);
    Id dot(Id a, Id b);                         // vectors, same length
    Id dot_slice(Id a, int offset, Id x);       // dot(a[offset .. offset+len(x)), x)
    Id stack(std::span<const Id> scalars);      // n scalars -> n x 1
    Id softmax(Id x);                           // column vector, max-shifted
    Id mul_elem_const(Id x, Tensor c);          // elementwise by a constant tensor
    Id weighted_sum(Id weights, std::span<const Id> vectors);  // sum_i w_i * v_i
    Id scale(Id a, double c);
    Id log_at(Id probs, int index, double clamp);  // log(max(p[index], clamp))
    Id mean(std::span<const Id> scalars);
    Id sum_squares(Id a);                       // scalar sum of squares

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> back;
    };

    Id push(Tensor value, std::function<void(Tape&)> back = {});
    Tensor& grad_mut(Id id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

}  // namespace cste
