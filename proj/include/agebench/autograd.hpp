#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace agebench::ad {

/// Row-major dense tensor of doubles (matrices and row vectors).
struct Tensor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::size_t size() const { return data.size(); }
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/**
 * Tape-based reverse-mode differentiation over tensors. Build a graph by
 * calling ops, then backward(scalar_var) accumulates gradients into every
 * node. Parameters enter through leaf(); their gradients are read back with
 * grad().
 */
class Tape {
public:
    Var leaf(Tensor value);
    /// Leaf that requires no gradient (inputs, masks).
    Var constant(Tensor value);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                  // elementwise
    Var scale(Var a, double c);
    Var add_row(Var a, Var row);            // broadcast 1 x n over m x n
    Var mul_row(Var a, Var row);            // broadcast multiply
    Var matmul(Var a, Var b);               // a[m x k] * b[k x n]
    Var matmul_nt(Var a, Var b);            // a[m x k] * b[n x k]^T
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var elu(Var a, double alpha = 1.0);
    Var relu(Var a);
    /// Row-wise softmax; optional additive mask applied to the logits.
    Var softmax_rows(Var a, const Tensor* mask = nullptr);
    /// Row-wise mean-0 variance-1 normalization (no affine).
    Var layernorm_rows(Var a, double eps = 1e-5);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);
    Var slice_rows(Var a, std::size_t r0, std::size_t r1);
    Var slice_cols(Var a, std::size_t c0, std::size_t c1);
    Var mul_col(Var a, Var col);            // broadcast m x 1 over m x n
    Var sum_all(Var a);
    Var mean_all(Var a);

    void backward(Var scalar);
    void clear();
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        std::function<void(Tape&, int)> backprop;  // empty for leaves/constants
    };

    int check(Var v) const {
        if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("autograd: invalid var");
        return v.id;
    }
    Var push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> backprop);
    Tensor& grad_ref(int id) { return nodes_[id].grad; }
    const Tensor& value_ref(int id) const { return nodes_[id].value; }
    bool wants(int id) const { return nodes_[id].needs_grad; }

    std::vector<Node> nodes_;
};

/// Central finite-difference check utility shared by the TFT tests.
double relative_error(double a, double b);

}  // namespace agebench::ad
