#include "agebench/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "agebench/kernels.hpp"

namespace agebench::ad {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> backprop) {
    Node n;
    n.grad = Tensor(value.rows, value.cols);
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr); }
Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::add(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    check_same_shape(value_ref(ia), value_ref(ib), "add");
    Tensor out = value_ref(ia);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += value_ref(ib).data[i];
    return push(std::move(out), wants(ia) || wants(ib), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ia).data[i] += g.data[i];
        if (t.wants(ib))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ib).data[i] += g.data[i];
    });
}

Var Tape::sub(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    check_same_shape(value_ref(ia), value_ref(ib), "sub");
    Tensor out = value_ref(ia);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= value_ref(ib).data[i];
    return push(std::move(out), wants(ia) || wants(ib), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ia).data[i] += g.data[i];
        if (t.wants(ib))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ib).data[i] -= g.data[i];
    });
}

Var Tape::mul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    check_same_shape(value_ref(ia), value_ref(ib), "mul");
    Tensor out = value_ref(ia);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= value_ref(ib).data[i];
    return push(std::move(out), wants(ia) || wants(ib), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i)
                t.grad_ref(ia).data[i] += g.data[i] * t.value_ref(ib).data[i];
        if (t.wants(ib))
            for (std::size_t i = 0; i < g.size(); ++i)
                t.grad_ref(ib).data[i] += g.data[i] * t.value_ref(ia).data[i];
    });
}

Var Tape::scale(Var a, double c) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    for (double& v : out.data) v *= c;
    return push(std::move(out), wants(ia), [ia, c](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ia).data[i] += c * g.data[i];
    });
}

Var Tape::add_row(Var a, Var row) {
    const int ia = check(a), ir = check(row);
    const Tensor& av = value_ref(ia);
    const Tensor& rv = value_ref(ir);
    if (rv.rows != 1 || rv.cols != av.cols)
        throw std::invalid_argument("add_row: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t j = 0; j < av.cols; ++j) out(i, j) += rv(0, j);
    return push(std::move(out), wants(ia) || wants(ir), [ia, ir](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i) t.grad_ref(ia).data[i] += g.data[i];
        if (t.wants(ir)) {
            Tensor& rg = t.grad_ref(ir);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) rg(0, j) += g(i, j);
        }
    });
}

Var Tape::mul_row(Var a, Var row) {
    const int ia = check(a), ir = check(row);
    const Tensor& av = value_ref(ia);
    const Tensor& rv = value_ref(ir);
    if (rv.rows != 1 || rv.cols != av.cols)
        throw std::invalid_argument("mul_row: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t j = 0; j < av.cols; ++j) out(i, j) *= rv(0, j);
    return push(std::move(out), wants(ia) || wants(ir), [ia, ir](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av2 = t.value_ref(ia);
        const Tensor& rv2 = t.value_ref(ir);
        if (t.wants(ia)) {
            Tensor& ag = t.grad_ref(ia);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) ag(i, j) += g(i, j) * rv2(0, j);
        }
        if (t.wants(ir)) {
            Tensor& rg = t.grad_ref(ir);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) rg(0, j) += g(i, j) * av2(i, j);
        }
    });
}

Var Tape::matmul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& av = value_ref(ia);
    const Tensor& bv = value_ref(ib);
    if (av.cols != bv.rows) throw std::invalid_argument("matmul: shape mismatch");
    Tensor out(av.rows, bv.cols);
    kernels::matmul(av.data.data(), bv.data.data(), out.data.data(), av.rows, av.cols,
                    bv.cols);
    return push(std::move(out), wants(ia) || wants(ib), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av2 = t.value_ref(ia);
        const Tensor& bv2 = t.value_ref(ib);
        if (t.wants(ia)) {
            Tensor tmp(av2.rows, av2.cols);
            kernels::matmul_nt(g.data.data(), bv2.data.data(), tmp.data.data(), g.rows,
                               g.cols, bv2.rows);
            Tensor& ag = t.grad_ref(ia);
            for (std::size_t i = 0; i < tmp.size(); ++i) ag.data[i] += tmp.data[i];
        }
        if (t.wants(ib)) {
            Tensor tmp(bv2.rows, bv2.cols);
            kernels::matmul_tn(av2.data.data(), g.data.data(), tmp.data.data(), av2.cols,
                               av2.rows, g.cols);
            Tensor& bg = t.grad_ref(ib);
            for (std::size_t i = 0; i < tmp.size(); ++i) bg.data[i] += tmp.data[i];
        }
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& av = value_ref(ia);
    const Tensor& bv = value_ref(ib);
    if (av.cols != bv.cols) throw std::invalid_argument("matmul_nt: shape mismatch");
    Tensor out(av.rows, bv.rows);
    kernels::matmul_nt(av.data.data(), bv.data.data(), out.data.data(), av.rows, av.cols,
                       bv.rows);
    return push(std::move(out), wants(ia) || wants(ib), [ia, ib](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av2 = t.value_ref(ia);
        const Tensor& bv2 = t.value_ref(ib);
        if (t.wants(ia)) {
            Tensor tmp(av2.rows, av2.cols);
            kernels::matmul(g.data.data(), bv2.data.data(), tmp.data.data(), g.rows, g.cols,
                            bv2.cols);
            Tensor& ag = t.grad_ref(ia);
            for (std::size_t i = 0; i < tmp.size(); ++i) ag.data[i] += tmp.data[i];
        }
        if (t.wants(ib)) {
            Tensor tmp(bv2.rows, bv2.cols);
            kernels::matmul_tn(g.data.data(), av2.data.data(), tmp.data.data(), g.cols,
                               g.rows, av2.cols);
            Tensor& bg = t.grad_ref(ib);
            for (std::size_t i = 0; i < tmp.size(); ++i) bg.data[i] += tmp.data[i];
        }
    });
}

Var Tape::sigmoid(Var a) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(out), wants(ia), [ia](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i)
                t.grad_ref(ia).data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    });
}

Var Tape::tanh(Var a) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    for (double& v : out.data) v = std::tanh(v);
    return push(std::move(out), wants(ia), [ia](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i)
                t.grad_ref(ia).data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    });
}

Var Tape::elu(Var a, double alpha) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    for (double& v : out.data) v = v > 0.0 ? v : alpha * std::expm1(v);
    return push(std::move(out), wants(ia), [ia, alpha](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.value_ref(ia);
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double d = x.data[i] > 0.0 ? 1.0 : alpha * std::exp(x.data[i]);
                t.grad_ref(ia).data[i] += g.data[i] * d;
            }
    });
}

Var Tape::relu(Var a) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    for (double& v : out.data) v = std::max(0.0, v);
    return push(std::move(out), wants(ia), [ia](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.value_ref(ia);
        if (t.wants(ia))
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x.data[i] > 0.0) t.grad_ref(ia).data[i] += g.data[i];
    });
}

Var Tape::softmax_rows(Var a, const Tensor* mask) {
    const int ia = check(a);
    Tensor out = value_ref(ia);
    if (mask) check_same_shape(out, *mask, "softmax mask");
    for (std::size_t i = 0; i < out.rows; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < out.cols; ++j) {
            if (mask) out(i, j) += (*mask)(i, j);
            mx = std::max(mx, out(i, j));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < out.cols; ++j) {
            out(i, j) = std::exp(out(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) /= sum;
    }
    return push(std::move(out), wants(ia), [ia](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& s = t.nodes_[self].value;
        if (!t.wants(ia)) return;
        Tensor& ag = t.grad_ref(ia);
        for (std::size_t i = 0; i < s.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < s.cols; ++j) dot += g(i, j) * s(i, j);
            for (std::size_t j = 0; j < s.cols; ++j) ag(i, j) += s(i, j) * (g(i, j) - dot);
        }
    });
}

Var Tape::layernorm_rows(Var a, double eps) {
    const int ia = check(a);
    const Tensor& x = value_ref(ia);
    Tensor out(x.rows, x.cols);
    Tensor inv_sigma(x.rows, 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mu += x(i, j);
        mu /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(x.cols);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma(i, 0) = is;
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - mu) * is;
    }
    return push(std::move(out), wants(ia), [ia, inv_sigma](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        if (!t.wants(ia)) return;
        Tensor& ag = t.grad_ref(ia);
        const double n = static_cast<double>(y.cols);
        for (std::size_t i = 0; i < y.rows; ++i) {
            double g_mean = 0.0, gy_mean = 0.0;
            for (std::size_t j = 0; j < y.cols; ++j) {
                g_mean += g(i, j);
                gy_mean += g(i, j) * y(i, j);
            }
            g_mean /= n;
            gy_mean /= n;
            for (std::size_t j = 0; j < y.cols; ++j)
                ag(i, j) += inv_sigma(i, 0) * (g(i, j) - g_mean - y(i, j) * gy_mean);
        }
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
    std::vector<int> ids;
    std::size_t rows = 0;
    const std::size_t cols = value_ref(check(parts[0])).cols;
    bool any_grad = false;
    for (Var v : parts) {
        const int id = check(v);
        if (value_ref(id).cols != cols)
            throw std::invalid_argument("concat_rows: column mismatch");
        rows += value_ref(id).rows;
        any_grad = any_grad || wants(id);
        ids.push_back(id);
    }
    Tensor out(rows, cols);
    std::size_t r = 0;
    for (int id : ids) {
        const Tensor& v = value_ref(id);
        std::copy(v.data.begin(), v.data.end(), out.data.begin() + r * cols);
        r += v.rows;
    }
    return push(std::move(out), any_grad, [ids, cols](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        std::size_t r0 = 0;
        for (int id : ids) {
            const std::size_t nr = t.value_ref(id).rows;
            if (t.wants(id)) {
                Tensor& pg = t.grad_ref(id);
                for (std::size_t i = 0; i < nr * cols; ++i)
                    pg.data[i] += g.data[r0 * cols + i];
            }
            r0 += nr;
        }
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
    std::vector<int> ids;
    std::size_t cols = 0;
    const std::size_t rows = value_ref(check(parts[0])).rows;
    bool any_grad = false;
    for (Var v : parts) {
        const int id = check(v);
        if (value_ref(id).rows != rows)
            throw std::invalid_argument("concat_cols: row mismatch");
        cols += value_ref(id).cols;
        any_grad = any_grad || wants(id);
        ids.push_back(id);
    }
    Tensor out(rows, cols);
    std::size_t c = 0;
    for (int id : ids) {
        const Tensor& v = value_ref(id);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < v.cols; ++j) out(i, c + j) = v(i, j);
        c += v.cols;
    }
    return push(std::move(out), any_grad, [ids](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        std::size_t c0 = 0;
        for (int id : ids) {
            const std::size_t nc = t.value_ref(id).cols;
            if (t.wants(id)) {
                Tensor& pg = t.grad_ref(id);
                for (std::size_t i = 0; i < g.rows; ++i)
                    for (std::size_t j = 0; j < nc; ++j) pg(i, j) += g(i, c0 + j);
            }
            c0 += nc;
        }
    });
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
    const int ia = check(a);
    const Tensor& v = value_ref(ia);
    if (c0 >= c1 || c1 > v.cols) throw std::invalid_argument("slice_cols: bad range");
    Tensor out(v.rows, c1 - c0);
    for (std::size_t i = 0; i < v.rows; ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = v(i, j);
    return push(std::move(out), wants(ia), [ia, c0](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (!t.wants(ia)) return;
        Tensor& ag = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ag(i, c0 + j) += g(i, j);
    });
}

Var Tape::mul_col(Var a, Var col) {
    const int ia = check(a), ic = check(col);
    const Tensor& av = value_ref(ia);
    const Tensor& cv = value_ref(ic);
    if (cv.cols != 1 || cv.rows != av.rows)
        throw std::invalid_argument("mul_col: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t j = 0; j < av.cols; ++j) out(i, j) *= cv(i, 0);
    return push(std::move(out), wants(ia) || wants(ic), [ia, ic](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av2 = t.value_ref(ia);
        const Tensor& cv2 = t.value_ref(ic);
        if (t.wants(ia)) {
            Tensor& ag = t.grad_ref(ia);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) ag(i, j) += g(i, j) * cv2(i, 0);
        }
        if (t.wants(ic)) {
            Tensor& cg = t.grad_ref(ic);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) cg(i, 0) += g(i, j) * av2(i, j);
        }
    });
}

Var Tape::slice_rows(Var a, std::size_t r0, std::size_t r1) {
    const int ia = check(a);
    const Tensor& v = value_ref(ia);
    if (r0 >= r1 || r1 > v.rows) throw std::invalid_argument("slice_rows: bad range");
    Tensor out(r1 - r0, v.cols);
    std::copy(v.data.begin() + r0 * v.cols, v.data.begin() + r1 * v.cols, out.data.begin());
    return push(std::move(out), wants(ia), [ia, r0](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (!t.wants(ia)) return;
        Tensor& ag = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ag.data[r0 * ag.cols + i] += g.data[i];
    });
}

Var Tape::sum_all(Var a) {
    const int ia = check(a);
    double s = 0.0;
    for (double v : value_ref(ia).data) s += v;
    Tensor out(1, 1);
    out.data[0] = s;
    return push(std::move(out), wants(ia), [ia](Tape& t, int self) {
        const double g = t.nodes_[self].grad.data[0];
        if (t.wants(ia))
            for (double& v : t.grad_ref(ia).data) v += g;
    });
}

Var Tape::mean_all(Var a) {
    const int ia = check(a);
    const double n = static_cast<double>(value_ref(ia).size());
    double s = 0.0;
    for (double v : value_ref(ia).data) s += v;
    Tensor out(1, 1);
    out.data[0] = s / n;
    return push(std::move(out), wants(ia), [ia, n](Tape& t, int self) {
        const double g = t.nodes_[self].grad.data[0] / n;
        if (t.wants(ia))
            for (double& v : t.grad_ref(ia).data) v += g;
    });
}

void Tape::backward(Var scalar) {
    const int id = check(scalar);
    if (nodes_[id].value.size() != 1)
        throw std::invalid_argument("backward: output must be scalar");
    nodes_[id].grad.data[0] = 1.0;
    for (int i = id; i >= 0; --i)
        if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
}

void Tape::clear() { nodes_.clear(); }

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

}  // namespace agebench::ad
