#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/autograd.hpp"

#include <cmath>
#include <functional>

#include "agebench/rng.hpp"

using namespace agebench;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Central finite differences of a scalar graph against every leaf entry.
void gradcheck(const std::function<Var(Tape&, std::vector<Var>&)>& build,
               std::vector<Tensor> leaves, double tol = 1e-6) {
    Tape tape;
    std::vector<Var> vars;
    for (auto& t : leaves) vars.push_back(tape.leaf(t));
    Var out = build(tape, vars);
    tape.backward(out);

    constexpr double eps = 1e-6;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const Tensor analytic = tape.grad(vars[li]);
        for (std::size_t i = 0; i < leaves[li].size(); ++i) {
            auto eval = [&](double delta) {
                Tape t2;
                std::vector<Var> v2;
                for (std::size_t k = 0; k < leaves.size(); ++k) {
                    Tensor copy = leaves[k];
                    if (k == li) copy.data[i] += delta;
                    v2.push_back(t2.leaf(std::move(copy)));
                }
                return t2.value(build(t2, v2)).data[0];
            };
            const double numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
            CHECK(ad::relative_error(analytic.data[i], numeric) < tol);
        }
    }
}

}  // namespace

TEST_CASE("add, mul, scale gradients") {
    Rng rng(1);
    gradcheck(
        [](Tape& t, std::vector<Var>& v) {
            return t.sum_all(t.scale(t.mul(t.add(v[0], v[1]), v[2]), 1.7));
        },
        {random_tensor(3, 4, rng), random_tensor(3, 4, rng), random_tensor(3, 4, rng)});
}

TEST_CASE("matmul gradients") {
    Rng rng(2);
    gradcheck([](Tape& t, std::vector<Var>& v) { return t.mean_all(t.matmul(v[0], v[1])); },
              {random_tensor(3, 5, rng), random_tensor(5, 2, rng)});
}

TEST_CASE("matmul_nt gradients") {
    Rng rng(3);
    gradcheck(
        [](Tape& t, std::vector<Var>& v) { return t.mean_all(t.matmul_nt(v[0], v[1])); },
        {random_tensor(3, 5, rng), random_tensor(4, 5, rng)});
}

TEST_CASE("activation gradients") {
    Rng rng(4);
    gradcheck(
        [](Tape& t, std::vector<Var>& v) {
            Var a = t.sigmoid(v[0]);
            Var b = t.tanh(v[0]);
            Var c = t.elu(v[0]);
            return t.sum_all(t.mul(t.add(a, b), c));
        },
        {random_tensor(4, 3, rng, 2.0)});
}

TEST_CASE("relu gradient away from the kink") {
    Rng rng(5);
    Tensor x = random_tensor(4, 4, rng, 2.0);
    for (double& v : x.data)
        if (std::abs(v) < 0.05) v = 0.1;  // keep clear of the nondifferentiable point
    gradcheck([](Tape& t, std::vector<Var>& v) { return t.sum_all(t.relu(v[0])); }, {x});
}

TEST_CASE("row and column broadcast gradients") {
    Rng rng(6);
    gradcheck(
        [](Tape& t, std::vector<Var>& v) {
            return t.sum_all(t.mul_col(t.mul_row(t.add_row(v[0], v[1]), v[2]), v[3]));
        },
        {random_tensor(3, 4, rng), random_tensor(1, 4, rng), random_tensor(1, 4, rng),
         random_tensor(3, 1, rng)});
}

TEST_CASE("softmax rows gradient and simplex property") {
    Rng rng(7);
    Tensor x = random_tensor(4, 5, rng, 2.0);
    {
        Tape tape;
        Var v = tape.leaf(x);
        Var s = tape.softmax_rows(v);
        const Tensor& val = tape.value(s);
        for (std::size_t i = 0; i < val.rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < val.cols; ++j) {
                CHECK(val(i, j) >= 0.0);
                sum += val(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    Rng rng2(8);
    Tensor w = random_tensor(5, 1, rng2);
    gradcheck(
        [&](Tape& t, std::vector<Var>& v) {
            return t.sum_all(t.matmul(t.softmax_rows(v[0]), v[1]));
        },
        {x, w});
}

TEST_CASE("masked softmax zeroes masked positions") {
    Tape tape;
    Tensor x(2, 3, 0.0);
    Tensor mask(2, 3, 0.0);
    mask(0, 2) = -1e9;
    Var s = tape.softmax_rows(tape.leaf(x), &mask);
    const Tensor& v = tape.value(s);
    CHECK(v(0, 2) == doctest::Approx(0.0).epsilon(1e-30));
    CHECK(v(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(v(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("layernorm gradient and statistics") {
    Rng rng(9);
    Tensor x = random_tensor(3, 6, rng, 2.0);
    {
        Tape tape;
        Var y = tape.layernorm_rows(tape.leaf(x));
        const Tensor& v = tape.value(y);
        for (std::size_t i = 0; i < v.rows; ++i) {
            double mean = 0.0, var = 0.0;
            for (std::size_t j = 0; j < v.cols; ++j) mean += v(i, j);
            mean /= double(v.cols);
            for (std::size_t j = 0; j < v.cols; ++j)
                var += (v(i, j) - mean) * (v(i, j) - mean);
            var /= double(v.cols);
            CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
            CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    Rng rng2(10);
    Tensor w = random_tensor(6, 1, rng2);
    gradcheck(
        [&](Tape& t, std::vector<Var>& v) {
            return t.sum_all(t.matmul(t.layernorm_rows(v[0]), v[1]));
        },
        {x, w},
        1e-5);
}

TEST_CASE("concat and slice gradients") {
    Rng rng(11);
    gradcheck(
        [](Tape& t, std::vector<Var>& v) {
            Var cat = t.concat_rows({v[0], v[1]});
            Var cols = t.concat_cols({v[0], v[1]});
            Var s1 = t.slice_rows(cat, 1, 3);
            Var s2 = t.slice_cols(cols, 1, 5);
            return t.add(t.sum_all(s1), t.sum_all(s2));
        },
        {random_tensor(2, 3, rng), random_tensor(2, 3, rng)});
}

TEST_CASE("gradients accumulate when a var is reused") {
    Tape tape;
    Tensor x(1, 1);
    x.data[0] = 3.0;
    Var v = tape.leaf(x);
    Var y = tape.add(tape.mul(v, v), v);  // x^2 + x -> dy/dx = 2x + 1 = 7
    tape.backward(tape.sum_all(y));
    CHECK(tape.grad(v).data[0] == doctest::Approx(7.0));
}
