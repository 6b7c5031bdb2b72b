#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cste/autodiff.hpp"

using namespace cste;

namespace {

// Central finite differences of a scalar function of one leaf tensor,
// compared against the tape gradient.
void check_gradient(const Tensor& input,
                    const std::function<Tape::Id(Tape&, Tape::Id)>& build, double step = 1e-6,
                    double tol = 1e-6) {
    Tape tape;
    const Tape::Id leaf = tape.leaf(input);
    const Tape::Id root = build(tape, leaf);
    REQUIRE(tape.val(root).size() == 1);
    tape.backward(root);
    const Tensor analytic = tape.grad(leaf);

    for (int i = 0; i < input.size(); ++i) {
        Tensor up = input, down = input;
        up[static_cast<std::size_t>(i)] += step;
        down[static_cast<std::size_t>(i)] -= step;
        Tape tu, td;
        const double fu = tu.val(build(tu, tu.leaf(up)))[0];
        const double fd = td.val(build(td, td.leaf(down)))[0];
        const double fd_grad = (fu - fd) / (2 * step);
        CHECK(analytic[static_cast<std::size_t>(i)] ==
              doctest::Approx(fd_grad).epsilon(tol));
    }
}

Tensor random_vec(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Tensor t(n, 1);
    for (auto& x : t.v) x = dist(rng);
    return t;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("values compute correctly") {
    Tape t;
    Tensor w(2, 2);
    w.v = {1.0, 2.0, 3.0, 4.0};
    const auto wm = t.leaf(w);
    const auto x = t.leaf(Tensor::vec({1.0, -1.0}));
    const auto y = t.matvec(wm, x);
    CHECK(t.val(y).v == std::vector<double>{-1.0, -1.0});

    const auto r = t.relu(y);
    CHECK(t.val(r).v == std::vector<double>{0.0, 0.0});

    const auto l = t.leaky_relu(y, 0.2);
    CHECK(t.val(l).v == std::vector<double>{-0.2, -0.2});

    const auto s = t.sigmoid(t.leaf(Tensor::scalar(0.0)));
    CHECK(t.val(s)[0] == 0.5);
}

TEST_CASE("softmax is shift-invariant and normalized") {
    Tape t;
    const auto a = t.softmax(t.leaf(Tensor::vec({1.0, 2.0, 3.0})));
    const auto b = t.softmax(t.leaf(Tensor::vec({1001.0, 1002.0, 1003.0})));
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        CHECK(t.val(a)[static_cast<std::size_t>(i)] ==
              doctest::Approx(t.val(b)[static_cast<std::size_t>(i)]).epsilon(1e-12));
        sum += t.val(a)[static_cast<std::size_t>(i)];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matvec gradient") {
    Tensor w(3, 4);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& x : w.v) x = dist(rng);
    const Tensor x = random_vec(4, 2);

    // d/dw of sum(relu(Wx)) via a fixed x leaf
    check_gradient(w, [&](Tape& t, Tape::Id leaf) {
        const auto xv = t.leaf(x);
        const auto y = t.relu(t.matvec(leaf, xv));
        return t.sum_squares(y);
    });
    // d/dx with fixed W
    check_gradient(x, [&](Tape& t, Tape::Id leaf) {
        const auto wv = t.leaf(w);
        return t.sum_squares(t.relu(t.matvec(wv, leaf)));
    });
}

TEST_CASE("elementwise op gradients") {
    const Tensor x = random_vec(5, 3);
    check_gradient(x, [](Tape& t, Tape::Id leaf) { return t.sum_squares(t.sigmoid(leaf)); });
    check_gradient(x, [](Tape& t, Tape::Id leaf) {
        return t.sum_squares(t.leaky_relu(leaf, 0.2));
    });
    check_gradient(x, [](Tape& t, Tape::Id leaf) {
        return t.dot(t.softmax(leaf), t.leaf(Tensor::vec({1.0, -2.0, 3.0, 0.5, -1.5})));
    });
}

TEST_CASE("concat, stack, weighted_sum gradients") {
    const Tensor x = random_vec(3, 4);
    const Tensor other = random_vec(3, 5);
    check_gradient(x, [&](Tape& t, Tape::Id leaf) {
        const auto o = t.leaf(other);
        return t.sum_squares(t.concat(leaf, o));
    });
    check_gradient(x, [&](Tape& t, Tape::Id leaf) {
        // route the leaf through both the weights and one summand
        const auto w = t.softmax(leaf);
        const std::vector<Tape::Id> vs{leaf, t.leaf(random_vec(3, 6)), t.leaf(random_vec(3, 7))};
        return t.sum_squares(t.weighted_sum(w, vs));
    });
    check_gradient(x, [](Tape& t, Tape::Id leaf) {
        const std::vector<Tape::Id> parts{t.dot(leaf, leaf), t.sum_squares(leaf)};
        const auto stacked = t.stack(parts);
        return t.mean(std::vector<Tape::Id>{t.dot(stacked, stacked)});
    });
}

TEST_CASE("dot_slice and log_at gradients") {
    const Tensor a = random_vec(6, 8);
    const Tensor x = random_vec(3, 9);
    check_gradient(a, [&](Tape& t, Tape::Id leaf) {
        return t.dot_slice(leaf, 2, t.leaf(x));
    });
    check_gradient(x, [&](Tape& t, Tape::Id leaf) {
        return t.dot_slice(t.leaf(a), 1, leaf);
    });

    const Tensor probs = Tensor::vec({0.2, 0.5, 0.3});
    check_gradient(probs, [](Tape& t, Tape::Id leaf) {
        return t.scale(t.log_at(leaf, 1, 1e-12), -1.0);
    });
}

TEST_CASE("log_at clamps vanishing probabilities") {
    Tape t;
    const auto p = t.leaf(Tensor::vec({0.0, 1.0}));
    const auto l = t.log_at(p, 0, 1e-12);
    CHECK(t.val(l)[0] == doctest::Approx(std::log(1e-12)));
    t.backward(l);
    // a clamped entry passes no gradient
    CHECK(t.grad(p)[0] == 0.0);
}

TEST_CASE("mul_elem_const and scale") {
    const Tensor x = random_vec(4, 10);
    Tensor mask(4, 1);
    mask.v = {1.0, 0.0, 2.0, 1.0};
    check_gradient(x, [&](Tape& t, Tape::Id leaf) {
        return t.sum_squares(t.mul_elem_const(leaf, mask));
    });
    check_gradient(x, [](Tape& t, Tape::Id leaf) {
        return t.scale(t.sum_squares(leaf), 0.37);
    });
}

TEST_CASE("gradients accumulate across shared subexpressions") {
    const Tensor x = random_vec(3, 11);
    check_gradient(x, [](Tape& t, Tape::Id leaf) {
        const auto s = t.sigmoid(leaf);
        const auto a = t.dot(s, s);
        const auto b = t.sum_squares(s);
        return t.add(t.scale(a, 0.5), t.scale(b, 2.0));
    });
}

TEST_CASE("backward touches only reachable nodes") {
    Tape t;
    const auto a = t.leaf(Tensor::vec({1.0, 2.0}));
    const auto b = t.leaf(Tensor::vec({3.0, 4.0}));
    const auto unused = t.sum_squares(b);
    (void)unused;
    const auto root = t.sum_squares(a);
    t.backward(root);
    CHECK(t.grad(b).v == std::vector<double>{0.0, 0.0});
    CHECK(t.grad(a).v == std::vector<double>{2.0, 4.0});
}

}
