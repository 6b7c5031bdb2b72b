#include "cste/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cste {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tape::Id Tape::push(Tensor value, std::function<void(Tape&)> back) {
    Node node;
    node.grad = Tensor(value.rows, value.cols, 0.0);
    node.value = std::move(value);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::leaf(Tensor value) { return push(std::move(value)); }

void Tape::backward(Id root) {
    require(root >= 0 && static_cast<std::size_t>(root) < nodes_.size(), "backward: bad root id");
    require(val(root).size() == 1, "backward: root must be scalar");
    grad_mut(root).v[0] = 1.0;
    for (Id id = root; id >= 0; --id) {
        auto& node = nodes_[static_cast<std::size_t>(id)];
        if (node.back) node.back(*this);
    }
}

Tape::Id Tape::matvec(Id m, Id x) {
    const Tensor& mv = val(m);
    const Tensor& xv = val(x);
    require(xv.cols == 1 && mv.cols == xv.rows, "matvec: shape mismatch");
    Tensor out(mv.rows, 1);
    for (int r = 0; r < mv.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < mv.cols; ++c) s += mv.at(r, c) * xv.v[static_cast<std::size_t>(c)];
        out.v[static_cast<std::size_t>(r)] = s;
    }
    Id self = push(std::move(out));
    nodes_.back().back = [self, m, x](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& mv2 = t.val(m);
        const Tensor& xv2 = t.val(x);
        Tensor& gm = t.grad_mut(m);
        Tensor& gx = t.grad_mut(x);
        for (int r = 0; r < mv2.rows; ++r) {
            const double gr = g.v[static_cast<std::size_t>(r)];
            if (gr == 0.0) continue;
            for (int c = 0; c < mv2.cols; ++c) {
                gm.at(r, c) += gr * xv2.v[static_cast<std::size_t>(c)];
                gx.v[static_cast<std::size_t>(c)] += gr * mv2.at(r, c);
            }
        }
    };
    return self;
}

Tape::Id Tape::add(Id a, Id b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    require(av.rows == bv.rows && av.cols == bv.cols, "add: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv.v[i];
    Id self = push(std::move(out));
    nodes_.back().back = [self, a, b](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_mut(a);
        Tensor& gb = t.grad_mut(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i];
            gb.v[i] += g.v[i];
        }
    };
    return self;
}

Tape::Id Tape::concat(Id a, Id b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    require(av.cols == 1 && bv.cols == 1, "concat: expects column vectors");
    const int na = av.rows;
    Tensor out(av.rows + bv.rows, 1);
    std::copy(av.v.begin(), av.v.end(), out.v.begin());
    std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + av.rows);
    Id self = push(std::move(out));
    nodes_.back().back = [self, a, b, na](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_mut(a);
        Tensor& gb = t.grad_mut(b);
        for (int i = 0; i < na; ++i) ga.v[static_cast<std::size_t>(i)] += g.v[static_cast<std::size_t>(i)];
        for (std::size_t i = static_cast<std::size_t>(na); i < g.v.size(); ++i)
            gb.v[i - static_cast<std::size_t>(na)] += g.v[i];
    };
    return self;
}

Tape::Id Tape::relu(Id a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::max(0.0, x);
    Id self = push(std::move(out));
    nodes_.back().back = [self, a](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.val(a);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.v.size(); ++i)
            if (av.v[i] > 0.0) ga.v[i] += g.v[i];
    };
    return self;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
    Tensor out = val(a);
    for (double& x : out.v) x = x > 0.0 ? x : slope * x;
    Id self = push(std::move(out));
    nodes_.back().back = [self, a, slope](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.val(a);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.v.size(); ++i)
            ga.v[i] += g.v[i] * (av.v[i] > 0.0 ? 1.0 : slope);
    };
    return self;
}

Tape::Id Tape::sigmoid(Id a) {
    Tensor out = val(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    Id self = push(std::move(out));
    nodes_.back().back = [self, a](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& ov = t.val(self);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.v.size(); ++i)
            ga.v[i] += g.v[i] * ov.v[i] * (1.0 - ov.v[i]);
    };
    return self;
}

Tape::Id Tape::dot(Id a, Id b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    require(av.size() == bv.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < av.v.size(); ++i) s += av.v[i] * bv.v[i];
    Id self = push(Tensor::scalar(s));
    nodes_.back().back = [self, a, b](Tape& t) {
        const double g = t.grad(self).v[0];
        if (g == 0.0) return;
        const Tensor& av2 = t.val(a);
        const Tensor& bv2 = t.val(b);
        Tensor& ga = t.grad_mut(a);
        Tensor& gb = t.grad_mut(b);
        for (std::size_t i = 0; i < av2.v.size(); ++i) {
            ga.v[i] += g * bv2.v[i];
            gb.v[i] += g * av2.v[i];
        }
    };
    return self;
}

Tape::Id Tape::dot_slice(Id a, int offset, Id x) {
    const Tensor& av = val(a);
    const Tensor& xv = val(x);
    require(offset >= 0 && offset + xv.size() <= av.size(), "dot_slice: out of range");
    double s = 0.0;
    for (int i = 0; i < xv.size(); ++i)
        s += av.v[static_cast<std::size_t>(offset + i)] * xv.v[static_cast<std::size_t>(i)];
    Id self = push(Tensor::scalar(s));
    nodes_.back().back = [self, a, offset, x](Tape& t) {
        const double g = t.grad(self).v[0];
        if (g == 0.0) return;
        const Tensor& av2 = t.val(a);
        const Tensor& xv2 = t.val(x);
        Tensor& ga = t.grad_mut(a);
        Tensor& gx = t.grad_mut(x);
        for (int i = 0; i < xv2.size(); ++i) {
            ga.v[static_cast<std::size_t>(offset + i)] += g * xv2.v[static_cast<std::size_t>(i)];
            gx.v[static_cast<std::size_t>(i)] += g * av2.v[static_cast<std::size_t>(offset + i)];
        }
    };
    return self;
}

Tape::Id Tape::stack(std::span<const Id> scalars) {
    require(!scalars.empty(), "stack: empty input");
    Tensor out(static_cast<int>(scalars.size()), 1);
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        require(val(scalars[i]).size() == 1, "stack: inputs must be scalars");
        out.v[i] = val(scalars[i]).v[0];
    }
    Id self = push(std::move(out));
    std::vector<Id> ids(scalars.begin(), scalars.end());
    nodes_.back().back = [self, ids = std::move(ids)](Tape& t) {
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < ids.size(); ++i)
            t.grad_mut(ids[i]).v[0] += g.v[i];
    };
    return self;
}

Tape::Id Tape::softmax(Id x) {
    const Tensor& xv = val(x);
    require(xv.cols == 1 && xv.rows >= 1, "softmax: expects a column vector");
    Tensor out(xv.rows, 1);
    const double mx = *std::max_element(xv.v.begin(), xv.v.end());
    double z = 0.0;
    for (std::size_t i = 0; i < xv.v.size(); ++i) {
        out.v[i] = std::exp(xv.v[i] - mx);
        z += out.v[i];
    }
    for (double& p : out.v) p /= z;
    Id self = push(std::move(out));
    nodes_.back().back = [self, x](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& p = t.val(self);
        Tensor& gx = t.grad_mut(x);
        double gp = 0.0;
        for (std::size_t i = 0; i < g.v.size(); ++i) gp += g.v[i] * p.v[i];
        for (std::size_t i = 0; i < g.v.size(); ++i)
            gx.v[i] += p.v[i] * (g.v[i] - gp);
    };
    return self;
}

Tape::Id Tape::mul_elem_const(Id x, Tensor c) {
    const Tensor& xv = val(x);
    require(xv.rows == c.rows && xv.cols == c.cols, "mul_elem_const: shape mismatch");
    Tensor out = xv;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= c.v[i];
    Id self = push(std::move(out));
    nodes_.back().back = [self, x, c = std::move(c)](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i] * c.v[i];
    };
    return self;
}

Tape::Id Tape::weighted_sum(Id weights, std::span<const Id> vectors) {
    const Tensor& wv = val(weights);
    require(wv.cols == 1, "weighted_sum: weights must be a column vector");
    require(static_cast<std::size_t>(wv.rows) == vectors.size(), "weighted_sum: count mismatch");
    require(!vectors.empty(), "weighted_sum: empty input");
    const int dim = val(vectors[0]).rows;
    Tensor out(dim, 1);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const Tensor& vi = val(vectors[i]);
        require(vi.cols == 1 && vi.rows == dim, "weighted_sum: vector shape mismatch");
        for (int r = 0; r < dim; ++r)
            out.v[static_cast<std::size_t>(r)] += wv.v[i] * vi.v[static_cast<std::size_t>(r)];
    }
    Id self = push(std::move(out));
    std::vector<Id> ids(vectors.begin(), vectors.end());
    nodes_.back().back = [self, weights, ids = std::move(ids)](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& wv2 = t.val(weights);
        Tensor& gw = t.grad_mut(weights);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const Tensor& vi = t.val(ids[i]);
            Tensor& gv = t.grad_mut(ids[i]);
            double s = 0.0;
            for (std::size_t r = 0; r < g.v.size(); ++r) {
                s += g.v[r] * vi.v[r];
                gv.v[r] += g.v[r] * wv2.v[i];
            }
            gw.v[i] += s;
        }
    };
    return self;
}

Tape::Id Tape::scale(Id a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x *= c;
    Id self = push(std::move(out));
    nodes_.back().back = [self, a, c](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += c * g.v[i];
    };
    return self;
}

Tape::Id Tape::log_at(Id probs, int index, double clamp) {
    const Tensor& pv = val(probs);
    require(index >= 0 && index < pv.size(), "log_at: index out of range");
    const double p = std::max(pv.v[static_cast<std::size_t>(index)], clamp);
    Id self = push(Tensor::scalar(std::log(p)));
    nodes_.back().back = [self, probs, index, clamp](Tape& t) {
        const double g = t.grad(self).v[0];
        const double pi = t.val(probs).v[static_cast<std::size_t>(index)];
        if (pi > clamp)
            t.grad_mut(probs).v[static_cast<std::size_t>(index)] += g / pi;
    };
    return self;
}

Tape::Id Tape::mean(std::span<const Id> scalars) {
    require(!scalars.empty(), "mean: empty input");
    double s = 0.0;
    for (Id id : scalars) {
        require(val(id).size() == 1, "mean: inputs must be scalars");
        s += val(id).v[0];
    }
    const double inv = 1.0 / static_cast<double>(scalars.size());
    Id self = push(Tensor::scalar(s * inv));
    std::vector<Id> ids(scalars.begin(), scalars.end());
    nodes_.back().back = [self, inv, ids = std::move(ids)](Tape& t) {
        const double g = t.grad(self).v[0] * inv;
        for (Id id : ids) t.grad_mut(id).v[0] += g;
    };
    return self;
}

Tape::Id Tape::sum_squares(Id a) {
    const Tensor& av = val(a);
    double s = 0.0;
    for (double x : av.v) s += x * x;
    Id self = push(Tensor::scalar(s));
    nodes_.back().back = [self, a](Tape& t) {
        const double g = t.grad(self).v[0];
        if (g == 0.0) return;
        const Tensor& av2 = t.val(a);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < av2.v.size(); ++i) ga.v[i] += 2.0 * g * av2.v[i];
    };
    return self;
}

}  // namespace cste
