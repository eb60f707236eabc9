#include "jad/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jad/error.hpp"

namespace jad::ad {

Var Tape::leaf(std::vector<double> value) { return push(std::move(value), nullptr); }

Var Tape::leaf(std::span<const double> value) { return leaf(std::vector<double>(value.begin(), value.end())); }

Var Tape::push(std::vector<double> value, Backprop backprop) {
    nodes_.push_back(Node{std::move(value), {}, std::move(backprop)});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

double Tape::scalar(Var v) const {
    const auto& val = nodes_[v.id].value;
    if (val.size() != 1) throw DimensionError("expected a scalar node, got length " + std::to_string(val.size()));
    return val[0];
}

void Tape::backward(Var out) {
    if (consumed_) throw Error("tape already differentiated");
    if (nodes_[out.id].value.size() != 1) throw DimensionError("backward() needs a scalar output");
    consumed_ = true;
    for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
    nodes_[out.id].grad[0] = 1.0;
    for (std::uint32_t id = out.id + 1; id-- > 0;) {
        if (nodes_[id].backprop) nodes_[id].backprop(*this, id);
    }
}

namespace {

void require_same(const Tape& t, Var a, Var b, const char* op) {
    if (t.value(a).size() != t.value(b).size()) {
        throw DimensionError(std::string(op) + ": operand lengths differ");
    }
}

}  // namespace

Var matvec(Tape& t, Var w, Var x, std::size_t rows, std::size_t cols) {
    const auto& W = t.value(w);
    const auto& xv = t.value(x);
    if (W.size() != rows * cols || xv.size() != cols) throw DimensionError("matvec: shape mismatch");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = W.data() + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * xv[c];
        y[r] = s;
    }
    return t.push(std::move(y), [w, x, rows, cols](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        const auto& Wv = tp.value(w);
        const auto& xval = tp.value(x);
        auto& gx = tp.grad_mut(x);
        auto& gw = tp.grad_mut(w);
        for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            const double* row = Wv.data() + r * cols;
            double* grow = gw.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                gx[c] += row[c] * gr;
                grow[c] += gr * xval[c];
            }
        }
    });
}

Var matvec(Tape& t, std::span<const double> w, Var x, std::size_t rows, std::size_t cols) {
    const auto& xv = t.value(x);
    if (w.size() != rows * cols || xv.size() != cols) throw DimensionError("matvec: shape mismatch");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w.data() + r * cols;
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * xv[c];
        y[r] = s;
    }
    return t.push(std::move(y), [w, x, rows, cols](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        auto& gx = tp.grad_mut(x);
        for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            const double* row = w.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gx[c] += row[c] * gr;
        }
    });
}

Var add(Tape& t, Var a, Var b) {
    require_same(t, a, b, "add");
    std::vector<double> y = t.value(a);
    const auto& bv = t.value(b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    return t.push(std::move(y), [a, b](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = tp.grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    });
}

Var sub(Tape& t, Var a, Var b) {
    require_same(t, a, b, "sub");
    std::vector<double> y = t.value(a);
    const auto& bv = t.value(b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
    return t.push(std::move(y), [a, b](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = tp.grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
}

Var scale(Tape& t, Var a, double c) {
    std::vector<double> y = t.value(a);
    for (auto& v : y) v *= c;
    return t.push(std::move(y), [a, c](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
}

Var sum(Tape& t, Var a) {
    double s = 0.0;
    for (double v : t.value(a)) s += v;
    return t.push({s}, [a](Tape& tp, std::uint32_t self) {
        const double g = tp.grad_of(self)[0];
        for (auto& v : tp.grad_mut(a)) v += g;
    });
}

Var leaky_relu(Tape& t, Var u, double alpha) {
    std::vector<double> y = t.value(u);
    for (auto& v : y) v = v >= 0.0 ? v : alpha * v;
    return t.push(std::move(y), [u, alpha](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        const auto& uv = tp.value(u);
        auto& gu = tp.grad_mut(u);
        for (std::size_t i = 0; i < g.size(); ++i) gu[i] += uv[i] >= 0.0 ? g[i] : alpha * g[i];
    });
}

Var softmax(Tape& t, Var u) {
    const auto& uv = t.value(u);
    if (uv.empty()) throw DimensionError("softmax of empty vector");
    const double m = *std::max_element(uv.begin(), uv.end());
    std::vector<double> p(uv.size());
    double z = 0.0;
    for (std::size_t i = 0; i < uv.size(); ++i) z += (p[i] = std::exp(uv[i] - m));
    for (auto& v : p) v /= z;
    return t.push(std::move(p), [u](Tape& tp, std::uint32_t self) {
        const auto& g = tp.grad_of(self);
        const auto& pv = tp.value(self);
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * pv[i];
        auto& gu = tp.grad_mut(u);
        for (std::size_t i = 0; i < g.size(); ++i) gu[i] += pv[i] * (g[i] - dot);
    });
}

Var cross_entropy(Tape& t, Var logits, std::size_t label) {
    const auto& z = t.value(logits);
    if (label >= z.size()) throw DimensionError("cross_entropy: label out of range");
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    return t.push({lse - z[label]}, [logits, label, lse](Tape& tp, std::uint32_t self) {
        const double g = tp.grad_of(self)[0];
        const auto& zv = tp.value(logits);
        auto& gz = tp.grad_mut(logits);
        for (std::size_t i = 0; i < zv.size(); ++i) {
            const double p = std::exp(zv[i] - lse);
            gz[i] += g * (p - (i == label ? 1.0 : 0.0));
        }
    });
}

Var squared_error(Tape& t, Var a, std::span<const double> target) {
    const auto& av = t.value(a);
    if (av.size() != target.size()) throw DimensionError("squared_error: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - target[i]) * (av[i] - target[i]);
    std::vector<double> tgt(target.begin(), target.end());
    return t.push({s}, [a, tgt = std::move(tgt)](Tape& tp, std::uint32_t self) {
        const double g = tp.grad_of(self)[0];
        const auto& v = tp.value(a);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < v.size(); ++i) ga[i] += 2.0 * g * (v[i] - tgt[i]);
    });
}

Var l2_norm(Tape& t, Var a) {
    double s = 0.0;
    for (double v : t.value(a)) s += v * v;
    const double n = std::sqrt(s);
    return t.push({n}, [a, n](Tape& tp, std::uint32_t self) {
        if (n == 0.0) return;
        const double g = tp.grad_of(self)[0] / n;
        const auto& v = tp.value(a);
        auto& ga = tp.grad_mut(a);
        for (std::size_t i = 0; i < v.size(); ++i) ga[i] += g * v[i];
    });
}

Var divide(Tape& t, Var a, Var b) {
    const double av = t.scalar(a);
    const double bv = t.scalar(b);
    if (bv == 0.0) throw NumericError("divide: zero denominator");
    return t.push({av / bv}, [a, b, av, bv](Tape& tp, std::uint32_t self) {
        const double g = tp.grad_of(self)[0];
        tp.grad_mut(a)[0] += g / bv;
        tp.grad_mut(b)[0] -= g * av / (bv * bv);
    });
}

Var max_scalar(Tape& t, Var a, double floor) {
    const double av = t.scalar(a);
    const bool pass = av > floor;
    return t.push({pass ? av : floor}, [a, pass](Tape& tp, std::uint32_t self) {
        if (pass) tp.grad_mut(a)[0] += tp.grad_of(self)[0];
    });
}

Var custom_unary(Tape& t, Var a, std::vector<double> value,
                 std::function<void(std::span<const double>, std::span<double>)> vjp) {
    return t.push(std::move(value), [a, vjp = std::move(vjp)](Tape& tp, std::uint32_t self) {
        vjp(tp.grad_of(self), tp.grad_mut(a));
    });
}

}  // namespace jad::ad
