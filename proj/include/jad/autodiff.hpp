#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace jad::ad {

/// Handle to a node on a Tape. Only meaningful for the tape that created it.
struct Var {
    std::uint32_t id = UINT32_MAX;
    bool valid() const { return id != UINT32_MAX; }
};

/// Vector-valued reverse-mode tape.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and backward() is a single reverse sweep. Each node keeps
/// its forward value and a closure that pushes its output gradient onto its
/// inputs. A tape is single-use: build, call backward() once, read gradients.
class Tape {
public:
    using Backprop = std::function<void(Tape&, std::uint32_t self)>;

    Var leaf(std::vector<double> value);
    Var leaf(std::span<const double> value);

    const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const;

    /// Seeds d(out)/d(out) = 1 and propagates. `out` must hold one value.
    void backward(Var out);
    std::span<const double> grad(Var v) const { return nodes_[v.id].grad; }

    std::size_t size() const { return nodes_.size(); }

    // Op-author interface.
    Var push(std::vector<double> value, Backprop backprop);
    const std::vector<double>& value(std::uint32_t id) const { return nodes_[id].value; }
    const std::vector<double>& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
    std::vector<double>& grad_mut(Var v) { return nodes_[v.id].grad; }

private:
    struct Node {
        std::vector<double> value;
        std::vector<double> grad;
        Backprop backprop;
    };
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

// y = W x with W a tape variable of rows*cols entries (row-major).
Var matvec(Tape& t, Var w, Var x, std::size_t rows, std::size_t cols);
// y = W x with W held constant; the span must outlive backward().
Var matvec(Tape& t, std::span<const double> w, Var x, std::size_t rows, std::size_t cols);

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var sum(Tape& t, Var a);

Var leaky_relu(Tape& t, Var u, double alpha);
Var softmax(Tape& t, Var u);

/// -log softmax(logits)[label], computed through a max-shifted log-sum-exp.
Var cross_entropy(Tape& t, Var logits, std::size_t label);
/// sum_i (a_i - target_i)^2
Var squared_error(Tape& t, Var a, std::span<const double> target);

/// Euclidean norm; the subgradient at 0 is taken to be 0.
Var l2_norm(Tape& t, Var a);
/// a / b for single-value nodes.
Var divide(Tape& t, Var a, Var b);
/// max(a, floor) for a single-value node; gradient flows only when a > floor.
Var max_scalar(Tape& t, Var a, double floor);

/// Arbitrary op with one input whose forward value is supplied by the caller
/// and whose vector-Jacobian product is `vjp(g_out, g_in_accumulate)`.
Var custom_unary(Tape& t, Var a, std::vector<double> value,
                 std::function<void(std::span<const double>, std::span<double>)> vjp);

}  // namespace jad::ad
