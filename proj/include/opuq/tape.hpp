#pragma once

#include <cstdint>
#include <vector>

#include "opuq/dense.hpp"

namespace opuq {

using NodeId = std::int32_t;

/// Reverse-mode tape over matrix-valued nodes. The tape is rebuilt every
/// forward pass; reset() keeps buffers alive so a repeated graph reuses its
/// allocations. Coverage is the minimum needed by the networks here: affine
/// layers, leaky-relu, rowwise inner products, elementwise arithmetic and a
/// mean reduction.
class Tape {
public:
    NodeId input(const DenseMatrix& v, bool needs_grad = false);

    /// y = x * W^T + 1 b^T, with W (out x in) and b (1 x out).
    NodeId affine(NodeId x, NodeId w, NodeId b);
    NodeId leaky_relu(NodeId x, double slope);
    /// rowwise dot of two (B x N) nodes -> (B x 1)
    NodeId row_inner(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId shift(NodeId a, double c);
    NodeId square(NodeId a);
    NodeId exp(NodeId a);
    /// clamp to [lo, hi]; gradient passes straight through inside the range
    /// and is zero outside it
    NodeId clip_straight_through(NodeId a, double lo, double hi);
    /// mean over all entries -> (1 x 1)
    NodeId mean_all(NodeId a);

    const DenseMatrix& value(NodeId id) const;
    /// Adjoint of `id` after backward(); zero-shaped if the node was never
    /// reached by the backward sweep.
    const DenseMatrix& adjoint(NodeId id) const;
    bool adjoint_set(NodeId id) const;

    /// Reverse sweep from a scalar (1x1) node. Adjoint buffers are cleared at
    /// the start of every call.
    void backward(NodeId seed);

    /// Clears the graph but keeps node buffers for reuse by an identical
    /// rebuild.
    void reset();

    std::size_t node_count() const { return count_; }

private:
    enum class Op : std::uint8_t {
        Leaf,
        Affine,
        LeakyRelu,
        RowInner,
        Add,
        Sub,
        Mul,
        Scale,
        Shift,
        Square,
        Exp,
        ClipST,
        MeanAll,
    };

    struct Node {
        Op op = Op::Leaf;
        NodeId a = -1, b = -1, c = -1;
        double p0 = 0.0, p1 = 0.0;
        bool needs_grad = false;
        bool adj_set = false;
        DenseMatrix val;
        DenseMatrix adj;
    };

    std::vector<Node> nodes_;
    std::size_t count_ = 0;
    bool ran_backward_ = false;

    Node& fresh(Op op, NodeId a, NodeId b, NodeId c, double p0, double p1);
    NodeId id_of(const Node& n) const { return static_cast<NodeId>(&n - nodes_.data()); }
    Node& at(NodeId id);
    const Node& at(NodeId id) const;
    /// Returns the adjoint buffer for writing; `assign` tells the caller to
    /// overwrite (first touch) instead of accumulate.
    DenseMatrix& adj_sink(NodeId id, bool& assign);
};

}  // namespace opuq
