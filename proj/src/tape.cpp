#include "opuq/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace opuq {

namespace {

void ensure_shape(DenseMatrix& m, std::size_t r, std::size_t c) {
    if (m.rows() != r || m.cols() != c) m.resize(r, c);
}

}  // namespace

Tape::Node& Tape::at(NodeId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= count_) throw std::out_of_range("tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::at(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= count_) throw std::out_of_range("tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
}

// May grow nodes_, so callers must not hold references across this call.
Tape::Node& Tape::fresh(Op op, NodeId a, NodeId b, NodeId c, double p0, double p1) {
    if (count_ == nodes_.size()) nodes_.emplace_back();
    Node& n = nodes_[count_++];
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.p0 = p0;
    n.p1 = p1;
    n.adj_set = false;
    n.needs_grad = (a >= 0 && at(a).needs_grad) || (b >= 0 && at(b).needs_grad) ||
                   (c >= 0 && at(c).needs_grad);
    return n;
}

NodeId Tape::input(const DenseMatrix& v, bool needs_grad) {
    Node& n = fresh(Op::Leaf, -1, -1, -1, 0, 0);
    n.needs_grad = needs_grad;
    ensure_shape(n.val, v.rows(), v.cols());
    std::copy(v.flat().begin(), v.flat().end(), n.val.flat().begin());
    return id_of(n);
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
    if (at(x).val.cols() != at(w).val.cols()) throw std::invalid_argument("affine: input width != fan-in");
    if (at(b).val.rows() != 1 || at(b).val.cols() != at(w).val.rows())
        throw std::invalid_argument("affine: bias shape");
    Node& n = fresh(Op::Affine, x, w, b, 0, 0);
    const DenseMatrix& xv = at(x).val;
    const DenseMatrix& wv = at(w).val;
    const DenseMatrix& bv = at(b).val;
    ensure_shape(n.val, xv.rows(), wv.rows());
    gemm(Trans::No, Trans::Yes, 1.0, xv, wv, 0.0, n.val);
    for (std::size_t r = 0; r < n.val.rows(); ++r) {
        double* out = n.val.row(r);
        const double* bias = bv.row(0);
        for (std::size_t j = 0; j < n.val.cols(); ++j) out[j] += bias[j];
    }
    return id_of(n);
}

NodeId Tape::leaky_relu(NodeId x, double slope) {
    Node& n = fresh(Op::LeakyRelu, x, -1, -1, slope, 0);
    const DenseMatrix& xv = at(x).val;
    ensure_shape(n.val, xv.rows(), xv.cols());
    const auto src = xv.flat();
    auto dst = n.val.flat();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : slope * src[i];
    return id_of(n);
}

NodeId Tape::row_inner(NodeId a, NodeId b) {
    if (!at(a).val.same_shape(at(b).val)) throw std::invalid_argument("row_inner: shape mismatch");
    Node& n = fresh(Op::RowInner, a, b, -1, 0, 0);
    const DenseMatrix& av = at(a).val;
    const DenseMatrix& bv = at(b).val;
    ensure_shape(n.val, av.rows(), 1);
    for (std::size_t r = 0; r < av.rows(); ++r)
        n.val(r, 0) = dot({av.row(r), av.cols()}, {bv.row(r), bv.cols()});
    return id_of(n);
}

#define OPUQ_EW2(NAME, OP, EXPR)                                                       \
    NodeId Tape::NAME(NodeId a, NodeId b) {                                            \
        if (!at(a).val.same_shape(at(b).val))                                          \
            throw std::invalid_argument(#NAME ": shape mismatch");                     \
        Node& n = fresh(Op::OP, a, b, -1, 0, 0);                                       \
        const auto x = at(a).val.flat();                                               \
        const auto y = at(b).val.flat();                                               \
        ensure_shape(n.val, at(a).val.rows(), at(a).val.cols());                       \
        auto z = n.val.flat();                                                         \
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = EXPR;                        \
        return id_of(n);                                                               \
    }

OPUQ_EW2(add, Add, x[i] + y[i])
OPUQ_EW2(sub, Sub, x[i] - y[i])
OPUQ_EW2(mul, Mul, x[i] * y[i])
#undef OPUQ_EW2

#define OPUQ_EW1(NAME, OP, EXPR)                                \
    NodeId Tape::NAME(NodeId a, double c) {                     \
        Node& n = fresh(Op::OP, a, -1, -1, c, 0);               \
        const auto x = at(a).val.flat();                        \
        ensure_shape(n.val, at(a).val.rows(), at(a).val.cols()); \
        auto z = n.val.flat();                                  \
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = EXPR; \
        return id_of(n);                                        \
    }

OPUQ_EW1(scale, Scale, c* x[i])
OPUQ_EW1(shift, Shift, x[i] + c)
#undef OPUQ_EW1

NodeId Tape::square(NodeId a) {
    Node& n = fresh(Op::Square, a, -1, -1, 0, 0);
    const auto x = at(a).val.flat();
    ensure_shape(n.val, at(a).val.rows(), at(a).val.cols());
    auto z = n.val.flat();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * x[i];
    return id_of(n);
}

NodeId Tape::exp(NodeId a) {
    Node& n = fresh(Op::Exp, a, -1, -1, 0, 0);
    const auto x = at(a).val.flat();
    ensure_shape(n.val, at(a).val.rows(), at(a).val.cols());
    auto z = n.val.flat();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::exp(x[i]);
    return id_of(n);
}

NodeId Tape::clip_straight_through(NodeId a, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clip: lo must be < hi");
    Node& n = fresh(Op::ClipST, a, -1, -1, lo, hi);
    const auto x = at(a).val.flat();
    ensure_shape(n.val, at(a).val.rows(), at(a).val.cols());
    auto z = n.val.flat();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
    return id_of(n);
}

NodeId Tape::mean_all(NodeId a) {
    if (at(a).val.empty()) throw std::invalid_argument("mean_all: empty input");
    Node& n = fresh(Op::MeanAll, a, -1, -1, 0, 0);
    const DenseMatrix& av = at(a).val;
    ensure_shape(n.val, 1, 1);
    double acc = 0.0;
    for (double v : av.flat()) acc += v;
    n.val(0, 0) = acc / static_cast<double>(av.size());
    return id_of(n);
}

const DenseMatrix& Tape::value(NodeId id) const { return at(id).val; }

const DenseMatrix& Tape::adjoint(NodeId id) const {
    const Node& n = at(id);
    if (!ran_backward_) throw std::logic_error("tape: adjoint requested before backward");
    return n.adj;
}

bool Tape::adjoint_set(NodeId id) const { return at(id).adj_set; }

DenseMatrix& Tape::adj_sink(NodeId id, bool& assign) {
    Node& n = at(id);
    ensure_shape(n.adj, n.val.rows(), n.val.cols());
    assign = !n.adj_set;
    n.adj_set = true;
    return n.adj;
}

namespace {

void elementwise_accum(DenseMatrix& dst, bool assign, const DenseMatrix& src, const double* gate,
                       double gate_slope) {
    auto d = dst.flat();
    const auto s = src.flat();
    if (gate == nullptr) {
        if (assign) {
            std::copy(s.begin(), s.end(), d.begin());
        } else {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
        }
        return;
    }
    if (assign) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = s[i] * (gate[i] > 0.0 ? 1.0 : gate_slope);
    } else {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i] * (gate[i] > 0.0 ? 1.0 : gate_slope);
    }
}

}  // namespace

void Tape::backward(NodeId seed) {
    if (count_ == 0) throw std::logic_error("tape: backward on empty tape");
    Node& top = at(seed);
    if (top.val.rows() != 1 || top.val.cols() != 1)
        throw std::invalid_argument("tape: backward seed must be scalar");
    for (std::size_t i = 0; i < count_; ++i) nodes_[i].adj_set = false;
    ensure_shape(top.adj, 1, 1);
    top.adj(0, 0) = 1.0;
    top.adj_set = true;
    ran_backward_ = true;

    for (std::size_t ri = count_; ri-- > 0;) {
        Node& n = nodes_[ri];
        if (!n.adj_set || !n.needs_grad || n.op == Op::Leaf) continue;
        const DenseMatrix& g = n.adj;
        switch (n.op) {
            case Op::Affine: {
                if (at(n.a).needs_grad) {
                    bool assign;
                    DenseMatrix& dx = adj_sink(n.a, assign);
                    gemm(Trans::No, Trans::No, 1.0, g, at(n.b).val, assign ? 0.0 : 1.0, dx);
                }
                if (at(n.b).needs_grad) {
                    bool assign;
                    DenseMatrix& dw = adj_sink(n.b, assign);
                    gemm(Trans::Yes, Trans::No, 1.0, g, at(n.a).val, assign ? 0.0 : 1.0, dw);
                }
                if (at(n.c).needs_grad) {
                    bool assign;
                    DenseMatrix& db = adj_sink(n.c, assign);
                    if (assign) db.set_zero();
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                        const double* gr = g.row(r);
                        double* acc = db.row(0);
                        for (std::size_t j = 0; j < g.cols(); ++j) acc[j] += gr[j];
                    }
                }
                break;
            }
            case Op::LeakyRelu: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& dx = adj_sink(n.a, assign);
                elementwise_accum(dx, assign, g, at(n.a).val.data(), n.p0);
                break;
            }
            case Op::RowInner: {
                const DenseMatrix& av = at(n.a).val;
                const DenseMatrix& bv = at(n.b).val;
                if (at(n.a).needs_grad) {
                    bool assign;
                    DenseMatrix& da = adj_sink(n.a, assign);
                    for (std::size_t r = 0; r < av.rows(); ++r) {
                        const double gr = g(r, 0);
                        const double* brow = bv.row(r);
                        double* drow = da.row(r);
                        if (assign)
                            for (std::size_t j = 0; j < av.cols(); ++j) drow[j] = gr * brow[j];
                        else
                            for (std::size_t j = 0; j < av.cols(); ++j) drow[j] += gr * brow[j];
                    }
                }
                if (at(n.b).needs_grad) {
                    bool assign;
                    DenseMatrix& db = adj_sink(n.b, assign);
                    for (std::size_t r = 0; r < bv.rows(); ++r) {
                        const double gr = g(r, 0);
                        const double* arow = av.row(r);
                        double* drow = db.row(r);
                        if (assign)
                            for (std::size_t j = 0; j < bv.cols(); ++j) drow[j] = gr * arow[j];
                        else
                            for (std::size_t j = 0; j < bv.cols(); ++j) drow[j] += gr * arow[j];
                    }
                }
                break;
            }
            case Op::Add: {
                for (NodeId pid : {n.a, n.b}) {
                    if (!at(pid).needs_grad) continue;
                    bool assign;
                    DenseMatrix& d = adj_sink(pid, assign);
                    elementwise_accum(d, assign, g, nullptr, 0);
                }
                break;
            }
            case Op::Sub: {
                if (at(n.a).needs_grad) {
                    bool assign;
                    DenseMatrix& d = adj_sink(n.a, assign);
                    elementwise_accum(d, assign, g, nullptr, 0);
                }
                if (at(n.b).needs_grad) {
                    bool assign;
                    DenseMatrix& d = adj_sink(n.b, assign);
                    auto dd = d.flat();
                    const auto gg = g.flat();
                    if (assign)
                        for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = -gg[i];
                    else
                        for (std::size_t i = 0; i < dd.size(); ++i) dd[i] -= gg[i];
                }
                break;
            }
            case Op::Mul: {
                const NodeId ids[2] = {n.a, n.b};
                for (int side = 0; side < 2; ++side) {
                    if (!at(ids[side]).needs_grad) continue;
                    bool assign;
                    DenseMatrix& d = adj_sink(ids[side], assign);
                    auto dd = d.flat();
                    const auto gg = g.flat();
                    const auto other = at(ids[1 - side]).val.flat();
                    if (assign)
                        for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = gg[i] * other[i];
                    else
                        for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += gg[i] * other[i];
                }
                break;
            }
            case Op::Scale: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                auto dd = d.flat();
                const auto gg = g.flat();
                if (assign)
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = n.p0 * gg[i];
                else
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += n.p0 * gg[i];
                break;
            }
            case Op::Shift: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                elementwise_accum(d, assign, g, nullptr, 0);
                break;
            }
            case Op::ClipST: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                auto dd = d.flat();
                const auto gg = g.flat();
                const auto x = at(n.a).val.flat();
                for (std::size_t i = 0; i < dd.size(); ++i) {
                    const double pass = (x[i] >= n.p0 && x[i] <= n.p1) ? gg[i] : 0.0;
                    dd[i] = assign ? pass : dd[i] + pass;
                }
                break;
            }
            case Op::Square: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                auto dd = d.flat();
                const auto gg = g.flat();
                const auto x = at(n.a).val.flat();
                if (assign)
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = 2.0 * x[i] * gg[i];
                else
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += 2.0 * x[i] * gg[i];
                break;
            }
            case Op::Exp: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                auto dd = d.flat();
                const auto gg = g.flat();
                const auto y = n.val.flat();
                if (assign)
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = y[i] * gg[i];
                else
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += y[i] * gg[i];
                break;
            }
            case Op::MeanAll: {
                if (!at(n.a).needs_grad) break;
                bool assign;
                DenseMatrix& d = adj_sink(n.a, assign);
                const double gv = g(0, 0) / static_cast<double>(d.size());
                auto dd = d.flat();
                if (assign)
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = gv;
                else
                    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += gv;
                break;
            }
            case Op::Leaf:
                break;
        }
    }
}

void Tape::reset() {
    count_ = 0;
    ran_backward_ = false;
}

}  // namespace opuq
