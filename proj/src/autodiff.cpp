#include "rcf/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace rcf::ad {

namespace {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

const Matrix& Tensor::value() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    return tape_->node(idx_).value;
}

const Matrix& Tensor::grad() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    const auto& n = tape_->node(idx_);
    if (!n.grad_ready) throw StateError("Tensor: gradient not populated; run backward first");
    return n.grad;
}

bool Tensor::requires_grad() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    return tape_->node(idx_).requires_grad;
}

double Tensor::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw ShapeError("Tensor::scalar: tensor is " + shape_str(v) + ", expected 1x1");
    }
    return v(0, 0);
}

// ---- Tape ------------------------------------------------------------------

Tensor Tape::emplace(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix v) { return emplace(std::move(v), false); }

Tensor Tape::scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
}

Tensor Tape::param(Parameter& p) {
    Tensor t = emplace(p.value, true);
    nodes_[t.idx_].sink = &p;
    return t;
}

Tensor Tape::frozen(const Parameter& p) { return emplace(p.value, false); }

void Tape::accumulate(std::size_t idx, const Matrix& g) {
    Node& n = nodes_[idx];
    if (!n.requires_grad) return;
    if (!n.grad_ready) {
        n.grad = g;
        n.grad_ready = true;
    } else {
        n.grad += g;
    }
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape_ != this) throw StateError("Tape::backward: tensor from another tape");
    const Matrix& v = nodes_[loss.idx_].value;
    if (v.rows() != 1 || v.cols() != 1) {
        throw ShapeError("Tape::backward: loss must be 1x1, got " + shape_str(v));
    }
    if (!nodes_[loss.idx_].requires_grad) {
        throw StateError("Tape::backward: loss does not depend on any parameter");
    }
    Matrix seed(1, 1);
    seed(0, 0) = 1.0;
    accumulate(loss.idx_, seed);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.grad_ready) continue;
        if (n.backprop) n.backprop();
        if (n.sink) {
            n.sink->grad += n.grad;
            n.sink->has_grad = true;
        }
    }
}

// ---- op helpers ------------------------------------------------------------

namespace {

Tape* tape_of(const Tensor& a) {
    Tape* t = a.tape();
    if (!t) throw StateError("op on empty tensor handle");
    return t;
}

Tape* tape_of(const Tensor& a, const Tensor& b) {
    Tape* t = tape_of(a);
    if (t != b.tape()) throw StateError("operands recorded on different tapes");
    return t;
}

// Grants op implementations access to tape internals without befriending
// every free function individually.
}  // namespace

struct OpAccess {
    static Tensor make(Tape& t, Matrix value, std::initializer_list<Tensor> inputs,
                       std::function<void(Tape&, const Matrix&, std::size_t)> backprop_with_grad) {
        bool req = false;
        for (const Tensor& in : inputs) req = req || in.requires_grad();
        Tensor out = t.emplace(std::move(value), req);
        if (req && backprop_with_grad) {
            Tape* tp = &t;
            const std::size_t out_idx = out_index(out);
            t.node(out_idx).backprop = [tp, out_idx, fn = std::move(backprop_with_grad)]() {
                fn(*tp, tp->node(out_idx).grad, out_idx);
            };
        }
        return out;
    }

    static std::size_t out_index(const Tensor& t) { return t.idx_; }
    static const Matrix& value_of(Tape& t, std::size_t idx) { return t.node(idx).value; }
    static void accum(Tape& t, const Tensor& in, const Matrix& g) { t.accumulate(in.idx_, g); }
};

namespace {

using OA = OpAccess;

Tensor unary_elementwise(const Tensor& a, Matrix value,
                         std::function<Matrix(const Matrix& grad, const Matrix& input,
                                              const Matrix& output)> dfn) {
    Tape& t = *tape_of(a);
    Tensor out;
    out = OA::make(t, std::move(value), {a},
                   [a, dfn = std::move(dfn)](Tape& tp, const Matrix& g, std::size_t out_idx) {
                       OA::accum(tp, a, dfn(g, a.value(), OA::value_of(tp, out_idx)));
                   });
    return out;
}

}  // namespace

// ---- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.value()) + " * " +
                         shape_str(b.value()));
    }
    Matrix v = a.value() * b.value();
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g * b.value().transpose());
        if (b.requires_grad()) OA::accum(tp, b, a.value().transpose() * g);
    });
}

Tensor inverse(const Tensor& a, double cond_threshold) {
    Tape& t = *tape_of(a);
    const Matrix& m = a.value();
    if (m.rows() != m.cols()) {
        throw ShapeError("inverse: matrix is " + shape_str(m) + ", expected square");
    }
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) {
        throw NumericError("inverse: matrix is singular");
    }
    Matrix inv = lu.inverse();
    const double cond = m.cwiseAbs().colwise().sum().maxCoeff() *
                        inv.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(cond) || cond > cond_threshold) {
        std::ostringstream os;
        os << "inverse: condition estimate " << cond << " exceeds threshold " << cond_threshold;
        throw NumericError(os.str());
    }
    return OA::make(t, std::move(inv), {a}, [a](Tape& tp, const Matrix& g, std::size_t out_idx) {
        const Matrix& inv_v = OA::value_of(tp, out_idx);
        // d(X^-1) = -X^-1 dX X^-1  =>  dL/dX = -X^-T g X^-T
        OA::accum(tp, a, -(inv_v.transpose() * g * inv_v.transpose()));
    });
}

Tensor block_matmul(const Tensor& b, const Tensor& x, Eigen::Index blocks) {
    Tape& t = *tape_of(b, x);
    const Eigen::Index k = b.value().rows();
    if (b.value().cols() != k) {
        throw ShapeError("block_matmul: block matrix is " + shape_str(b.value()) +
                         ", expected square");
    }
    if (blocks <= 0 || x.rows() != k * blocks) {
        throw ShapeError("block_matmul: x has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(k) + " * " + std::to_string(blocks));
    }
    const Matrix& bx = x.value();
    Matrix v(bx.rows(), bx.cols());
    for (Eigen::Index i = 0; i < blocks; ++i) {
        v.middleRows(i * k, k).noalias() = b.value() * bx.middleRows(i * k, k);
    }
    return OA::make(t, std::move(v), {b, x},
                    [b, x, blocks, k](Tape& tp, const Matrix& g, std::size_t) {
                        if (b.requires_grad()) {
                            Matrix gb = Matrix::Zero(k, k);
                            for (Eigen::Index i = 0; i < blocks; ++i) {
                                gb.noalias() +=
                                    g.middleRows(i * k, k) * x.value().middleRows(i * k, k).transpose();
                            }
                            OA::accum(tp, b, gb);
                        }
                        if (x.requires_grad()) {
                            Matrix gx(x.rows(), x.cols());
                            for (Eigen::Index i = 0; i < blocks; ++i) {
                                gx.middleRows(i * k, k).noalias() =
                                    b.value().transpose() * g.middleRows(i * k, k);
                            }
                            OA::accum(tp, x, gx);
                        }
                    });
}

Tensor transpose(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v = a.value().transpose();
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, g.transpose());
    });
}

// ---- arithmetic ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    Matrix v = a.value() + b.value();
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g);
        if (b.requires_grad()) OA::accum(tp, b, g);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    Matrix v = a.value() - b.value();
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g);
        if (b.requires_grad()) OA::accum(tp, b, -g);
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    require_same_shape(a.value(), b.value(), "hadamard");
    Matrix v = a.value().cwiseProduct(b.value());
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g.cwiseProduct(b.value()));
        if (b.requires_grad()) OA::accum(tp, b, g.cwiseProduct(a.value()));
    });
}

Tensor scale(const Tensor& a, double s) {
    Tape& t = *tape_of(a);
    Matrix v = a.value() * s;
    return OA::make(t, std::move(v), {a}, [a, s](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, g * s);
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    Tape& t = *tape_of(a);
    Matrix v = a.value().array() + s;
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, g);
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
    Tape& t = *tape_of(a, row);
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_rowvec: row is " + shape_str(row.value()) + ", expected 1x" +
                         std::to_string(a.cols()));
    }
    Matrix v = a.value().rowwise() + row.value().row(0);
    return OA::make(t, std::move(v), {a, row}, [a, row](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g);
        if (row.requires_grad()) OA::accum(tp, row, g.colwise().sum());
    });
}

// ---- elementwise nonlinearities ---------------------------------------------

Tensor relu(const Tensor& a) {
    return unary_elementwise(a, a.value().cwiseMax(0.0),
                             [](const Matrix& g, const Matrix& in, const Matrix&) -> Matrix {
                                 return (in.array() > 0.0).select(g.array(), 0.0).matrix();
                             });
}

Tensor sigmoid(const Tensor& a) {
    Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix&, const Matrix& out) -> Matrix {
                                 return (g.array() * out.array() * (1.0 - out.array())).matrix();
                             });
}

Tensor tanh(const Tensor& a) {
    Matrix v = a.value().array().tanh().matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix&, const Matrix& out) -> Matrix {
                                 return (g.array() * (1.0 - out.array().square())).matrix();
                             });
}

Tensor sin(const Tensor& a) {
    Matrix v = a.value().array().sin().matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix& in, const Matrix&) -> Matrix {
                                 return (g.array() * in.array().cos()).matrix();
                             });
}

Tensor exp(const Tensor& a) {
    Matrix v = a.value().array().exp().matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix&, const Matrix& out) -> Matrix {
                                 return (g.array() * out.array()).matrix();
                             });
}

Tensor log(const Tensor& a) {
    if ((a.value().array() <= 0.0).any()) {
        throw DomainError("log: inputs must be strictly positive");
    }
    Matrix v = a.value().array().log().matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix& in, const Matrix&) -> Matrix {
                                 return (g.array() / in.array()).matrix();
                             });
}

Tensor square(const Tensor& a) {
    Matrix v = a.value().array().square().matrix();
    return unary_elementwise(a, std::move(v),
                             [](const Matrix& g, const Matrix& in, const Matrix&) -> Matrix {
                                 return (g.array() * 2.0 * in.array()).matrix();
                             });
}

Tensor negate(const Tensor& a) { return scale(a, -1.0); }

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw DomainError("clamp: lo > hi");
    Matrix v = a.value().cwiseMax(lo).cwiseMin(hi);
    return unary_elementwise(a, std::move(v),
                             [lo, hi](const Matrix& g, const Matrix& in, const Matrix&) -> Matrix {
                                 Matrix out = g;
                                 for (Eigen::Index i = 0; i < in.rows(); ++i)
                                     for (Eigen::Index j = 0; j < in.cols(); ++j)
                                         if (in(i, j) < lo || in(i, j) > hi) out(i, j) = 0.0;
                                 return out;
                             });
}

// ---- shape ops --------------------------------------------------------------

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
    Tape& t = *tape_of(a);
    if (rows * cols != a.rows() * a.cols()) {
        throw ShapeError("reshape: cannot view " + shape_str(a.value()) + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    // Row-major storage: a flat copy reinterprets cleanly.
    Matrix v = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, Eigen::Map<const Matrix>(g.data(), a.rows(), a.cols()));
    });
}

Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end) {
    Tape& t = *tape_of(a);
    if (begin < 0 || end > a.cols() || begin >= end) {
        throw ShapeError("slice_cols: invalid range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") for " + shape_str(a.value()));
    }
    Matrix v = a.value().middleCols(begin, end - begin);
    return OA::make(t, std::move(v), {a}, [a, begin, end](Tape& tp, const Matrix& g, std::size_t) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(begin, end - begin) = g;
        OA::accum(tp, a, full);
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    if (a.rows() != b.rows()) {
        throw ShapeError("concat_cols: row counts differ, " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
    }
    Matrix v(a.rows(), a.cols() + b.cols());
    v << a.value(), b.value();
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g.leftCols(a.cols()));
        if (b.requires_grad()) OA::accum(tp, b, g.rightCols(b.cols()));
    });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    Tape& t = *tape_of(a, b);
    if (a.cols() != b.cols()) {
        throw ShapeError("concat_rows: column counts differ, " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
    }
    Matrix v(a.rows() + b.rows(), a.cols());
    v << a.value(), b.value();
    return OA::make(t, std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g, std::size_t) {
        if (a.requires_grad()) OA::accum(tp, a, g.topRows(a.rows()));
        if (b.requires_grad()) OA::accum(tp, b, g.bottomRows(b.rows()));
    });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    if (axis == 0) return concat_rows(a, b);
    if (axis == 1) return concat_cols(a, b);
    throw ShapeError("concat: axis must be 0 or 1");
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v(1, 1);
    v(0, 0) = a.value().sum();
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Tensor mean(const Tensor& a) {
    Tape& t = *tape_of(a);
    const double n = double(a.rows() * a.cols());
    Matrix v(1, 1);
    v(0, 0) = a.value().sum() / n;
    return OA::make(t, std::move(v), {a}, [a, n](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
    });
}

Tensor trace(const Tensor& a) {
    Tape& t = *tape_of(a);
    if (a.rows() != a.cols()) {
        throw ShapeError("trace: matrix is " + shape_str(a.value()) + ", expected square");
    }
    Matrix v(1, 1);
    v(0, 0) = a.value().trace();
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        Matrix d = Matrix::Zero(a.rows(), a.cols());
        d.diagonal().setConstant(g(0, 0));
        OA::accum(tp, a, d);
    });
}

Tensor l2_norm_sq(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v(1, 1);
    v(0, 0) = a.value().squaredNorm();
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, 2.0 * g(0, 0) * a.value());
    });
}

Tensor max(const Tensor& a) {
    Tape& t = *tape_of(a);
    Eigen::Index mi = 0, mj = 0;
    const double m = a.value().maxCoeff(&mi, &mj);
    Matrix v(1, 1);
    v(0, 0) = m;
    return OA::make(t, std::move(v), {a}, [a, mi, mj](Tape& tp, const Matrix& g, std::size_t) {
        Matrix d = Matrix::Zero(a.rows(), a.cols());
        d(mi, mj) = g(0, 0);  // subgradient: first maximizer takes it all
        OA::accum(tp, a, d);
    });
}

Tensor rowwise_sum(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v = a.value().rowwise().sum();
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t) {
        OA::accum(tp, a, g * Matrix::Ones(1, a.cols()));
    });
}

// ---- softmax ----------------------------------------------------------------

Tensor softmax_rows(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto row = a.value().row(i).array();
        Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
        v.row(i) = (e / e.sum()).matrix();
    }
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t out_idx) {
        const Matrix& s = OA::value_of(tp, out_idx);
        Matrix d(s.rows(), s.cols());
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const double dot = (g.row(i).array() * s.row(i).array()).sum();
            d.row(i) = (s.row(i).array() * (g.row(i).array() - dot)).matrix();
        }
        OA::accum(tp, a, d);
    });
}

Tensor log_softmax_rows(const Tensor& a) {
    Tape& t = *tape_of(a);
    Matrix v(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto row = a.value().row(i).array();
        const double m = row.maxCoeff();
        const double lse = m + std::log((row - m).exp().sum());
        v.row(i) = (row - lse).matrix();
    }
    return OA::make(t, std::move(v), {a}, [a](Tape& tp, const Matrix& g, std::size_t out_idx) {
        const Matrix& ls = OA::value_of(tp, out_idx);
        Matrix d(ls.rows(), ls.cols());
        for (Eigen::Index i = 0; i < ls.rows(); ++i) {
            const double gsum = g.row(i).sum();
            d.row(i) = (g.row(i).array() - gsum * ls.row(i).array().exp()).matrix();
        }
        OA::accum(tp, a, d);
    });
}

// ---- acyclicity ---------------------------------------------------------------

Tensor acyclicity_penalty(const Tensor& a, double alpha) {
    Tape& t = *tape_of(a);
    if (a.rows() != a.cols()) {
        throw ShapeError("acyclicity_penalty: matrix is " + shape_str(a.value()) +
                         ", expected square");
    }
    if (alpha <= 0.0) throw DomainError("acyclicity_penalty: alpha must be positive");
    const Eigen::Index n = a.rows();
    Tensor base = add(t.constant(Matrix::Identity(n, n)), scale(hadamard(a, a), alpha));
    Tensor power = base;
    for (Eigen::Index i = 1; i < n; ++i) power = matmul(power, base);
    return add_scalar(trace(power), -double(n));
}

// ---- Adam ----------------------------------------------------------------------

AdamState make_adam_state(const Parameter& p, double learning_rate) {
    AdamState s;
    s.first_moment = Matrix::Zero(p.value.rows(), p.value.cols());
    s.second_moment = Matrix::Zero(p.value.rows(), p.value.cols());
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(std::span<Parameter* const> params, std::span<AdamState> states) {
    if (params.size() != states.size()) {
        throw StateError("adam_step: parameter/state count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        AdamState& s = states[i];
        if (!p.has_grad) throw StateError("adam_step: parameter has no populated gradient");
        if (s.first_moment.rows() != p.value.rows() || s.first_moment.cols() != p.value.cols()) {
            throw StateError("adam_step: moment shape does not match parameter");
        }
        s.step += 1;
        s.first_moment = s.beta1 * s.first_moment + (1.0 - s.beta1) * p.grad;
        s.second_moment =
            (s.beta2 * s.second_moment.array() + (1.0 - s.beta2) * p.grad.array().square()).matrix();
        const double bc1 = 1.0 - std::pow(s.beta1, double(s.step));
        const double bc2 = 1.0 - std::pow(s.beta2, double(s.step));
        p.value.array() -= s.learning_rate * (s.first_moment.array() / bc1) /
                           ((s.second_moment.array() / bc2).sqrt() + s.epsilon);
        p.grad.setZero();
        p.has_grad = false;
    }
}

}  // namespace rcf::ad
