#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "rcf/errors.hpp"

namespace rcf::ad {

// All numerics are 64-bit; row-major so flat serialization order matches the
// on-disk layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

// Trainable storage that outlives any single tape. grad accumulates across
// backward passes until an optimizer step consumes and clears it.
struct Parameter {
    Parameter() = default;
    explicit Parameter(Matrix v)
        : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

    Matrix value;
    Matrix grad;
    bool has_grad = false;
};

// Handle into a tape node. Cheap to copy; valid while its tape is alive.
class Tensor {
public:
    Tensor() = default;

    const Matrix& value() const;
    const Matrix& grad() const;  // populated by Tape::backward
    bool requires_grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const;  // value of a 1x1 tensor

    Tape* tape() const { return tape_; }

private:
    friend class Tape;
    friend struct OpAccess;
    Tensor(Tape* tape, std::size_t idx) : tape_(tape), idx_(idx) {}
    Tape* tape_ = nullptr;
    std::size_t idx_ = 0;
};

struct OpAccess;

// Reverse-mode tape. Nodes are recorded in forward order; backward walks them
// in reverse, so creation order is the topological order. One tape per
// forward/backward pass; destroy (or let go out of scope) to free the graph.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor constant(Matrix v);
    Tensor scalar(double v);
    Tensor param(Parameter& p);           // leaf whose gradient lands in p.grad
    Tensor frozen(const Parameter& p);    // value-only view of a parameter

    // Seeds d(loss)/d(loss)=1 and accumulates gradients into every reachable
    // param leaf. loss must be 1x1.
    void backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }

private:
    friend class Tensor;
    friend struct OpAccess;

    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool grad_ready = false;
        Parameter* sink = nullptr;
        std::function<void()> backprop;  // empty for leaves / no-grad nodes
    };

    Node& node(std::size_t i) { return nodes_[i]; }
    const Node& node(std::size_t i) const { return nodes_[i]; }
    Tensor emplace(Matrix value, bool requires_grad);
    void accumulate(std::size_t idx, const Matrix& g);

    std::deque<Node> nodes_;
};

// ---- Operations ----------------------------------------------------------
// Free functions build new nodes on the operands' tape. Shapes are validated
// up front; violations throw ShapeError.

Tensor matmul(const Tensor& a, const Tensor& b);

// Inverse of a square, well-conditioned matrix. The 1-norm condition estimate
// guards gradients through (I - A^T)^-1; above the threshold this throws
// NumericError carrying the estimate.
Tensor inverse(const Tensor& a, double cond_threshold = 1e12);

// Applies B (k x k) to each of `blocks` consecutive k-row blocks of x.
// Equivalent to (I_blocks ⊗ B) * x; the batched form of the structural
// mixing step used by the encoder/decoder.
Tensor block_matmul(const Tensor& b, const Tensor& x, Eigen::Index blocks);

Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// Adds a 1 x n row vector to every row of a (the only broadcast supported).
Tensor add_rowvec(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // strictly positive inputs; DomainError otherwise
Tensor square(const Tensor& a);
Tensor negate(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols);
Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat(const Tensor& a, const Tensor& b, int axis);  // 0 rows, 1 cols

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor trace(const Tensor& a);
Tensor l2_norm_sq(const Tensor& a);
Tensor max(const Tensor& a);           // reduce over all entries
Tensor rowwise_sum(const Tensor& a);   // (n x m) -> (n x 1)

Tensor softmax_rows(const Tensor& a);      // rows sum to 1
Tensor log_softmax_rows(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

// h(A) = tr[(I + alpha * A∘A)^L] - L; zero exactly on DAG adjacency patterns.
// Composite of tape ops, so it is differentiable w.r.t. A.
Tensor acyclicity_penalty(const Tensor& a, double alpha);

// ---- Optimizer ------------------------------------------------------------

struct AdamState {
    std::int64_t step = 0;
    Matrix first_moment;
    Matrix second_moment;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const Parameter& p, double learning_rate);

// Standard Adam with bias correction; requires every parameter to carry a
// populated gradient (StateError otherwise) and clears gradients afterwards.
void adam_step(std::span<Parameter* const> params, std::span<AdamState> states);

}  // namespace rcf::ad
