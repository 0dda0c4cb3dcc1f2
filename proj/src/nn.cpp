#include "rcf/nn.hpp"

#include <cmath>

namespace rcf::nn {

DenseLayer make_dense(Eigen::Index in, Eigen::Index out, Rng& rng) {
    const double bound = std::sqrt(6.0 / double(in + out));
    Matrix w(in, out);
    for (Eigen::Index i = 0; i < in; ++i)
        for (Eigen::Index j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
    DenseLayer layer;
    layer.weight = Parameter(std::move(w));
    layer.bias = Parameter(Matrix::Zero(1, out));
    return layer;
}

Tensor apply(Tape& tape, DenseLayer& layer, const Tensor& x, bool train) {
    Tensor w = train ? tape.param(layer.weight) : tape.frozen(layer.weight);
    Tensor b = train ? tape.param(layer.bias) : tape.frozen(layer.bias);
    return ad::add_rowvec(ad::matmul(x, w), b);
}

Tensor apply(Tape& tape, const DenseLayer& layer, const Tensor& x) {
    return ad::add_rowvec(ad::matmul(x, tape.frozen(layer.weight)), tape.frozen(layer.bias));
}

Mlp2 make_mlp2(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng) {
    Mlp2 mlp;
    mlp.l1 = make_dense(in, hidden, rng);
    mlp.l2 = make_dense(hidden, out, rng);
    return mlp;
}

Tensor forward(Tape& tape, Mlp2& mlp, const Tensor& x, bool train) {
    return apply(tape, mlp.l2, ad::relu(apply(tape, mlp.l1, x, train)), train);
}

Tensor forward(Tape& tape, const Mlp2& mlp, const Tensor& x) {
    return apply(tape, mlp.l2, ad::relu(apply(tape, mlp.l1, x)));
}

std::vector<Parameter*> parameters(Mlp2& mlp) {
    return {&mlp.l1.weight, &mlp.l1.bias, &mlp.l2.weight, &mlp.l2.bias};
}

std::vector<ad::AdamState> make_adam_states(const std::vector<Parameter*>& params,
                                            double learning_rate) {
    std::vector<ad::AdamState> states;
    states.reserve(params.size());
    for (const Parameter* p : params) states.push_back(ad::make_adam_state(*p, learning_rate));
    return states;
}

}  // namespace rcf::nn
