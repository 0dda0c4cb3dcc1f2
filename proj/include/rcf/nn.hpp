#pragma once

#include <vector>

#include "rcf/autodiff.hpp"
#include "rcf/rng.hpp"

namespace rcf::nn {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Tensor;

struct DenseLayer {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out

    Eigen::Index in_features() const { return weight.value.rows(); }
    Eigen::Index out_features() const { return weight.value.cols(); }
};

// Glorot-uniform init: +-sqrt(6 / (fan_in + fan_out)), bias zero.
DenseLayer make_dense(Eigen::Index in, Eigen::Index out, Rng& rng);

// x: batch x in. train=true leases the weights as trainable leaves; false
// records them as constants so gradients stop at the layer boundary.
Tensor apply(Tape& tape, DenseLayer& layer, const Tensor& x, bool train);
Tensor apply(Tape& tape, const DenseLayer& layer, const Tensor& x);  // frozen

// Two-layer perceptron with ReLU after the first layer. The workhorse for
// the classifier, the encoder/decoder heads, the modulation network and the
// discriminator.
struct Mlp2 {
    DenseLayer l1;
    DenseLayer l2;
};

Mlp2 make_mlp2(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng);
Tensor forward(Tape& tape, Mlp2& mlp, const Tensor& x, bool train);
Tensor forward(Tape& tape, const Mlp2& mlp, const Tensor& x);

std::vector<Parameter*> parameters(Mlp2& mlp);

// Convenience bundle: Adam states matching a parameter list.
std::vector<ad::AdamState> make_adam_states(const std::vector<Parameter*>& params,
                                            double learning_rate);

}  // namespace rcf::nn
