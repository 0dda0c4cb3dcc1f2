#pragma once

#include <json.hpp>

#include "rcf/nn.hpp"

namespace rcf {

// JSON layout for weights: {"shape": [r, c], "data": [... row-major ...]}.
nlohmann::json to_json(const ad::Parameter& p);
ad::Parameter parameter_from_json(const nlohmann::json& j);

nlohmann::json to_json(const nn::DenseLayer& l);
nn::DenseLayer dense_from_json(const nlohmann::json& j);

nlohmann::json to_json(const nn::Mlp2& m);
nn::Mlp2 mlp2_from_json(const nlohmann::json& j);

}  // namespace rcf
