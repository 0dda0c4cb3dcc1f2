#include "rcf/serialize.hpp"

#include "rcf/errors.hpp"

namespace rcf {

using nlohmann::json;

json to_json(const ad::Parameter& p) {
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    return json{{"shape", {p.value.rows(), p.value.cols()}}, {"data", std::move(data)}};
}

ad::Parameter parameter_from_json(const json& j) {
    const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || Eigen::Index(data.size()) != shape[0] * shape[1]) {
        throw ParseError("parameter: data length does not match shape");
    }
    ad::Matrix m = Eigen::Map<const ad::Matrix>(data.data(), shape[0], shape[1]);
    return ad::Parameter(std::move(m));
}

json to_json(const nn::DenseLayer& l) {
    return json{{"weight", to_json(l.weight)}, {"bias", to_json(l.bias)}};
}

nn::DenseLayer dense_from_json(const json& j) {
    nn::DenseLayer l;
    l.weight = parameter_from_json(j.at("weight"));
    l.bias = parameter_from_json(j.at("bias"));
    return l;
}

json to_json(const nn::Mlp2& m) {
    return json{{"l1", to_json(m.l1)}, {"l2", to_json(m.l2)}};
}

nn::Mlp2 mlp2_from_json(const json& j) {
    nn::Mlp2 m;
    m.l1 = dense_from_json(j.at("l1"));
    m.l2 = dense_from_json(j.at("l2"));
    return m;
}

}  // namespace rcf
