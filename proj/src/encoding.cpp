#include "boed/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boed/errors.hpp"

namespace boed {

VariableEncoding VariableEncoding::for_prior(const PriorSpec& spec) {
    VariableEncoding e;
    e.task = spec.task;
    if (spec.task == Task::ParameterEstimation) {
        for (const ScalarPrior& p : spec.params[static_cast<std::size_t>(spec.model)]) {
            e.log_coordinates.push_back(p.kind == ScalarPrior::Kind::LogNormal);
        }
    }
    return e;
}

void encode_variable(const VariableEncoding& enc, const VariableOfInterest& v, std::span<double> out) {
    if (out.size() != enc.dim()) throw DomainError("variable encoding buffer has the wrong size");
    if (enc.task == Task::ModelDiscrimination) {
        const auto m = static_cast<std::size_t>(v.model);
        if (m >= enc.model_count) throw DomainError("model index outside the encoding");
        std::fill(out.begin(), out.end(), 0.0);
        out[m] = 1.0;
        return;
    }
    if (v.params.size() != enc.log_coordinates.size()) throw DomainError("parameter vector arity mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = enc.log_coordinates[j] ? std::log(v.params[j]) : v.params[j];
    }
}

void encode_block(const Trajectory& y, std::size_t block, std::span<double> out) {
    const std::size_t width = y.arms + 1;
    if (out.size() != y.trials * width) throw DomainError("block encoding buffer has the wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < y.trials; ++t) {
        out[t * width + y.choice(block, t)] = 1.0;
        out[t * width + y.arms] = y.reward(block, t);
    }
}

EncodedInputs encode_inputs(const VariableOfInterest& v, const Trajectory& y, const VariableEncoding& enc) {
    EncodedInputs in;
    in.variable.resize(enc.dim());
    encode_variable(enc, v, in.variable);
    for (std::size_t b = 0; b < y.blocks; ++b) {
        in.blocks.emplace_back(block_input_dim(y.trials, y.arms));
        encode_block(y, b, in.blocks.back());
    }
    return in;
}

Eigen::MatrixXd encode_variables(const std::vector<VariableOfInterest>& vs, const VariableEncoding& enc) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(enc.dim()), static_cast<Eigen::Index>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i) {
        encode_variable(enc, vs[i], {out.col(static_cast<Eigen::Index>(i)).data(), enc.dim()});
    }
    return out;
}

EncodedBatch encode_batch(const std::vector<VariableOfInterest>& vs, const std::vector<Trajectory>& ys,
                          const VariableEncoding& enc, std::span<const std::size_t> indices) {
    if (vs.size() != ys.size()) throw DomainError("variables and trajectories must pair up");
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(vs.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        indices = all;
    }
    EncodedBatch batch;
    const auto n = static_cast<Eigen::Index>(indices.size());
    batch.variables.resize(static_cast<Eigen::Index>(enc.dim()), n);
    if (ys.empty()) return batch;
    const Trajectory& shape = ys[indices.front()];
    const std::size_t width = block_input_dim(shape.trials, shape.arms);
    batch.blocks.assign(shape.blocks, Eigen::MatrixXd(static_cast<Eigen::Index>(width), n));
    for (Eigen::Index c = 0; c < n; ++c) {
        const std::size_t i = indices[static_cast<std::size_t>(c)];
        const Trajectory& y = ys[i];
        if (y.blocks != shape.blocks || y.trials != shape.trials || y.arms != shape.arms) {
            throw DomainError("trajectories in a batch must share a shape");
        }
        encode_variable(enc, vs[i], {batch.variables.col(c).data(), enc.dim()});
        for (std::size_t b = 0; b < y.blocks; ++b) encode_block(y, b, {batch.blocks[b].col(c).data(), width});
    }
    return batch;
}

}  // namespace boed
