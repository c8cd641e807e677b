#pragma once

#include <span>
#include <vector>

#include "boed/bandit_sim.hpp"
#include "boed/neural_net.hpp"
#include "boed/priors.hpp"

namespace boed {

// How the variable of interest is presented to the critic. MD: one-hot over
// `model_count` models. PE: the raw parameter vector, with log-normal
// coordinates fed as their logarithm.
struct VariableEncoding {
    Task task = Task::ModelDiscrimination;
    std::size_t model_count = kModelCount;
    std::vector<bool> log_coordinates;  // PE only

    static VariableEncoding for_prior(const PriorSpec& spec);
    std::size_t dim() const {
        return task == Task::ModelDiscrimination ? model_count : log_coordinates.size();
    }
};

inline std::size_t block_input_dim(std::size_t trials, std::size_t arms) { return trials * (arms + 1); }

void encode_variable(const VariableEncoding& enc, const VariableOfInterest& v, std::span<double> out);
// Trial by trial: one-hot choice over the arms followed by the reward bit.
void encode_block(const Trajectory& y, std::size_t block, std::span<double> out);

struct EncodedInputs {
    std::vector<double> variable;
    std::vector<std::vector<double>> blocks;
};
EncodedInputs encode_inputs(const VariableOfInterest& v, const Trajectory& y, const VariableEncoding& enc);

// Batch in the critic's column layout; `indices` selects records (all if empty).
EncodedBatch encode_batch(const std::vector<VariableOfInterest>& vs, const std::vector<Trajectory>& ys,
                          const VariableEncoding& enc, std::span<const std::size_t> indices = {});
Eigen::MatrixXd encode_variables(const std::vector<VariableOfInterest>& vs, const VariableEncoding& enc);

}  // namespace boed
