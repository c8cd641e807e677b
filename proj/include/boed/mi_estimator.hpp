#pragma once

// The NWJ lower bound on mutual information,
//
//   U(d; psi) = E_joint[T(v, y)] - e^{-1} E_marginal[exp T(v, y)],
//
// estimated with sample averages, where marginal pairs are formed by
// permuting v against y within a batch.

#include <functional>
#include <iosfwd>
#include <vector>

#include "boed/bandit_sim.hpp"
#include "boed/encoding.hpp"
#include "boed/neural_net.hpp"
#include "boed/priors.hpp"

namespace boed {

// Prior plus simulator, i.e. p(v) p(y | v, d).
struct GenerativeModel {
    VariableEncoding encoding;
    std::size_t trials = 30;
    std::function<VariableOfInterest(Rng&)> sample_variable;
    std::function<Trajectory(const VariableOfInterest&, const Design&, Rng&)> simulate;
    // MD only: a prior draw conditioned on the model indicator.
    std::function<VariableOfInterest(std::size_t model, Rng&)> sample_for_model;

    static GenerativeModel from_prior(const PriorSpec& spec, std::size_t trials);
};

struct SimulatedDataset {
    Design design;
    std::vector<VariableOfInterest> variables;
    std::vector<Trajectory> trajectories;
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    // Fixed pairing used for the marginal term on the validation split.
    std::vector<std::size_t> validation_permutation;

    std::size_t size() const { return variables.size(); }
};

// n joint draws at `design`; a random `validation_fraction` of them (at least
// one, at most n-1) is held out.
SimulatedDataset simulate_dataset(const GenerativeModel& model, const Design& design, std::size_t n,
                                  double validation_fraction, Rng& rng);

struct NwjValue {
    double value = 0.0;
    double joint_mean = 0.0;
    double marginal_term = 0.0;  // e^{-1} mean(exp T)
    std::size_t clamped = 0;     // marginal outputs above the exp cap
};

inline constexpr double kDefaultExpCap = 20.0;

// Bound from critic outputs on joint and marginal pairs. Marginal outputs are
// clamped at `exp_cap` before exponentiation.
NwjValue nwj_from_outputs(const Eigen::RowVectorXd& joint, const Eigen::RowVectorXd& marginal,
                          double exp_cap = kDefaultExpCap);

// Bound on a batch; `permutation[i]` is the variable paired with y_i in the
// marginal term.
NwjValue nwj_bound(const BoundNetwork& net, const EncodedBatch& batch,
                   std::span<const std::size_t> permutation, double exp_cap = kDefaultExpCap);

// Bound and the gradient of the bound with respect to every parameter.
NwjValue nwj_bound_gradient(const BoundNetwork& net, const EncodedBatch& batch,
                            std::span<const std::size_t> permutation, BoundNetwork& gradient,
                            double exp_cap = kDefaultExpCap);

struct TrainConfig {
    std::size_t epochs = 200;
    double lr = 1e-3;
    double weight_decay = 1e-3;
    std::size_t batch_size = 0;  // 0: one full-batch step per epoch
    double lr_factor = 0.5;
    int patience = 25;
    double min_lr = 1e-6;
    double exp_cap = kDefaultExpCap;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_bound = 0.0;
    double val_bound = 0.0;
    double lr = 0.0;
};

struct BoundEstimate {
    double value = 0.0;  // validation bound after the final epoch
    double best_value = 0.0;
    std::size_t best_epoch = 0;
    std::size_t clamped = 0;
    Design design;
    std::vector<EpochRecord> trace;
};

struct TrainedBound {
    BoundNetwork net;
    BoundEstimate estimate;
};

// Maximizes the bound with Adam plus a plateau scheduler monitoring the
// validation bound. The marginal permutation is redrawn every step.
TrainedBound train_bound(BoundNetwork net, const SimulatedDataset& data, const VariableEncoding& encoding,
                         const TrainConfig& cfg, Rng& rng);

// Bound on the held-out split with its fixed marginal pairing.
BoundEstimate estimate_mi(const BoundNetwork& net, const SimulatedDataset& data, const VariableEncoding& encoding,
                          double exp_cap = kDefaultExpCap);

void write_training_trace_csv(std::ostream& out, const std::vector<EpochRecord>& trace);

}  // namespace boed
