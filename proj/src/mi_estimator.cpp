#include "boed/mi_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include "boed/errors.hpp"

namespace boed {

namespace {

const double kInvE = std::exp(-1.0);

Eigen::MatrixXd permuted_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> perm) {
    if (static_cast<Eigen::Index>(perm.size()) != m.cols()) throw DomainError("permutation length mismatch");
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(perm[i]));
    return out;
}

EncodedBatch slice(const EncodedBatch& full, std::span<const std::size_t> cols) {
    EncodedBatch b;
    const auto n = static_cast<Eigen::Index>(cols.size());
    b.variables.resize(full.variables.rows(), n);
    for (Eigen::Index c = 0; c < n; ++c) b.variables.col(c) = full.variables.col(static_cast<Eigen::Index>(cols[c]));
    for (const auto& blk : full.blocks) {
        Eigen::MatrixXd m(blk.rows(), n);
        for (Eigen::Index c = 0; c < n; ++c) m.col(c) = blk.col(static_cast<Eigen::Index>(cols[c]));
        b.blocks.push_back(std::move(m));
    }
    return b;
}

std::string describe(const NwjValue& v) {
    std::ostringstream os;
    os << "bound=" << v.value << " joint_mean=" << v.joint_mean << " marginal_term=" << v.marginal_term
       << " clamped=" << v.clamped;
    return os.str();
}

}  // namespace

GenerativeModel GenerativeModel::from_prior(const PriorSpec& spec, std::size_t trials) {
    spec.validate();
    GenerativeModel g;
    g.encoding = VariableEncoding::for_prior(spec);
    g.trials = trials;
    g.sample_variable = [spec](Rng& rng) { return boed::sample_variable(spec, rng); };
    g.sample_for_model = [spec](std::size_t m, Rng& rng) {
        VariableOfInterest v;
        v.model = model_from_index(m);
        for (const ScalarPrior& p : spec.params[m]) v.params.push_back(p.sample(rng));
        return v;
    };
    g.simulate = [trials](const VariableOfInterest& v, const Design& d, Rng& rng) {
        return simulate_model(v.model, v.params, d, trials, rng);
    };
    return g;
}

SimulatedDataset simulate_dataset(const GenerativeModel& model, const Design& design, std::size_t n,
                                  double validation_fraction, Rng& rng) {
    if (n < 2) throw DomainError("a dataset needs at least two samples");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw DomainError("validation fraction must lie in (0, 1)");
    }
    SimulatedDataset data;
    data.design = design;
    data.variables.reserve(n);
    data.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.variables.push_back(model.sample_variable(rng));
        data.trajectories.push_back(model.simulate(data.variables.back(), design, rng));
    }
    auto order = random_permutation(rng, n);
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    data.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    data.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    data.validation_permutation = random_permutation(rng, n_val);
    return data;
}

NwjValue nwj_from_outputs(const Eigen::RowVectorXd& joint, const Eigen::RowVectorXd& marginal, double exp_cap) {
    if (joint.size() == 0 || marginal.size() == 0) throw DomainError("NWJ bound needs non-empty batches");
    NwjValue r;
    r.joint_mean = joint.mean();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < marginal.size(); ++i) {
        double t = marginal(i);
        if (t > exp_cap) {
            t = exp_cap;
            ++r.clamped;
        }
        acc += std::exp(t - 1.0);
    }
    r.marginal_term = acc / static_cast<double>(marginal.size());
    r.value = r.joint_mean - r.marginal_term;
    return r;
}

NwjValue nwj_bound(const BoundNetwork& net, const EncodedBatch& batch, std::span<const std::size_t> permutation,
                   double exp_cap) {
    const Eigen::MatrixXd s = net.summarize(batch);
    const Eigen::RowVectorXd joint = net.critic(s, batch.variables);
    const Eigen::RowVectorXd marginal = net.critic(s, permuted_columns(batch.variables, permutation));
    return nwj_from_outputs(joint, marginal, exp_cap);
}

NwjValue nwj_bound_gradient(const BoundNetwork& net, const EncodedBatch& batch,
                            std::span<const std::size_t> permutation, BoundNetwork& gradient, double exp_cap) {
    const auto eval = net.evaluate(batch, {batch.variables, permuted_columns(batch.variables, permutation)});
    const NwjValue v = nwj_from_outputs(eval.outputs[0], eval.outputs[1], exp_cap);
    const double n = static_cast<double>(batch.size());
    Eigen::RowVectorXd g_joint = Eigen::RowVectorXd::Constant(eval.outputs[0].size(), 1.0 / n);
    Eigen::RowVectorXd g_marg(eval.outputs[1].size());
    for (Eigen::Index i = 0; i < g_marg.size(); ++i) {
        const double t = eval.outputs[1](i);
        g_marg(i) = t > exp_cap ? 0.0 : -std::exp(t - 1.0) / n;
    }
    gradient = net.backward(eval, {g_joint, g_marg});
    return v;
}

TrainedBound train_bound(BoundNetwork net, const SimulatedDataset& data, const VariableEncoding& encoding,
                         const TrainConfig& cfg, Rng& rng) {
    if (cfg.epochs < 1) throw DomainError("training needs at least one epoch");
    const EncodedBatch train = encode_batch(data.variables, data.trajectories, encoding, data.train);
    const EncodedBatch val = encode_batch(data.variables, data.trajectories, encoding, data.validation);

    AdamState adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    PlateauScheduler scheduler(cfg.lr, cfg.lr_factor, cfg.patience, cfg.min_lr);

    TrainedBound out;
    out.estimate.design = data.design;
    out.estimate.best_value = -std::numeric_limits<double>::infinity();
    const std::size_t n_train = train.size();
    const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size >= n_train) ? n_train : cfg.batch_size;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double train_sum = 0.0;
        std::size_t steps = 0;
        auto step_on = [&](const EncodedBatch& b) {
            const auto perm = random_permutation(rng, b.size());
            BoundNetwork grad;
            const NwjValue v = nwj_bound_gradient(net, b, perm, grad, cfg.exp_cap);
            if (!std::isfinite(v.value)) {
                throw TrainingError("non-finite training bound at epoch " + std::to_string(epoch) + ": " + describe(v));
            }
            out.estimate.clamped += v.clamped;
            // Adam minimizes; ascend the bound.
            for (auto s : grad.parameter_spans())
                for (double& g : s) g = -g;
            adam.step(net.parameter_spans(), std::as_const(grad).parameter_spans());
            train_sum += v.value;
            ++steps;
        };
        if (batch == n_train) {
            step_on(train);
        } else {
            const auto order = random_permutation(rng, n_train);
            for (std::size_t start = 0; start + batch <= n_train; start += batch) {
                step_on(slice(train, std::span(order).subspan(start, batch)));
            }
        }
        if (!net.all_finite()) throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch));

        const NwjValue vb = nwj_bound(net, val, data.validation_permutation, cfg.exp_cap);
        if (!std::isfinite(vb.value)) {
            throw TrainingError("non-finite validation bound at epoch " + std::to_string(epoch) + ": " + describe(vb));
        }
        out.estimate.trace.push_back({epoch, train_sum / static_cast<double>(steps), vb.value, adam.lr()});
        if (vb.value > out.estimate.best_value) {
            out.estimate.best_value = vb.value;
            out.estimate.best_epoch = epoch;
        }
        adam.set_lr(scheduler.step(vb.value));
        out.estimate.value = vb.value;
    }
    out.net = std::move(net);
    return out;
}

BoundEstimate estimate_mi(const BoundNetwork& net, const SimulatedDataset& data, const VariableEncoding& encoding,
                          double exp_cap) {
    const EncodedBatch val = encode_batch(data.variables, data.trajectories, encoding, data.validation);
    const NwjValue v = nwj_bound(net, val, data.validation_permutation, exp_cap);
    BoundEstimate e;
    e.value = v.value;
    e.best_value = v.value;
    e.clamped = v.clamped;
    e.design = data.design;
    return e;
}

void write_training_trace_csv(std::ostream& out, const std::vector<EpochRecord>& trace) {
    out << "epoch,train_bound,val_bound,lr\n";
    out.precision(17);
    for (const EpochRecord& r : trace) {
        out << r.epoch << ',' << r.train_bound << ',' << r.val_bound << ',' << r.lr << '\n';
    }
}

}  // namespace boed
