#pragma once

// Feed-forward critic T(v, y): one summary sub-network per block of trials,
// whose outputs are concatenated with the encoded variable of interest and
// passed through a head network with a scalar output. Gradients are written
// out by hand for this fixed family of architectures.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "boed/priors.hpp"
#include "boed/rng.hpp"

namespace boed {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1 };

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::Identity;

    bool operator==(const DenseLayer& o) const {
        return activation == o.activation && weight == o.weight && bias == o.bias;
    }
};

// Samples are columns throughout.
class Mlp {
public:
    struct Cache {
        // outputs[0] is the input batch, outputs[i] the post-activation of layer i-1.
        std::vector<Eigen::MatrixXd> outputs;
    };

    Mlp() = default;
    // dims = {input, hidden..., output}; ReLU on hidden layers, identity on the output.
    explicit Mlp(const std::vector<std::size_t>& dims);

    void init_he_uniform(Rng& rng);
    void set_zero();

    std::size_t input_dim() const { return layers_.front().weight.cols(); }
    std::size_t output_dim() const { return layers_.back().weight.rows(); }
    std::size_t parameter_count() const;
    std::vector<std::size_t> dims() const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const;

    // Accumulates parameter gradients into `grad` (same shapes) given
    // dL/d(output). Returns dL/d(input) when `want_input_grad`.
    Eigen::MatrixXd backward(const Cache& cache, Eigen::MatrixXd grad_output, Mlp& grad,
                             bool want_input_grad) const;

    bool operator==(const Mlp&) const = default;

private:
    std::vector<DenseLayer> layers_;
};

struct NetworkShape {
    std::size_t blocks = 2;
    std::size_t block_input_dim = 120;  // trials * (arms + 1)
    std::size_t summary_dim = 6;
    std::size_t variable_dim = 3;
    std::vector<std::size_t> summary_hidden{64, 32};
    std::vector<std::size_t> head_hidden{32, 32};

    // Layer sizes used for each task: sub-networks 64/32 with 6, 8, 6, 8
    // summary outputs (MD, PE WSLTS, PE AEG, PE GLS); the head is 32/32 for
    // MD and 64/32 for PE.
    static NetworkShape for_task(const PriorSpec& spec, std::size_t blocks, std::size_t trials,
                                 std::size_t arms);
    bool operator==(const NetworkShape&) const = default;
};

// Inputs for a batch of samples: one (trials*(arms+1)) x N matrix per block
// and the encoded variables (variable_dim x N).
struct EncodedBatch {
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::MatrixXd variables;
    std::size_t size() const { return static_cast<std::size_t>(variables.cols()); }
};

class BoundNetwork {
public:
    struct Evaluation {
        std::vector<Mlp::Cache> summary_caches;
        Eigen::MatrixXd summaries;             // (blocks*summary_dim) x N
        std::vector<Mlp::Cache> head_caches;   // one per variable set
        std::vector<Eigen::RowVectorXd> outputs;
    };

    BoundNetwork() = default;
    explicit BoundNetwork(const NetworkShape& shape);
    static BoundNetwork create(const NetworkShape& shape, Rng& rng);

    const NetworkShape& shape() const { return shape_; }
    std::vector<Mlp>& summaries() { return summaries_; }
    const std::vector<Mlp>& summaries() const { return summaries_; }
    Mlp& head() { return head_; }
    const Mlp& head() const { return head_; }

    // Same shapes, all zeros (gradient accumulator).
    BoundNetwork zeros_like() const;
    std::size_t parameter_count() const;

    // Parameter tensors in a fixed order: sub-networks by block, then the
    // head; within a network layer by layer, weight then bias.
    std::vector<std::span<double>> parameter_spans();
    std::vector<std::span<const double>> parameter_spans() const;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    bool all_finite() const;

    // Summary statistics of the batch's blocks, concatenated.
    Eigen::MatrixXd summarize(const EncodedBatch& batch, std::vector<Mlp::Cache>* caches = nullptr) const;
    // Critic values for summaries paired column-wise with `variables`.
    Eigen::RowVectorXd critic(const Eigen::MatrixXd& summaries, const Eigen::MatrixXd& variables,
                              Mlp::Cache* cache = nullptr) const;

    // Evaluates the critic for the batch's data paired with each variable
    // set (e.g. joint and permuted variables), sharing the summary pass.
    Evaluation evaluate(const EncodedBatch& batch, const std::vector<Eigen::MatrixXd>& variable_sets) const;
    // Gradient of sum_s sum_i g_s[i] * T_s[i] for per-sample output gradients g_s.
    BoundNetwork backward(const Evaluation& eval, const std::vector<Eigen::RowVectorXd>& output_grads) const;

    // Single sample convenience.
    double forward(std::span<const double> variable, const std::vector<std::vector<double>>& blocks) const;

    bool operator==(const BoundNetwork&) const = default;

private:
    NetworkShape shape_;
    std::vector<Mlp> summaries_;
    Mlp head_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

// Minimizes: p <- p - lr * mhat / (sqrt(vhat) + eps) - lr * wd * p.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads);

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::int64_t steps() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Reduce-on-plateau for a maximized metric: after `patience` consecutive
// epochs without strict improvement the rate is multiplied by `factor`.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor = 0.5, int patience = 25, double min_lr = 1e-6)
        : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr) {}

    double step(double metric);

    double lr() const { return lr_; }
    int reductions() const { return reductions_; }
    int epochs_since_improvement() const { return bad_epochs_; }
    double best() const { return best_; }

private:
    double lr_;
    double factor_;
    int patience_;
    double min_lr_;
    double best_ = -std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
    int reductions_ = 0;
};

}  // namespace boed
