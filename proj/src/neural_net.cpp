#include "boed/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "boed/errors.hpp"

namespace boed {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw DomainError("an MLP needs at least input and output sizes");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.weight = Eigen::MatrixXd::Zero(dims[i + 1], dims[i]);
        layer.bias = Eigen::VectorXd::Zero(dims[i + 1]);
        layer.activation = (i + 2 == dims.size()) ? Activation::Identity : Activation::Relu;
        layers_.push_back(std::move(layer));
    }
}

void Mlp::init_he_uniform(Rng& rng) {
    for (DenseLayer& layer : layers_) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
            for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
                layer.weight(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
        layer.bias.setZero();
    }
}

void Mlp::set_zero() {
    for (DenseLayer& layer : layers_) {
        layer.weight.setZero();
        layer.bias.setZero();
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<std::size_t> Mlp::dims() const {
    std::vector<std::size_t> d{input_dim()};
    for (const DenseLayer& l : layers_) d.push_back(l.weight.rows());
    return d;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache* cache) const {
    if (static_cast<std::size_t>(input.rows()) != input_dim()) {
        throw DomainError("MLP input has " + std::to_string(input.rows()) + " rows, expected " +
                          std::to_string(input_dim()));
    }
    if (cache) {
        cache->outputs.resize(layers_.size() + 1);
        cache->outputs[0] = input;
    }
    Eigen::MatrixXd a = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        Eigen::MatrixXd z(l.weight.rows(), a.cols());
        z.noalias() = l.weight * a;
        z.colwise() += l.bias;
        if (l.activation == Activation::Relu) z = z.cwiseMax(0.0);
        a = std::move(z);
        if (cache) cache->outputs[i + 1] = a;
    }
    return a;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, Eigen::MatrixXd g, Mlp& grad, bool want_input_grad) const {
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const DenseLayer& l = layers_[idx];
        if (l.activation == Activation::Relu) {
            g = (cache.outputs[idx + 1].array() > 0.0).select(g, 0.0);
        }
        DenseLayer& gl = grad.layers_[idx];
        gl.weight.noalias() += g * cache.outputs[idx].transpose();
        gl.bias += g.rowwise().sum();
        if (idx > 0 || want_input_grad) {
            Eigen::MatrixXd next(l.weight.cols(), g.cols());
            next.noalias() = l.weight.transpose() * g;
            g = std::move(next);
        }
    }
    return want_input_grad ? g : Eigen::MatrixXd();
}

// ---------------------------------------------------------------------------
// NetworkShape / BoundNetwork

NetworkShape NetworkShape::for_task(const PriorSpec& spec, std::size_t blocks, std::size_t trials,
                                    std::size_t arms) {
    NetworkShape s;
    s.blocks = blocks;
    s.block_input_dim = trials * (arms + 1);
    s.summary_hidden = {64, 32};
    if (spec.task == Task::ModelDiscrimination) {
        s.summary_dim = 6;
        s.variable_dim = kModelCount;
        s.head_hidden = {32, 32};
    } else {
        s.summary_dim = spec.model == Model::Aeg ? 6 : 8;
        s.variable_dim = model_arity(spec.model);
        s.head_hidden = {64, 32};
    }
    return s;
}

BoundNetwork::BoundNetwork(const NetworkShape& shape) : shape_(shape) {
    if (shape.blocks < 1 || shape.block_input_dim < 1 || shape.summary_dim < 1 || shape.variable_dim < 1) {
        throw DomainError("network dimensions must be positive");
    }
    std::vector<std::size_t> sub{shape.block_input_dim};
    sub.insert(sub.end(), shape.summary_hidden.begin(), shape.summary_hidden.end());
    sub.push_back(shape.summary_dim);
    for (std::size_t b = 0; b < shape.blocks; ++b) summaries_.emplace_back(sub);

    std::vector<std::size_t> head{shape.blocks * shape.summary_dim + shape.variable_dim};
    head.insert(head.end(), shape.head_hidden.begin(), shape.head_hidden.end());
    head.push_back(1);
    head_ = Mlp(head);
}

BoundNetwork BoundNetwork::create(const NetworkShape& shape, Rng& rng) {
    BoundNetwork net(shape);
    for (Mlp& m : net.summaries_) m.init_he_uniform(rng);
    net.head_.init_he_uniform(rng);
    return net;
}

BoundNetwork BoundNetwork::zeros_like() const { return BoundNetwork(shape_); }

std::size_t BoundNetwork::parameter_count() const {
    std::size_t n = head_.parameter_count();
    for (const Mlp& m : summaries_) n += m.parameter_count();
    return n;
}

std::vector<std::span<double>> BoundNetwork::parameter_spans() {
    std::vector<std::span<double>> out;
    auto add = [&](Mlp& m) {
        for (DenseLayer& l : m.layers()) {
            out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
            out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
        }
    };
    for (Mlp& m : summaries_) add(m);
    add(head_);
    return out;
}

std::vector<std::span<const double>> BoundNetwork::parameter_spans() const {
    auto spans = const_cast<BoundNetwork*>(this)->parameter_spans();
    return {spans.begin(), spans.end()};
}

std::vector<double> BoundNetwork::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (auto s : parameter_spans()) flat.insert(flat.end(), s.begin(), s.end());
    return flat;
}

void BoundNetwork::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw DomainError("parameter vector has the wrong length");
    std::size_t offset = 0;
    for (auto s : parameter_spans()) {
        std::copy_n(flat.begin() + offset, s.size(), s.begin());
        offset += s.size();
    }
}

bool BoundNetwork::all_finite() const {
    for (auto s : parameter_spans())
        for (double x : s)
            if (!std::isfinite(x)) return false;
    return true;
}

Eigen::MatrixXd BoundNetwork::summarize(const EncodedBatch& batch, std::vector<Mlp::Cache>* caches) const {
    if (batch.blocks.size() != shape_.blocks) {
        throw DomainError("batch has " + std::to_string(batch.blocks.size()) + " blocks, network expects " +
                          std::to_string(shape_.blocks));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index s = static_cast<Eigen::Index>(shape_.summary_dim);
    Eigen::MatrixXd out(s * static_cast<Eigen::Index>(shape_.blocks), n);
    if (caches) caches->assign(shape_.blocks, {});
    for (std::size_t b = 0; b < shape_.blocks; ++b) {
        if (batch.blocks[b].cols() != n) throw DomainError("block and variable batches differ in size");
        out.middleRows(static_cast<Eigen::Index>(b) * s, s) =
            summaries_[b].forward(batch.blocks[b], caches ? &(*caches)[b] : nullptr);
    }
    return out;
}

Eigen::RowVectorXd BoundNetwork::critic(const Eigen::MatrixXd& summaries, const Eigen::MatrixXd& variables,
                                        Mlp::Cache* cache) const {
    if (static_cast<std::size_t>(variables.rows()) != shape_.variable_dim) {
        throw DomainError("variable encoding has " + std::to_string(variables.rows()) + " rows, expected " +
                          std::to_string(shape_.variable_dim));
    }
    if (variables.cols() != summaries.cols()) throw DomainError("summaries and variables differ in batch size");
    Eigen::MatrixXd input(summaries.rows() + variables.rows(), summaries.cols());
    input.topRows(summaries.rows()) = summaries;
    input.bottomRows(variables.rows()) = variables;
    return head_.forward(input, cache).row(0);
}

BoundNetwork::Evaluation BoundNetwork::evaluate(const EncodedBatch& batch,
                                                const std::vector<Eigen::MatrixXd>& variable_sets) const {
    Evaluation e;
    e.summaries = summarize(batch, &e.summary_caches);
    e.head_caches.resize(variable_sets.size());
    for (std::size_t s = 0; s < variable_sets.size(); ++s) {
        e.outputs.push_back(critic(e.summaries, variable_sets[s], &e.head_caches[s]));
    }
    return e;
}

BoundNetwork BoundNetwork::backward(const Evaluation& eval,
                                    const std::vector<Eigen::RowVectorXd>& output_grads) const {
    if (output_grads.size() != eval.head_caches.size()) throw DomainError("one output gradient per variable set");
    BoundNetwork grad = zeros_like();
    const Eigen::Index srows = eval.summaries.rows();
    Eigen::MatrixXd grad_summaries = Eigen::MatrixXd::Zero(srows, eval.summaries.cols());
    for (std::size_t s = 0; s < output_grads.size(); ++s) {
        Eigen::MatrixXd g_in = head_.backward(eval.head_caches[s], output_grads[s], grad.head_, true);
        grad_summaries += g_in.topRows(srows);
    }
    const Eigen::Index sd = static_cast<Eigen::Index>(shape_.summary_dim);
    for (std::size_t b = 0; b < shape_.blocks; ++b) {
        summaries_[b].backward(eval.summary_caches[b],
                               grad_summaries.middleRows(static_cast<Eigen::Index>(b) * sd, sd),
                               grad.summaries_[b], false);
    }
    return grad;
}

double BoundNetwork::forward(std::span<const double> variable,
                             const std::vector<std::vector<double>>& blocks) const {
    EncodedBatch batch;
    batch.variables = Eigen::Map<const Eigen::VectorXd>(variable.data(), static_cast<Eigen::Index>(variable.size()));
    for (const auto& blk : blocks) {
        batch.blocks.emplace_back(Eigen::Map<const Eigen::VectorXd>(blk.data(), static_cast<Eigen::Index>(blk.size())));
    }
    return critic(summarize(batch), batch.variables)(0);
}

// ---------------------------------------------------------------------------
// Adam

void AdamState::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size()) throw DomainError("Adam: parameter/gradient tensor count mismatch");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw DomainError("Adam: parameter layout changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != m_[i].size()) {
            throw DomainError("Adam: tensor shape mismatch");
        }
        for (double g : grads[i])
            if (!std::isfinite(g)) throw TrainingError("non-finite gradient passed to Adam");
    }

    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = m_[i];
        auto& v = v_[i];
        const auto g = grads[i];
        auto p = params[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.lr * cfg_.weight_decay * p[j];
        }
    }
}

// ---------------------------------------------------------------------------
// PlateauScheduler

double PlateauScheduler::step(double metric) {
    if (metric > best_) {
        best_ = metric;
        bad_epochs_ = 0;
        return lr_;
    }
    if (++bad_epochs_ >= patience_) {
        lr_ = std::max(lr_ * factor_, min_lr_);
        bad_epochs_ = 0;
        ++reductions_;
    }
    return lr_;
}

}  // namespace boed
