#include "boed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "boed/errors.hpp"

namespace boed {

namespace {

EncodedBatch single_observation(const Trajectory& y) {
    EncodedBatch b;
    const std::size_t width = block_input_dim(y.trials, y.arms);
    for (std::size_t blk = 0; blk < y.blocks; ++blk) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(width), 1);
        encode_block(y, blk, {m.data(), width});
        b.blocks.push_back(std::move(m));
    }
    b.variables.resize(0, 1);
    return b;
}

// Critic values of y against every column of `variables`.
Eigen::RowVectorXd critic_against(const BoundNetwork& net, const Trajectory& y, const Eigen::MatrixXd& variables) {
    const Eigen::MatrixXd s = net.summarize(single_observation(y));
    return net.critic(s.replicate(1, variables.cols()), variables);
}

}  // namespace

std::vector<double> normalized_weights(std::span<const double> critic, std::span<const double> log_prior) {
    if (!log_prior.empty() && log_prior.size() != critic.size()) throw DomainError("prior and critic sizes differ");
    std::vector<double> logw(critic.size());
    for (std::size_t i = 0; i < critic.size(); ++i) logw[i] = critic[i] - 1.0 + (log_prior.empty() ? 0.0 : log_prior[i]);
    const double top = *std::max_element(logw.begin(), logw.end());
    double z = 0.0;
    for (double& w : logw) {
        w = std::exp(w - top);
        z += w;
    }
    for (double& w : logw) w /= z;
    return logw;
}

std::vector<double> posterior_md(const BoundNetwork& net, const Trajectory& y, const VariableEncoding& enc,
                                 std::span<const double> prior) {
    if (enc.task != Task::ModelDiscrimination) throw DomainError("posterior_md needs a model-discrimination encoding");
    const auto m = static_cast<Eigen::Index>(enc.model_count);
    const Eigen::RowVectorXd t = critic_against(net, y, Eigen::MatrixXd::Identity(m, m));
    std::vector<double> log_prior;
    if (!prior.empty()) {
        if (static_cast<Eigen::Index>(prior.size()) != m) throw DomainError("model prior has the wrong size");
        for (double p : prior) log_prior.push_back(std::log(p));
    }
    return normalized_weights({t.data(), static_cast<std::size_t>(t.size())}, log_prior);
}

double effective_sample_size(std::span<const double> w) {
    double s = 0.0, s2 = 0.0;
    for (double x : w) {
        s += x;
        s2 += x * x;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

double PosteriorSample::mean(std::size_t c) const {
    double m = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * values[i][c];
    return m;
}

double PosteriorSample::sd(std::size_t c) const {
    const double m = mean(c);
    double v = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) v += weights[i] * (values[i][c] - m) * (values[i][c] - m);
    return std::sqrt(std::max(0.0, v));
}

PosteriorSample posterior_pe(const BoundNetwork& net, const Trajectory& y, const std::vector<VariableOfInterest>& draws,
                             const VariableEncoding& enc, const Eigen::MatrixXd* encoded_draws) {
    if (enc.task != Task::ParameterEstimation) throw DomainError("posterior_pe needs a parameter-estimation encoding");
    if (draws.empty()) throw DomainError("posterior_pe needs prior draws");
    Eigen::MatrixXd local;
    if (!encoded_draws) {
        local = encode_variables(draws, enc);
        encoded_draws = &local;
    }
    if (static_cast<std::size_t>(encoded_draws->cols()) != draws.size()) throw DomainError("encoded draws mismatch");
    const Eigen::RowVectorXd t = critic_against(net, y, *encoded_draws);
    PosteriorSample ps;
    ps.weights = normalized_weights({t.data(), static_cast<std::size_t>(t.size())});
    ps.values.reserve(draws.size());
    for (const auto& d : draws) ps.values.push_back(d.params);
    ps.ess = effective_sample_size(ps.weights);
    ps.low_ess = ps.ess < 0.01 * static_cast<double>(draws.size());
    return ps;
}

double ConfusionMatrix::rate(std::size_t truth, std::size_t inferred) const {
    std::size_t row = 0;
    for (std::size_t j = 0; j < models; ++j) row += count(truth, j);
    return row == 0 ? 0.0 : static_cast<double>(count(truth, inferred)) / static_cast<double>(row);
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

std::size_t argmax_lowest(std::span<const double> p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

ConfusionMatrix confusion_matrix(const ModelClassifier& classify, const GenerativeModel& model, const Design& design,
                                 std::size_t n_test, Rng& rng) {
    if (!model.sample_for_model) throw DomainError("confusion_matrix needs a model-conditioned prior sampler");
    ConfusionMatrix cm(model.encoding.model_count);
    for (std::size_t truth = 0; truth < cm.models; ++truth) {
        for (std::size_t i = 0; i < n_test; ++i) {
            const VariableOfInterest v = model.sample_for_model(truth, rng);
            const Trajectory y = model.simulate(v, design, rng);
            const std::size_t inferred = classify(y);
            if (inferred >= cm.models) throw DomainError("classifier returned an unknown model");
            ++cm.count(truth, inferred);
        }
    }
    return cm;
}

ConfusionMatrix confusion_matrix(const BoundNetwork& net, const GenerativeModel& model, const Design& design,
                                 std::size_t n_test, Rng& rng) {
    return confusion_matrix(
        [&](const Trajectory& y) { return argmax_lowest(posterior_md(net, y, model.encoding)); }, model, design,
        n_test, rng);
}

double silverman_bandwidth(const PosteriorSample& ps, std::size_t coordinate) {
    const double ess = effective_sample_size(ps.weights);
    if (ess < 10.0) throw DomainError("posterior weights are degenerate (ess " + std::to_string(ess) + " < 10)");
    const double sd = ps.sd(coordinate);
    if (!(sd > 0.0)) throw DomainError("posterior sample has zero spread");
    return 1.06 * sd * std::pow(ess, -0.2);
}

std::vector<double> marginal_density(const PosteriorSample& ps, std::size_t coordinate, std::span<const double> grid,
                                     std::optional<double> bandwidth) {
    if (ps.size() == 0) throw DomainError("empty posterior sample");
    if (coordinate >= ps.values.front().size()) throw DomainError("coordinate out of range");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(ps, coordinate);
    if (!(h > 0.0)) throw DomainError("bandwidth must be positive");
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double w = ps.weights[i];
        if (w == 0.0) continue;
        const double x = ps.values[i][coordinate];
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double z = (grid[g] - x) / h;
            out[g] += w * norm * std::exp(-0.5 * z * z);
        }
    }
    return out;
}

std::vector<double> average_marginal_density(std::span<const PosteriorSample> samples, std::size_t coordinate,
                                             std::span<const double> grid) {
    if (samples.empty()) throw DomainError("no posterior samples to average");
    std::vector<double> acc(grid.size(), 0.0);
    for (const PosteriorSample& ps : samples) {
        const auto d = marginal_density(ps, coordinate, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) acc[g] += d[g];
    }
    for (double& a : acc) a /= static_cast<double>(samples.size());
    return acc;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true_model,inferred_model,count,rate\n";
    out.precision(17);
    for (std::size_t i = 0; i < cm.models; ++i)
        for (std::size_t j = 0; j < cm.models; ++j)
            out << i << ',' << j << ',' << cm.count(i, j) << ',' << cm.rate(i, j) << '\n';
}

void write_density_csv(std::ostream& out, std::span<const double> grid,
                       const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
    out << "x";
    for (const auto& [name, _] : columns) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out << grid[g];
        for (const auto& [_, values] : columns) out << ',' << values.at(g);
        out << '\n';
    }
}

void write_posterior_csv(std::ostream& out, const PosteriorSample& ps, std::span<const std::string> names) {
    for (const auto& n : names) out << n << ',';
    out << "weight\n";
    out.precision(17);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        for (double v : ps.values[i]) out << v << ',';
        out << ps.weights[i] << '\n';
    }
}

}  // namespace boed
