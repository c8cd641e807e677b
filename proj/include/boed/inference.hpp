#pragma once

// Amortized posteriors from a trained critic. Near the optimum of the bound
// T(v, y) = 1 + log p(v | y) / p(v), so p(v | y) is proportional to
// p(v) exp(T(v, y) - 1); every estimate here is self-normalized.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "boed/mi_estimator.hpp"

namespace boed {

// Model probabilities for one observation under a uniform model prior (or
// `prior` when given).
std::vector<double> posterior_md(const BoundNetwork& net, const Trajectory& y, const VariableEncoding& enc,
                                 std::span<const double> prior = {});

// Self-normalized importance weights over prior draws.
struct PosteriorSample {
    std::vector<std::vector<double>> values;  // draw-major, raw parameter scale
    std::vector<double> weights;
    double ess = 0.0;
    bool low_ess = false;  // ess below 1% of the number of draws

    std::size_t size() const { return weights.size(); }
    double mean(std::size_t coordinate) const;
    double sd(std::size_t coordinate) const;
};

double effective_sample_size(std::span<const double> weights);

// Draws must come from the prior; `encoded_draws` (variable_dim x n) may be
// supplied to avoid re-encoding them for every observation.
PosteriorSample posterior_pe(const BoundNetwork& net, const Trajectory& y,
                             const std::vector<VariableOfInterest>& draws, const VariableEncoding& enc,
                             const Eigen::MatrixXd* encoded_draws = nullptr);

// Self-normalized weights from critic values and log prior weights.
std::vector<double> normalized_weights(std::span<const double> critic, std::span<const double> log_prior = {});

struct ConfusionMatrix {
    std::size_t models = kModelCount;
    std::vector<std::size_t> counts;  // row-major, rows = true model

    explicit ConfusionMatrix(std::size_t m = kModelCount) : models(m), counts(m * m, 0) {}
    std::size_t& count(std::size_t truth, std::size_t inferred) { return counts[truth * models + inferred]; }
    std::size_t count(std::size_t truth, std::size_t inferred) const { return counts[truth * models + inferred]; }
    double rate(std::size_t truth, std::size_t inferred) const;
    std::size_t total() const;
};

// Index of the largest probability, lowest index on ties.
std::size_t argmax_lowest(std::span<const double> p);

using ModelClassifier = std::function<std::size_t(const Trajectory&)>;

// n_test simulated observations per true model (parameters from the prior).
ConfusionMatrix confusion_matrix(const ModelClassifier& classify, const GenerativeModel& model,
                                 const Design& design, std::size_t n_test, Rng& rng);
ConfusionMatrix confusion_matrix(const BoundNetwork& net, const GenerativeModel& model, const Design& design,
                                 std::size_t n_test, Rng& rng);

// Weighted Gaussian KDE of one coordinate. Without an explicit bandwidth,
// Silverman's rule on the weighted sample is used (1.06 sd ess^{-1/5}); that
// requires ess >= 10.
std::vector<double> marginal_density(const PosteriorSample& ps, std::size_t coordinate,
                                     std::span<const double> grid, std::optional<double> bandwidth = {});
double silverman_bandwidth(const PosteriorSample& ps, std::size_t coordinate);

// Mean of per-observation densities.
std::vector<double> average_marginal_density(std::span<const PosteriorSample> samples, std::size_t coordinate,
                                             std::span<const double> grid);

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
void write_density_csv(std::ostream& out, std::span<const double> grid,
                       const std::vector<std::pair<std::string, std::vector<double>>>& columns);
void write_posterior_csv(std::ostream& out, const PosteriorSample& ps, std::span<const std::string> names);

}  // namespace boed
