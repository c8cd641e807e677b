#pragma once

// Gaussian-process surrogate over flattened designs in [0,1]^D with an
// isotropic Matern-5/2 kernel, a constant prior mean (the sample mean of the
// observations) and Gaussian observation noise.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "boed/rng.hpp"

namespace boed {

struct GpHyper {
    double lengthscale = 0.3;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;
};

struct GpBounds {
    double lengthscale_lo = 0.05, lengthscale_hi = 10.0;
    double signal_lo = 1e-4, signal_hi = 100.0;
    double noise_lo = 1e-6, noise_hi = 1.0;
    bool operator==(const GpBounds&) const = default;
};

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;  // latent function variance, without observation noise
};

double matern52(double distance, double lengthscale, double signal_variance);

class GpState {
public:
    // Conditions on (X, u) with fixed hyperparameters. Rows of X are inputs.
    GpState(Eigen::MatrixXd X, Eigen::VectorXd u, GpHyper hyper);

    const Eigen::MatrixXd& inputs() const { return X_; }
    const Eigen::VectorXd& targets() const { return u_; }
    const GpHyper& hyper() const { return hyper_; }
    double prior_mean() const { return mean_; }
    double jitter() const { return jitter_; }
    double log_marginal_likelihood() const { return lml_; }

    GpPrediction predict(std::span<const double> x) const;
    // Largest posterior mean over the evaluated inputs.
    double incumbent() const;
    std::size_t incumbent_index() const;

private:
    Eigen::VectorXd cross_covariance(std::span<const double> x) const;

    Eigen::MatrixXd X_;
    Eigen::VectorXd u_;
    GpHyper hyper_;
    double mean_ = 0.0;
    double jitter_ = 0.0;
    double lml_ = 0.0;
    Eigen::MatrixXd chol_;   // lower factor of K + (noise + jitter) I
    Eigen::VectorXd alpha_;  // (K + noise I)^{-1} (u - mean)
};

// Multi-start coordinate search over log-hyperparameters maximizing the log
// marginal likelihood. Requires at least two observations.
GpState gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, const GpBounds& bounds, Rng& rng,
               std::size_t starts = 8);

// Closed-form EI for maximization.
double expected_improvement(double mean, double sd, double incumbent);
double expected_improvement(const GpState& gp, std::span<const double> x);

struct ProposalConfig {
    std::size_t candidates = 4096;
    std::size_t refine_steps = 50;
    double initial_step = 0.1;
    bool operator==(const ProposalConfig&) const = default;
};

// EI argmax over the unit hypercube: uniform candidates, then pattern search
// from the best one. The returned point lies in [0,1]^D.
std::vector<double> propose_next(const GpState& gp, const ProposalConfig& cfg, Rng& rng);

// n points in [0,1]^D, one per stratum along every axis.
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim, Rng& rng);

}  // namespace boed
