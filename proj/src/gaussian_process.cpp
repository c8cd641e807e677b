#include "boed/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "boed/errors.hpp"

namespace boed {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917;
constexpr double kLog2Pi = 1.83787706640934548356066;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double distance(const Eigen::MatrixXd& X, Eigen::Index i, std::span<const double> x) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double diff = X(i, d) - x[static_cast<std::size_t>(d)];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

double matern52(double r, double ell, double sigma2) {
    const double a = kSqrt5 * r / ell;
    return sigma2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

GpState::GpState(Eigen::MatrixXd X, Eigen::VectorXd u, GpHyper hyper)
    : X_(std::move(X)), u_(std::move(u)), hyper_(hyper) {
    const Eigen::Index n = X_.rows();
    if (n < 1 || u_.size() != n) throw DomainError("GP needs matching, non-empty inputs and targets");
    if (!(hyper_.lengthscale > 0 && hyper_.signal_variance > 0 && hyper_.noise_variance >= 0)) {
        throw DomainError("GP hyperparameters must be positive");
    }
    mean_ = u_.mean();

    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double r = (X_.row(i) - X_.row(j)).norm();
            K(i, j) = K(j, i) = matern52(r, hyper_.lengthscale, hyper_.signal_variance);
        }
    }
    K.diagonal().array() += hyper_.noise_variance;

    // Escalating jitter until the factorization succeeds.
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    for (int attempt = 0;; ++attempt) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) break;
        if (attempt > 10) {
            throw NumericalError("GP covariance is not positive definite after jitter " + std::to_string(jitter) +
                                 " (n=" + std::to_string(n) + ", lengthscale=" + std::to_string(hyper_.lengthscale) +
                                 ", signal=" + std::to_string(hyper_.signal_variance) + ")");
        }
        jitter = jitter == 0.0 ? 1e-12 * hyper_.signal_variance : jitter * 10.0;
    }
    jitter_ = jitter;
    chol_ = llt.matrixL();
    const Eigen::VectorXd centered = u_.array() - mean_;
    alpha_ = llt.solve(centered);
    lml_ = -0.5 * centered.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::VectorXd GpState::cross_covariance(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != X_.cols()) throw DomainError("GP query has the wrong dimension");
    Eigen::VectorXd k(X_.rows());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        k(i) = matern52(distance(X_, i, x), hyper_.lengthscale, hyper_.signal_variance);
    }
    return k;
}

GpPrediction GpState::predict(std::span<const double> x) const {
    const Eigen::VectorXd k = cross_covariance(x);
    GpPrediction p;
    p.mean = mean_ + k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    p.variance = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
    return p;
}

std::size_t GpState::incumbent_index() const {
    std::size_t best = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        const Eigen::VectorXd row = X_.row(i).transpose();
        const double m = predict({row.data(), static_cast<std::size_t>(row.size())}).mean;
        if (m > top) {
            top = m;
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

double GpState::incumbent() const {
    const Eigen::VectorXd row = X_.row(static_cast<Eigen::Index>(incumbent_index())).transpose();
    return predict({row.data(), static_cast<std::size_t>(row.size())}).mean;
}

GpState gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, const GpBounds& bounds, Rng& rng,
               std::size_t starts) {
    if (X.rows() < 2) throw DomainError("gp_fit needs at least two observations");
    const double lo[3] = {std::log(bounds.lengthscale_lo), std::log(bounds.signal_lo), std::log(bounds.noise_lo)};
    const double hi[3] = {std::log(bounds.lengthscale_hi), std::log(bounds.signal_hi), std::log(bounds.noise_hi)};
    auto to_hyper = [](const double* t) { return GpHyper{std::exp(t[0]), std::exp(t[1]), std::exp(t[2])}; };
    auto objective = [&](const double* t) {
        try {
            return GpState(X, u, to_hyper(t)).log_marginal_likelihood();
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    double var = (u.array() - u.mean()).square().mean();
    if (!(var > 0.0)) var = bounds.signal_lo;

    double best_t[3] = {0.0, 0.0, 0.0};
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < std::max<std::size_t>(starts, 1); ++s) {
        double t[3];
        if (s == 0) {
            t[0] = std::log(0.3);
            t[1] = std::log(var);
            t[2] = std::log(0.1 * var);
        } else {
            for (int c = 0; c < 3; ++c) t[c] = lo[c] + (hi[c] - lo[c]) * uniform01(rng);
        }
        for (int c = 0; c < 3; ++c) t[c] = std::clamp(t[c], lo[c], hi[c]);

        double f = objective(t);
        double step = 1.0;
        for (int sweep = 0; sweep < 200 && step > 1e-3; ++sweep) {
            bool improved = false;
            for (int c = 0; c < 3; ++c) {
                for (double dir : {1.0, -1.0}) {
                    double trial[3] = {t[0], t[1], t[2]};
                    trial[c] = std::clamp(t[c] + dir * step, lo[c], hi[c]);
                    if (trial[c] == t[c]) continue;
                    const double ft = objective(trial);
                    if (ft > f) {
                        f = ft;
                        t[c] = trial[c];
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (f > best) {
            best = f;
            std::copy(t, t + 3, best_t);
        }
    }
    if (!std::isfinite(best)) throw NumericalError("GP hyperparameter search found no valid covariance");
    return GpState(X, u, to_hyper(best_t));
}

double expected_improvement(double mean, double sd, double incumbent) {
    const double gain = mean - incumbent;
    if (!(sd > 1e-12)) return std::max(0.0, gain);
    const double z = gain / sd;
    return std::max(0.0, gain * normal_cdf(z) + sd * normal_pdf(z));
}

double expected_improvement(const GpState& gp, std::span<const double> x) {
    const GpPrediction p = gp.predict(x);
    return expected_improvement(p.mean, std::sqrt(p.variance), gp.incumbent());
}

std::vector<double> propose_next(const GpState& gp, const ProposalConfig& cfg, Rng& rng) {
    const auto dim = static_cast<std::size_t>(gp.inputs().cols());
    const double incumbent = gp.incumbent();
    auto ei = [&](const std::vector<double>& x) {
        const GpPrediction p = gp.predict(x);
        return expected_improvement(p.mean, std::sqrt(p.variance), incumbent);
    };

    std::vector<double> best(dim);
    double best_ei = -1.0;
    std::vector<double> x(dim);
    for (std::size_t c = 0; c < std::max<std::size_t>(cfg.candidates, 1); ++c) {
        for (double& xi : x) xi = uniform01(rng);
        const double e = ei(x);
        if (e > best_ei) {
            best_ei = e;
            best = x;
        }
    }

    double step = cfg.initial_step;
    for (std::size_t it = 0; it < cfg.refine_steps; ++it) {
        std::vector<double> move = best;
        double move_ei = best_ei;
        for (std::size_t d = 0; d < dim; ++d) {
            for (double dir : {1.0, -1.0}) {
                std::vector<double> trial = best;
                trial[d] = std::clamp(trial[d] + dir * step, 0.0, 1.0);
                const double e = ei(trial);
                if (e > move_ei) {
                    move_ei = e;
                    move = std::move(trial);
                }
            }
        }
        if (move_ei > best_ei) {
            best = std::move(move);
            best_ei = move_ei;
        } else {
            step *= 0.5;
        }
    }
    for (double& xi : best) xi = std::clamp(xi, 0.0, 1.0);
    return best;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
        const auto strata = random_permutation(rng, n);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i][d] = (static_cast<double>(strata[i]) + uniform01(rng)) / static_cast<double>(n);
        }
    }
    return pts;
}

}  // namespace boed
