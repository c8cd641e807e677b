#include "boed/bandit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "boed/errors.hpp"

namespace boed {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

void require_unit(double x, const char* name) {
    if (!in_unit(x)) {
        throw DomainError(std::string(name) + " must lie in [0, 1], got " + std::to_string(x));
    }
}

// Uniform choice among the arms whose score equals the maximum score.
template <class Score>
std::size_t argmax_uniform(std::size_t arms, std::ptrdiff_t excluded, Score score, Rng& rng) {
    std::vector<std::size_t> best;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < arms; ++k) {
        if (static_cast<std::ptrdiff_t>(k) == excluded) continue;
        const double s = score(k);
        if (s > top) {
            top = s;
            best.assign(1, k);
        } else if (s == top) {
            best.push_back(k);
        }
    }
    return best.size() == 1 ? best.front() : uniform_pick(rng, best);
}

// Draw from Beta(alpha^lambda, beta^lambda). Beyond ~1e12 the distribution
// is a point mass for every practical purpose, so the mean is returned
// (computed in log space to survive alpha^lambda overflowing).
double reshaped_beta_draw(double alpha, double beta, double lambda, Rng& rng) {
    const double la = lambda * std::log(alpha);
    const double lb = lambda * std::log(beta);
    constexpr double kPointMass = 27.6;  // log(1e12)
    if (la > kPointMass || lb > kPointMass) {
        return 1.0 / (1.0 + std::exp(lb - la));
    }
    return sample_beta(rng, std::exp(la), std::exp(lb));
}

void validate_shape(const Design& design, std::size_t trials) {
    if (design.blocks() < 1 || design.arms() < 2) {
        throw DomainError("design needs at least one block and two arms");
    }
    if (design.arms() > 255) throw DomainError("at most 255 arms are supported");
    if (trials < 1) throw DomainError("trials per block must be positive");
}

}  // namespace

std::string_view model_name(Model m) {
    switch (m) {
        case Model::Wslts: return "WSLTS";
        case Model::Aeg: return "AEG";
        case Model::Gls: return "GLS";
    }
    return "?";
}

Model parse_model(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "WSLTS") return Model::Wslts;
    if (up == "AEG") return Model::Aeg;
    if (up == "GLS") return Model::Gls;
    throw DomainError("unknown model '" + std::string(name) + "'");
}

std::size_t model_arity(Model m) {
    switch (m) {
        case Model::Wslts: return 3;
        case Model::Aeg: return 2;
        case Model::Gls: return 5;
    }
    return 0;
}

Model model_from_index(std::size_t i) {
    if (i >= kModelCount) throw DomainError("model index out of range");
    return static_cast<Model>(i);
}

// ---------------------------------------------------------------------------
// Design / Trajectory

Design::Design(std::size_t blocks, std::size_t arms, double fill)
    : blocks_(blocks), arms_(arms), probs_(blocks * arms, fill) {
    validate();
}

Design::Design(const std::vector<std::vector<double>>& rows) {
    blocks_ = rows.size();
    arms_ = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != arms_) throw DomainError("design rows must have equal length");
        probs_.insert(probs_.end(), r.begin(), r.end());
    }
    validate();
}

Design Design::from_flat(std::size_t blocks, std::size_t arms, std::span<const double> values) {
    if (values.size() != blocks * arms) throw DomainError("flat design has wrong length");
    Design d;
    d.blocks_ = blocks;
    d.arms_ = arms;
    d.probs_.assign(values.begin(), values.end());
    d.validate();
    return d;
}

void Design::set(std::size_t block, std::size_t arm, double p) {
    require_unit(p, "reward probability");
    probs_.at(block * arms_ + arm) = p;
}

void Design::validate() const {
    if (blocks_ < 1) throw DomainError("design needs at least one block");
    if (arms_ < 2) throw DomainError("design needs at least two arms");
    for (double p : probs_) require_unit(p, "reward probability");
}

Trajectory::Trajectory(std::size_t b, std::size_t t, std::size_t k)
    : blocks(b), trials(t), arms(k), choices(b * t, 0), rewards(b * t, 0) {}

// ---------------------------------------------------------------------------
// Parameters

void WsltsParams::validate() const {
    require_unit(gamma_w, "gamma_w");
    require_unit(gamma_l, "gamma_l");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive and finite");
}

void AegParams::validate() const {
    require_unit(epsilon, "epsilon");
    require_unit(phi, "phi");
}

void GlsParams::validate() const {
    require_unit(gamma_exec, "gamma_exec");
    for (const auto& row : p_exploit)
        for (double p : row) require_unit(p, "latent transition probability");
}

WsltsParams wslts_from(std::span<const double> v) {
    if (v.size() != 3) throw DomainError("WSLTS expects 3 parameters, got " + std::to_string(v.size()));
    WsltsParams p{v[0], v[1], v[2]};
    p.validate();
    return p;
}

AegParams aeg_from(std::span<const double> v) {
    if (v.size() != 2) throw DomainError("AEG expects 2 parameters, got " + std::to_string(v.size()));
    AegParams p{v[0], v[1]};
    p.validate();
    return p;
}

GlsParams gls_from(std::span<const double> v) {
    if (v.size() != 5) throw DomainError("GLS expects 5 parameters, got " + std::to_string(v.size()));
    GlsParams p;
    p.gamma_exec = v[0];
    p.p_exploit[0][0] = v[1];
    p.p_exploit[0][1] = v[2];
    p.p_exploit[1][0] = v[3];
    p.p_exploit[1][1] = v[4];
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Choice rules

std::size_t reshaped_thompson_choice(const BetaCounts& counts, double lambda,
                                     std::ptrdiff_t excluded, Rng& rng) {
    const std::size_t arms = counts.alpha.size();
    std::vector<double> draws(arms, 0.0);
    for (std::size_t k = 0; k < arms; ++k) {
        if (static_cast<std::ptrdiff_t>(k) == excluded) continue;
        draws[k] = reshaped_beta_draw(counts.alpha[k], counts.beta[k], lambda, rng);
    }
    return argmax_uniform(arms, excluded, [&](std::size_t k) { return draws[k]; }, rng);
}

std::vector<std::size_t> aeg_greedy_set(std::span<const int> wins, std::span<const int> pulls) {
    // Compare (w_a+1)/(n_a+2) against (w_b+1)/(n_b+2) by cross-multiplying
    // so that equal estimates are detected exactly.
    std::vector<std::size_t> best{0};
    for (std::size_t k = 1; k < wins.size(); ++k) {
        const std::size_t j = best.front();
        const long lhs = static_cast<long>(wins[k] + 1) * (pulls[j] + 2);
        const long rhs = static_cast<long>(wins[j] + 1) * (pulls[k] + 2);
        if (lhs > rhs) {
            best.assign(1, k);
        } else if (lhs == rhs) {
            best.push_back(k);
        }
    }
    return best;
}

GlsSituation gls_situation(std::span<const int> wins, std::span<const int> losses) {
    const int max_wins = *std::max_element(wins.begin(), wins.end());
    const int min_losses = *std::min_element(losses.begin(), losses.end());
    std::size_t dominant = 0;
    for (std::size_t k = 0; k < wins.size(); ++k) {
        if (wins[k] == max_wins && losses[k] == min_losses) ++dominant;
    }
    if (dominant >= 2) return GlsSituation::Same;
    if (dominant == 1) return GlsSituation::BetterWorse;
    return GlsSituation::ExploreExploit;
}

std::vector<std::size_t> gls_rule_candidates(std::span<const int> wins,
                                             std::span<const int> losses,
                                             LatentState state) {
    const std::size_t arms = wins.size();
    const int max_wins = *std::max_element(wins.begin(), wins.end());
    const int min_losses = *std::min_element(losses.begin(), losses.end());

    std::vector<std::size_t> out;
    if (gls_situation(wins, losses) != GlsSituation::ExploreExploit) {
        for (std::size_t k = 0; k < arms; ++k)
            if (wins[k] == max_wins && losses[k] == min_losses) out.push_back(k);
        return out;
    }

    if (state == LatentState::Exploit) {
        // Fewest losses among the arms with the most wins.
        int best = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < arms; ++k)
            if (wins[k] == max_wins) best = std::min(best, losses[k]);
        for (std::size_t k = 0; k < arms; ++k)
            if (wins[k] == max_wins && losses[k] == best) out.push_back(k);
    } else {
        // Most wins among the arms with the fewest losses.
        int best = std::numeric_limits<int>::min();
        for (std::size_t k = 0; k < arms; ++k)
            if (losses[k] == min_losses) best = std::max(best, wins[k]);
        for (std::size_t k = 0; k < arms; ++k)
            if (losses[k] == min_losses && wins[k] == best) out.push_back(k);
    }
    return out;
}

std::size_t gls_choice(std::span<const int> wins, std::span<const int> losses, LatentState state,
                       double gamma_exec, Rng& rng) {
    if (bernoulli(rng, gamma_exec)) return uniform_pick(rng, gls_rule_candidates(wins, losses, state));
    return uniform_index(rng, wins.size());
}

// ---------------------------------------------------------------------------
// Simulators

Trajectory simulate_wslts(const WsltsParams& params, const Design& design,
                          std::size_t trials, Rng& rng) {
    params.validate();
    validate_shape(design, trials);
    const std::size_t arms = design.arms();
    Trajectory y(design.blocks(), trials, arms);

    for (std::size_t b = 0; b < design.blocks(); ++b) {
        BetaCounts counts(arms);
        std::size_t prev = 0;
        bool prev_won = false;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t arm;
            if (t == 0) {
                arm = reshaped_thompson_choice(counts, params.lambda, -1, rng);
            } else {
                const double shift_prob = prev_won ? 1.0 - params.gamma_w : params.gamma_l;
                if (bernoulli(rng, shift_prob)) {
                    arm = reshaped_thompson_choice(counts, params.lambda,
                                                   static_cast<std::ptrdiff_t>(prev), rng);
                } else {
                    arm = prev;
                }
            }
            const bool won = bernoulli(rng, design(b, arm));
            counts.update(arm, won);
            y.record(b, t, arm, won);
            prev = arm;
            prev_won = won;
        }
    }
    return y;
}

Trajectory simulate_aeg(const AegParams& params, const Design& design,
                        std::size_t trials, Rng& rng) {
    params.validate();
    validate_shape(design, trials);
    const std::size_t arms = design.arms();
    Trajectory y(design.blocks(), trials, arms);

    for (std::size_t b = 0; b < design.blocks(); ++b) {
        std::vector<int> wins(arms, 0), pulls(arms, 0);
        std::size_t prev = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t arm;
            if (t == 0) {
                arm = uniform_index(rng, arms);
            } else if (bernoulli(rng, params.epsilon)) {
                arm = bernoulli(rng, params.phi) ? prev : uniform_index(rng, arms);
            } else {
                const auto greedy = aeg_greedy_set(wins, pulls);
                const bool prev_greedy = std::find(greedy.begin(), greedy.end(), prev) != greedy.end();
                if (prev_greedy && bernoulli(rng, params.phi)) {
                    arm = prev;
                } else {
                    arm = uniform_pick(rng, greedy);
                }
            }
            const bool won = bernoulli(rng, design(b, arm));
            ++pulls[arm];
            if (won) ++wins[arm];
            y.record(b, t, arm, won);
            prev = arm;
        }
    }
    return y;
}

Trajectory simulate_gls(const GlsParams& params, const Design& design,
                        std::size_t trials, Rng& rng,
                        std::vector<LatentState>* latent_trace) {
    params.validate();
    validate_shape(design, trials);
    const std::size_t arms = design.arms();
    Trajectory y(design.blocks(), trials, arms);
    if (latent_trace) latent_trace->clear();

    for (std::size_t b = 0; b < design.blocks(); ++b) {
        std::vector<int> wins(arms, 0), losses(arms, 0);
        LatentState state = bernoulli(rng, 0.5) ? LatentState::Exploit : LatentState::Explore;
        for (std::size_t t = 0; t < trials; ++t) {
            if (latent_trace) latent_trace->push_back(state);
            const std::size_t arm = gls_choice(wins, losses, state, params.gamma_exec, rng);
            const bool won = bernoulli(rng, design(b, arm));
            (won ? wins : losses)[arm] += 1;
            y.record(b, t, arm, won);
            const double p = params.p_exploit[static_cast<int>(state)][won ? 1 : 0];
            state = bernoulli(rng, p) ? LatentState::Exploit : LatentState::Explore;
        }
    }
    return y;
}

Trajectory simulate_gls(const GlsParams& params, const Design& design,
                        std::size_t trials, Rng& rng) {
    return simulate_gls(params, design, trials, rng, nullptr);
}

Trajectory simulate_model(Model model, std::span<const double> params,
                          const Design& design, std::size_t trials, Rng& rng) {
    switch (model) {
        case Model::Wslts: return simulate_wslts(wslts_from(params), design, trials, rng);
        case Model::Aeg: return simulate_aeg(aeg_from(params), design, trials, rng);
        case Model::Gls: return simulate_gls(gls_from(params), design, trials, rng);
    }
    throw DomainError("unknown model");
}

}  // namespace boed
