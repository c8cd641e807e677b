#pragma once

// Forward simulators for the three behavioural models of multi-armed bandit
// play: Win-Stay Lose-Thompson-Sample (WSLTS), Auto-regressive epsilon-Greedy
// (AEG) and the Generalized Latent State model (GLS).
//
// Every learner keeps per-block state only: counts, previous arm and latent
// state are reset when a new block of trials starts.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "boed/rng.hpp"

namespace boed {

enum class Model : int { Wslts = 0, Aeg = 1, Gls = 2 };
inline constexpr std::size_t kModelCount = 3;

std::string_view model_name(Model m);
Model parse_model(std::string_view name);
std::size_t model_arity(Model m);
Model model_from_index(std::size_t i);

// Bernoulli reward probabilities, one row per block and one column per arm.
class Design {
public:
    Design() = default;
    Design(std::size_t blocks, std::size_t arms, double fill = 0.5);
    explicit Design(const std::vector<std::vector<double>>& rows);
    static Design from_flat(std::size_t blocks, std::size_t arms,
                            std::span<const double> values);

    std::size_t blocks() const { return blocks_; }
    std::size_t arms() const { return arms_; }
    std::size_t size() const { return probs_.size(); }
    double operator()(std::size_t block, std::size_t arm) const {
        return probs_[block * arms_ + arm];
    }
    void set(std::size_t block, std::size_t arm, double p);
    std::span<const double> row(std::size_t block) const {
        return {probs_.data() + block * arms_, arms_};
    }
    // Row-major flattening, the coordinate system of the design optimizer.
    const std::vector<double>& flat() const { return probs_; }

    bool operator==(const Design&) const = default;

private:
    void validate() const;

    std::size_t blocks_ = 0;
    std::size_t arms_ = 0;
    std::vector<double> probs_;
};

// Choices and binary rewards, stored block-major (block, trial).
struct Trajectory {
    std::size_t blocks = 0;
    std::size_t trials = 0;
    std::size_t arms = 0;
    std::vector<std::uint8_t> choices;
    std::vector<std::uint8_t> rewards;

    Trajectory() = default;
    Trajectory(std::size_t blocks, std::size_t trials, std::size_t arms);

    std::uint8_t choice(std::size_t b, std::size_t t) const { return choices[b * trials + t]; }
    std::uint8_t reward(std::size_t b, std::size_t t) const { return rewards[b * trials + t]; }
    void record(std::size_t b, std::size_t t, std::size_t arm, bool won) {
        choices[b * trials + t] = static_cast<std::uint8_t>(arm);
        rewards[b * trials + t] = won ? 1 : 0;
    }

    bool operator==(const Trajectory&) const = default;
};

struct WsltsParams {
    double gamma_w = 0.5;  // stay after a win
    double gamma_l = 0.5;  // shift after a loss
    double lambda = 1.0;   // posterior reshaping exponent
    void validate() const;
};

struct AegParams {
    double epsilon = 0.1;  // exploration rate
    double phi = 0.0;      // stickiness
    void validate() const;
};

enum class LatentState : int { Explore = 0, Exploit = 1 };

struct GlsParams {
    double gamma_exec = 0.9;
    // p_exploit[previous state][previous reward] = P(next state = exploit).
    double p_exploit[2][2] = {{0.5, 0.5}, {0.5, 0.5}};
    void validate() const;
};

// Per-arm Beta posterior counts, starting at Beta(1, 1).
struct BetaCounts {
    std::vector<double> alpha;
    std::vector<double> beta;

    explicit BetaCounts(std::size_t arms) : alpha(arms, 1.0), beta(arms, 1.0) {}
    void update(std::size_t arm, bool won) { (won ? alpha : beta)[arm] += 1.0; }
};

// One Thompson draw per arm from Beta(alpha^lambda, beta^lambda), with the
// excluded arm (if any) removed from the argmax. Ties are broken uniformly.
std::size_t reshaped_thompson_choice(const BetaCounts& counts, double lambda,
                                     std::ptrdiff_t excluded, Rng& rng);

// Arms sharing the largest posterior-mean estimate (wins+1)/(pulls+2).
std::vector<std::size_t> aeg_greedy_set(std::span<const int> wins,
                                        std::span<const int> pulls);

enum class GlsSituation { Same, BetterWorse, ExploreExploit };

GlsSituation gls_situation(std::span<const int> wins, std::span<const int> losses);

// Arms the GLS rule table allows given the counts and the latent state; the
// agent picks uniformly among them when executing the rule.
std::vector<std::size_t> gls_rule_candidates(std::span<const int> wins,
                                             std::span<const int> losses,
                                             LatentState state);
// One GLS choice: the rule with probability gamma_exec, else uniform.
std::size_t gls_choice(std::span<const int> wins, std::span<const int> losses,
                       LatentState state, double gamma_exec, Rng& rng);

Trajectory simulate_wslts(const WsltsParams& params, const Design& design,
                          std::size_t trials, Rng& rng);
Trajectory simulate_aeg(const AegParams& params, const Design& design,
                        std::size_t trials, Rng& rng);
Trajectory simulate_gls(const GlsParams& params, const Design& design,
                        std::size_t trials, Rng& rng);

// Observer for latent GLS states (absorbing-state property tests).
Trajectory simulate_gls(const GlsParams& params, const Design& design,
                        std::size_t trials, Rng& rng,
                        std::vector<LatentState>* latent_trace);

// Parameter vector layouts: WSLTS (gamma_w, gamma_l, lambda), AEG (epsilon,
// phi), GLS (gamma_exec, p[explore][loss], p[explore][win], p[exploit][loss],
// p[exploit][win]).
WsltsParams wslts_from(std::span<const double> v);
AegParams aeg_from(std::span<const double> v);
GlsParams gls_from(std::span<const double> v);

Trajectory simulate_model(Model model, std::span<const double> params,
                          const Design& design, std::size_t trials, Rng& rng);

}  // namespace boed
