#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "boed/bandit_sim.hpp"
#include "boed/rng.hpp"

namespace boed {

enum class Task { ModelDiscrimination, ParameterEstimation };

// A scalar prior: uniform(lo, hi) or lognormal(mu, sigma). Tags use the
// textual form accepted by parse(), e.g. "uniform(0,1)", "lognormal(0,1)".
struct ScalarPrior {
    enum class Kind { Uniform, LogNormal };
    Kind kind = Kind::Uniform;
    double a = 0.0;
    double b = 1.0;

    static ScalarPrior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static ScalarPrior lognormal(double mu, double sigma) { return {Kind::LogNormal, mu, sigma}; }
    static ScalarPrior parse(std::string_view tag);

    double sample(Rng& rng) const;
    bool in_support(double x) const;
    std::string tag() const;
    bool operator==(const ScalarPrior&) const = default;
};

struct PriorSpec {
    Task task = Task::ModelDiscrimination;
    Model model = Model::Wslts;  // PE only
    // Parameter priors for each model, indexed by Model. For MD these
    // generate the nuisance parameters attached to each model draw.
    std::array<std::vector<ScalarPrior>, kModelCount> params;

    static PriorSpec model_discrimination();
    static PriorSpec parameter_estimation(Model m);
    static std::vector<ScalarPrior> default_params(Model m);

    void validate() const;
    bool operator==(const PriorSpec&) const = default;
};

// The quantity whose posterior we learn: the model indicator (MD) or the
// parameter vector of the fixed model (PE). Parameters are always attached
// since the simulator needs them.
struct VariableOfInterest {
    Model model = Model::Wslts;
    std::vector<double> params;
    bool operator==(const VariableOfInterest&) const = default;
};

VariableOfInterest sample_variable(const PriorSpec& spec, Rng& rng);
std::vector<VariableOfInterest> sample_prior(const PriorSpec& spec, std::size_t n, Rng& rng);

// Every entry independently Beta(2, 2).
Design sample_baseline_design(std::size_t blocks, std::size_t arms, Rng& rng);

}  // namespace boed
