#include "boed/priors.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "boed/errors.hpp"

namespace boed {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

double parse_number(std::string_view s) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw DomainError("not a number: '" + t + "'");
    }
    return v;
}

}  // namespace

ScalarPrior ScalarPrior::parse(std::string_view tag) {
    const std::string t = trim(tag);
    const auto open = t.find('(');
    const auto comma = t.find(',');
    const auto close = t.find(')');
    if (open == std::string::npos || comma == std::string::npos || close != t.size() - 1 ||
        !(open < comma && comma < close)) {
        throw DomainError("malformed prior tag '" + t + "'");
    }
    const std::string name = trim(std::string_view(t).substr(0, open));
    const double a = parse_number(std::string_view(t).substr(open + 1, comma - open - 1));
    const double b = parse_number(std::string_view(t).substr(comma + 1, close - comma - 1));
    if (name == "uniform") {
        if (!(a < b)) throw DomainError("uniform prior needs lo < hi");
        return uniform(a, b);
    }
    if (name == "lognormal") {
        if (!(b > 0.0)) throw DomainError("lognormal prior needs sigma > 0");
        return lognormal(a, b);
    }
    throw DomainError("unknown prior family '" + name + "'");
}

double ScalarPrior::sample(Rng& rng) const {
    if (kind == Kind::Uniform) return a + (b - a) * uniform01(rng);
    return std::exp(a + b * standard_normal(rng));
}

bool ScalarPrior::in_support(double x) const {
    if (kind == Kind::Uniform) return x >= a && x <= b;
    return x > 0.0 && std::isfinite(x);
}

std::string ScalarPrior::tag() const {
    std::ostringstream os;
    os.precision(17);
    os << (kind == Kind::Uniform ? "uniform(" : "lognormal(") << a << ',' << b << ')';
    return os.str();
}

std::vector<ScalarPrior> PriorSpec::default_params(Model m) {
    switch (m) {
        case Model::Wslts:
            return {ScalarPrior::uniform(0, 1), ScalarPrior::uniform(0, 1), ScalarPrior::lognormal(0, 1)};
        case Model::Aeg:
            return {ScalarPrior::uniform(0, 1), ScalarPrior::uniform(0, 1)};
        case Model::Gls:
            return std::vector<ScalarPrior>(5, ScalarPrior::uniform(0, 1));
    }
    return {};
}

PriorSpec PriorSpec::model_discrimination() {
    PriorSpec s;
    s.task = Task::ModelDiscrimination;
    for (std::size_t i = 0; i < kModelCount; ++i) s.params[i] = default_params(model_from_index(i));
    return s;
}

PriorSpec PriorSpec::parameter_estimation(Model m) {
    PriorSpec s = model_discrimination();
    s.task = Task::ParameterEstimation;
    s.model = m;
    return s;
}

void PriorSpec::validate() const {
    for (std::size_t i = 0; i < kModelCount; ++i) {
        const Model m = model_from_index(i);
        if (params[i].size() != model_arity(m)) {
            throw DomainError(std::string(model_name(m)) + " prior needs " +
                              std::to_string(model_arity(m)) + " parameter distributions");
        }
        // Simulator parameters live in [0, 1] except the WSLTS exponent.
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const ScalarPrior& p = params[i][j];
            const bool positive_only = m == Model::Wslts && j == 2;
            if (positive_only) {
                if (p.kind == ScalarPrior::Kind::Uniform && !(p.a > 0.0))
                    throw DomainError("lambda prior must have positive support");
            } else if (p.kind != ScalarPrior::Kind::Uniform || p.a < 0.0 || p.b > 1.0) {
                throw DomainError(std::string(model_name(m)) + " parameter " + std::to_string(j) +
                                  " prior must be uniform within [0, 1]");
            }
        }
    }
}

VariableOfInterest sample_variable(const PriorSpec& spec, Rng& rng) {
    VariableOfInterest v;
    v.model = spec.task == Task::ModelDiscrimination ? model_from_index(uniform_index(rng, kModelCount))
                                                     : spec.model;
    const auto& priors = spec.params[static_cast<std::size_t>(v.model)];
    v.params.reserve(priors.size());
    for (const ScalarPrior& p : priors) v.params.push_back(p.sample(rng));
    return v;
}

std::vector<VariableOfInterest> sample_prior(const PriorSpec& spec, std::size_t n, Rng& rng) {
    if (n < 1) throw DomainError("sample_prior needs n >= 1");
    spec.validate();
    std::vector<VariableOfInterest> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_variable(spec, rng));
    return out;
}

Design sample_baseline_design(std::size_t blocks, std::size_t arms, Rng& rng) {
    Design d(blocks, arms);
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t k = 0; k < arms; ++k) d.set(b, k, sample_beta(rng, 2.0, 2.0));
    return d;
}

}  // namespace boed
