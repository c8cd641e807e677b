#pragma once

// Campaign configuration file: one `key = value` pair per line, `#` starts a
// comment. `schema_version` and `task` are required; every other key falls
// back to the defaults for the task. Unknown keys, duplicate keys and
// malformed values are errors. See configs/ and README.md for the schema.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "boed/design_opt.hpp"
#include "boed/priors.hpp"

namespace boed {

inline constexpr int kSchemaVersion = 1;

struct EvaluationSettings {
    std::size_t n_test = 1000;              // MD: observations per true model
    std::size_t baseline_replicates = 5;
    std::size_t posterior_draws = 10000;    // PE: prior draws weighted per observation
    std::size_t pe_observations = 1000;     // PE: test observations
    std::size_t grid_points = 101;
    bool operator==(const EvaluationSettings&) const = default;
};

struct CampaignConfig {
    int schema_version = kSchemaVersion;
    PriorSpec prior = PriorSpec::model_discrimination();
    std::size_t arms = 3;
    std::size_t trials = 30;
    std::size_t blocks = 2;
    std::vector<std::size_t> summary_hidden{64, 32};
    std::size_t summary_dim = 6;
    std::vector<std::size_t> head_hidden{32, 32};
    TrainConfig train;
    std::size_t n_samples = 50000;
    double validation_fraction = 0.2;
    BoConfig bo;
    EvaluationSettings eval;
    std::uint64_t seed = 1;
    std::string output_dir = "runs/md";
    std::size_t parallelism = 1;

    // Task strings: "MD", "PE:WSLTS", "PE:AEG", "PE:GLS".
    static CampaignConfig defaults_for(std::string_view task);
    static CampaignConfig parse(std::string_view text);
    static CampaignConfig load(const std::filesystem::path& path);
    std::string serialize() const;
    void validate() const;

    std::string task_name() const;
    NetworkShape network_shape() const;
    MiObjectiveConfig objective_config() const;

    bool operator==(const CampaignConfig&) const = default;
};

}  // namespace boed
