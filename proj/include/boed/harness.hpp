#pragma once

// End-to-end campaigns with reproducible artifacts.
//
// Every run directory holds a resolved config snapshot (config.cfg), the
// outputs and, written last, manifest.json: the SHA-256 of each output plus a
// build fingerprint. A manifest therefore only exists for a completed run.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "boed/config.hpp"
#include "boed/design_opt.hpp"
#include "boed/inference.hpp"

namespace boed {

struct BuildInfo {
    std::string version;
    std::string compiler;
    std::string build_type;
    std::string eigen;
    bool operator==(const BuildInfo&) const = default;
};
BuildInfo build_info();

std::string sha256_hex(std::string_view bytes);
// Hash of a file; for CSV files, `volatile_columns` are dropped before
// hashing (timings that legitimately differ between identical runs).
std::string hash_artifact(const std::filesystem::path& path, const std::vector<std::string>& volatile_columns = {});

struct ManifestEntry {
    std::string path;  // relative to the run directory
    std::string sha256;
    std::uintmax_t bytes = 0;
    std::vector<std::string> volatile_columns;
};

struct Manifest {
    int schema_version = 1;
    std::string kind;  // "search" or "evaluate"
    BuildInfo build;
    std::string design_source;  // evaluate only, see DesignSource::describe
    std::vector<ManifestEntry> files;
};
Manifest read_manifest(const std::filesystem::path& run_dir);

// Design search. Resumes from an existing bo_trace.csv when `out_dir` already
// holds a partial run of the same config.
struct SearchOutcome {
    SearchResult result;
    std::filesystem::path dir;
};
SearchOutcome run_design_search(const CampaignConfig& cfg, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

// Where the evaluated design(s) come from: the optimum of a finished search
// (with its critic), an explicit matrix, or `baseline_replicates` Beta(2,2)
// designs. Textual form: "optimal:<run dir>", "explicit:<rows>" with rows
// separated by ';' and entries by ',', or "baseline".
struct DesignSource {
    enum class Kind { Optimal, Explicit, Baseline };
    Kind kind = Kind::Baseline;
    std::filesystem::path run_dir;
    std::vector<std::vector<double>> rows;

    static DesignSource parse(std::string_view text);
    std::string describe() const;
};

struct EvaluatedDesign {
    std::string label;
    Design design;
    ConfusionMatrix confusion;              // MD
    std::vector<double> mean_posterior_sd;  // PE, per parameter
    std::size_t degenerate = 0;             // PE observations with ess < 10
};
struct EvaluationOutcome {
    std::vector<EvaluatedDesign> designs;
    std::filesystem::path dir;
};
EvaluationOutcome run_evaluation(const CampaignConfig& cfg, const DesignSource& source,
                                 const std::filesystem::path& out_dir, std::ostream* log = nullptr);

// Replay: checks recorded hashes against the files on disk, then (unless
// `verify_only`) re-executes the run into a scratch directory and compares
// the regenerated artifacts.
struct ReplayEntry {
    enum class Status { Match, Mismatch, Missing };
    std::string path;
    Status status = Status::Match;
};
struct ReplayReport {
    bool environment_matches = true;
    BuildInfo recorded;
    std::vector<ReplayEntry> on_disk;
    std::vector<ReplayEntry> regenerated;
    bool reexecuted = false;

    bool on_disk_ok() const;
    bool regenerated_ok() const;
    bool ok() const { return on_disk_ok() && regenerated_ok(); }
};
ReplayReport replay(const std::filesystem::path& run_dir, bool verify_only = false, std::ostream* log = nullptr);
void print_replay_report(std::ostream& out, const ReplayReport& report);

// Prior-predictive trajectories at a design: trajectories.csv, the binary
// cache trajectories.btrj and variables.csv.
void simulate_to_directory(const CampaignConfig& cfg, const Design& design, std::size_t n,
                           const std::filesystem::path& out_dir);

}  // namespace boed
