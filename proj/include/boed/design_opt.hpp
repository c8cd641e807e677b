#pragma once

// Gradient-free design search: Latin-hypercube initial designs, then
// sequential Bayesian optimization with a GP surrogate and Expected
// Improvement. Each utility evaluation simulates a fresh dataset at the
// design and trains a critic on it.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "boed/gaussian_process.hpp"
#include "boed/mi_estimator.hpp"

namespace boed {

struct BoBudget {
    std::size_t total = 400;
    std::size_t initial = 80;
    // Stop when the best observed utility gained no more than `tolerance`
    // over the last `window` evaluations.
    std::size_t window = 100;
    double tolerance = 0.005;
    bool operator==(const BoBudget&) const = default;
};

struct BoConfig {
    BoBudget budget;
    std::size_t refit_every = 5;  // hyperparameter refits; data is always updated
    std::size_t hyper_starts = 8;
    GpBounds bounds;
    ProposalConfig proposal;
    std::size_t parallelism = 1;  // initial-phase workers
    bool operator==(const BoConfig&) const = default;
};

struct TraceRow {
    std::size_t iteration = 0;  // zero-based evaluation index
    std::vector<double> design;  // flattened
    double utility = 0.0;        // NaN when the evaluation failed
    double incumbent = 0.0;      // best observed utility so far (NaN before any success)
    double wall_time = 0.0;      // seconds since the search started
};

struct ObjectiveResult {
    double utility = 0.0;
    std::optional<TrainedBound> trained;
};

// Utility of a design; `index` identifies the evaluation so that random
// streams can be derived from it and a re-evaluation is bit-identical.
using Objective = std::function<ObjectiveResult(const Design&, std::size_t index)>;

struct SearchResult {
    Design best;
    std::size_t best_index = 0;
    double best_utility = 0.0;         // observed utility at `best`
    double best_posterior_mean = 0.0;  // surrogate mean at `best`
    std::optional<TrainedBound> trained;
    std::vector<TraceRow> trace;
    bool converged = false;            // stopped by the convergence window
};

// Runs the search. `resume` rows are taken as already-evaluated (they must
// match the designs the run would propose). `on_row` sees every row as soon
// as it exists. The returned design is the evaluated design with the
// highest posterior mean under a final surrogate fit.
SearchResult search_designs(const Objective& objective, std::size_t blocks, std::size_t arms,
                            const BoConfig& cfg, std::uint64_t seed,
                            const std::vector<TraceRow>& resume = {},
                            const std::function<void(const TraceRow&)>& on_row = {});

// MI objective: dataset stream ("dataset", i), critic initialization
// ("init", i) and training ("train", i) derived from `seed`.
struct MiObjectiveConfig {
    std::size_t n_samples = 50000;
    double validation_fraction = 0.2;
    NetworkShape shape;
    TrainConfig train;
    bool keep_network = true;
};
TrainedBound train_at_design(const GenerativeModel& model, const Design& design, const MiObjectiveConfig& cfg,
                             std::uint64_t seed, std::size_t index);
Objective mi_objective(GenerativeModel model, MiObjectiveConfig cfg, std::uint64_t seed,
                       std::function<void(std::size_t, const TrainedBound&)> on_trained = {});

// The full design search, returning d*, its trained critic and the trace.
SearchResult optimize_design(const GenerativeModel& model, std::size_t blocks, std::size_t arms,
                             const MiObjectiveConfig& mi, const BoConfig& bo, std::uint64_t seed);

// Trace CSV: iteration,d0..d{D-1},utility,incumbent,wall_time ("NA" marks a
// failed evaluation).
void write_trace_header(std::ostream& out, std::size_t dim);
void write_trace_row(std::ostream& out, const TraceRow& row);
std::vector<TraceRow> read_trace_csv(std::istream& in);

}  // namespace boed
