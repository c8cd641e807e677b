#include "boed/design_opt.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "boed/errors.hpp"

namespace boed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_design(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
    return true;
}

ObjectiveResult evaluate_guarded(const Objective& objective, const Design& d, std::size_t index) {
    try {
        return objective(d, index);
    } catch (const TrainingError& e) {
        std::cerr << "evaluation " << index << " failed: " << e.what() << '\n';
    } catch (const NumericalError& e) {
        std::cerr << "evaluation " << index << " failed: " << e.what() << '\n';
    }
    return {kNaN, std::nullopt};
}

}  // namespace

SearchResult search_designs(const Objective& objective, std::size_t blocks, std::size_t arms,
                            const BoConfig& cfg, std::uint64_t seed, const std::vector<TraceRow>& resume,
                            const std::function<void(const TraceRow&)>& on_row) {
    const BoBudget& budget = cfg.budget;
    if (budget.total < 1 || budget.initial < 1 || budget.initial > budget.total) {
        throw DomainError("BO budget needs 1 <= initial <= total");
    }
    if (resume.size() > budget.total) throw DomainError("resume trace is longer than the budget");
    const std::size_t dim = blocks * arms;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    SearchResult result;
    std::vector<TraceRow>& rows = result.trace;
    double best_observed = -std::numeric_limits<double>::infinity();
    std::size_t best_observed_index = 0;
    std::optional<TrainedBound> best_trained;

    auto commit = [&](std::size_t i, const std::vector<double>& x, ObjectiveResult r, double wall) {
        TraceRow row;
        row.iteration = i;
        row.design = x;
        row.utility = r.utility;
        if (std::isfinite(r.utility) && r.utility > best_observed) {
            best_observed = r.utility;
            best_observed_index = i;
            best_trained = std::move(r.trained);
        }
        row.incumbent = std::isfinite(best_observed) ? best_observed : kNaN;
        row.wall_time = wall;
        rows.push_back(row);
        if (on_row) on_row(rows.back());
    };
    auto take_resumed = [&](std::size_t i, const std::vector<double>& x) {
        const TraceRow& r = resume[i];
        if (r.iteration != i || !same_design(r.design, x)) {
            throw ArtifactError("resume trace diverges from this configuration at iteration " + std::to_string(i));
        }
        commit(i, r.design, {r.utility, std::nullopt}, r.wall_time);
    };

    // Initial space-filling phase.
    Rng lhs_rng = make_rng(seed, "lhs");
    const auto initial = latin_hypercube(budget.initial, dim, lhs_rng);
    std::vector<ObjectiveResult> initial_results(budget.initial);
    std::vector<double> initial_wall(budget.initial, 0.0);
    const std::size_t first_new = std::min(resume.size(), budget.initial);
    if (cfg.parallelism > 1 && first_new < budget.initial) {
        std::atomic<std::size_t> next{first_new};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < cfg.parallelism; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < budget.initial; i = next++) {
                    initial_results[i] = evaluate_guarded(objective, Design::from_flat(blocks, arms, initial[i]), i);
                    initial_wall[i] = elapsed();
                }
            });
        }
        for (auto& t : workers) t.join();
    }
    for (std::size_t i = 0; i < budget.initial; ++i) {
        if (i < resume.size()) {
            take_resumed(i, initial[i]);
        } else if (cfg.parallelism > 1) {
            commit(i, initial[i], std::move(initial_results[i]), initial_wall[i]);
        } else {
            auto r = evaluate_guarded(objective, Design::from_flat(blocks, arms, initial[i]), i);
            commit(i, initial[i], std::move(r), elapsed());
        }
    }

    // Sequential BO phase.
    std::optional<GpHyper> hyper;
    auto valid_data = [&](Eigen::MatrixXd& X, Eigen::VectorXd& u, std::vector<std::size_t>& idx) {
        idx.clear();
        for (const TraceRow& r : rows)
            if (std::isfinite(r.utility)) idx.push_back(r.iteration);
        X.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(dim));
        u.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const TraceRow& r = rows[idx[k]];
            for (std::size_t d = 0; d < dim; ++d) X(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = r.design[d];
            u(static_cast<Eigen::Index>(k)) = r.utility;
        }
    };

    for (std::size_t i = budget.initial; i < budget.total; ++i) {
        Eigen::MatrixXd X;
        Eigen::VectorXd u;
        std::vector<std::size_t> idx;
        valid_data(X, u, idx);
        std::vector<double> x(dim);
        if (idx.size() < 2) {
            Rng r = make_rng(seed, "fallback", i);
            for (double& xi : x) xi = uniform01(r);
        } else {
            const bool refit = !hyper || (i - budget.initial) % std::max<std::size_t>(cfg.refit_every, 1) == 0;
            if (refit) {
                Rng fit_rng = make_rng(seed, "gp_fit", i);
                hyper = gp_fit(X, u, cfg.bounds, fit_rng, cfg.hyper_starts).hyper();
            }
            const GpState gp(X, u, *hyper);
            Rng prop_rng = make_rng(seed, "propose", i);
            x = propose_next(gp, cfg.proposal, prop_rng);
        }

        if (i < resume.size()) {
            take_resumed(i, x);
        } else {
            auto r = evaluate_guarded(objective, Design::from_flat(blocks, arms, x), i);
            commit(i, x, std::move(r), elapsed());
        }

        if (i >= budget.window) {
            const double now = rows[i].incumbent;
            const double then = rows[i - budget.window].incumbent;
            if (std::isfinite(now) && std::isfinite(then) && now - then <= budget.tolerance) {
                result.converged = true;
                break;
            }
        }
    }

    // Pick d* by the surrogate mean over evaluated designs.
    Eigen::MatrixXd X;
    Eigen::VectorXd u;
    std::vector<std::size_t> idx;
    valid_data(X, u, idx);
    if (idx.empty()) throw NumericalError("design search produced no successful evaluations");
    if (idx.size() == 1 || budget.total == budget.initial) {
        // Pure random search: no surrogate guided it, so take the best observation.
        Eigen::Index k = 0;
        u.maxCoeff(&k);
        result.best_index = idx[static_cast<std::size_t>(k)];
        result.best_posterior_mean = u(k);
    } else {
        Rng fit_rng = make_rng(seed, "gp_final");
        const GpState gp = gp_fit(X, u, cfg.bounds, fit_rng, cfg.hyper_starts);
        const std::size_t k = gp.incumbent_index();
        result.best_index = idx[k];
        result.best_posterior_mean = gp.incumbent();
    }
    const TraceRow& best = rows[result.best_index];
    result.best = Design::from_flat(blocks, arms, best.design);
    result.best_utility = best.utility;
    if (best_trained && best_observed_index == result.best_index) {
        result.trained = std::move(best_trained);
    } else {
        result.trained = objective(result.best, result.best_index).trained;
    }
    return result;
}

TrainedBound train_at_design(const GenerativeModel& model, const Design& design, const MiObjectiveConfig& cfg,
                             std::uint64_t seed, std::size_t index) {
    Rng data_rng = make_rng(seed, "dataset", index);
    const SimulatedDataset data = simulate_dataset(model, design, cfg.n_samples, cfg.validation_fraction, data_rng);
    Rng init_rng = make_rng(seed, "init", index);
    BoundNetwork net = BoundNetwork::create(cfg.shape, init_rng);
    Rng train_rng = make_rng(seed, "train", index);
    return train_bound(std::move(net), data, model.encoding, cfg.train, train_rng);
}

Objective mi_objective(GenerativeModel model, MiObjectiveConfig cfg, std::uint64_t seed,
                       std::function<void(std::size_t, const TrainedBound&)> on_trained) {
    return [model = std::move(model), cfg, seed, on_trained = std::move(on_trained)](const Design& d,
                                                                                     std::size_t index) {
        TrainedBound tb = train_at_design(model, d, cfg, seed, index);
        if (on_trained) on_trained(index, tb);
        ObjectiveResult r;
        r.utility = tb.estimate.value;
        if (cfg.keep_network) r.trained = std::move(tb);
        return r;
    };
}

SearchResult optimize_design(const GenerativeModel& model, std::size_t blocks, std::size_t arms,
                             const MiObjectiveConfig& mi, const BoConfig& bo, std::uint64_t seed) {
    return search_designs(mi_objective(model, mi, seed), blocks, arms, bo, seed);
}

void write_trace_header(std::ostream& out, std::size_t dim) {
    out << "iteration";
    for (std::size_t d = 0; d < dim; ++d) out << ",d" << d;
    out << ",utility,incumbent,wall_time\n";
}

namespace {
void put_value(std::ostream& out, double v) {
    if (std::isfinite(v)) {
        out << v;
    } else {
        out << "NA";
    }
}
}  // namespace

void write_trace_row(std::ostream& out, const TraceRow& row) {
    const auto old = out.precision(17);
    out << row.iteration;
    for (double x : row.design) out << ',' << x;
    out << ',';
    put_value(out, row.utility);
    out << ',';
    put_value(out, row.incumbent);
    out << ',' << row.wall_time << '\n';
    out.precision(old);
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("iteration", 0) != 0) throw ArtifactError("trace CSV has no header");
    std::size_t columns = 1;
    for (char c : line) columns += c == ',';
    if (columns < 5) throw ArtifactError("trace CSV header is too short");
    const std::size_t dim = columns - 4;
    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != columns) throw ArtifactError("trace CSV row has the wrong width: " + line);
        auto num = [](const std::string& s) { return s == "NA" ? kNaN : std::stod(s); };
        TraceRow r;
        r.iteration = std::stoul(cells[0]);
        for (std::size_t d = 0; d < dim; ++d) r.design.push_back(std::stod(cells[1 + d]));
        r.utility = num(cells[1 + dim]);
        r.incumbent = num(cells[2 + dim]);
        r.wall_time = std::stod(cells[3 + dim]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace boed
