#include "boed/harness.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "boed/checkpoint.hpp"
#include "boed/errors.hpp"
#include "boed/trajectory_io.hpp"
#include "json.hpp"

namespace boed {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kConfigFile = "config.cfg";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kTraceFile = "bo_trace.csv";
constexpr const char* kCriticFile = "best_critic.bnet";
constexpr const char* kResultFile = "result.json";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ArtifactError("write failed for " + p.string());
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + p.string());
    out << std::setprecision(17);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

json design_json(const Design& d) {
    json rows = json::array();
    for (std::size_t b = 0; b < d.blocks(); ++b) {
        const auto r = d.row(b);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

Design design_from_json(const json& j) {
    std::vector<std::vector<double>> rows = j.get<std::vector<std::vector<double>>>();
    return Design(rows);
}

json build_json(const BuildInfo& b) {
    return {{"version", b.version}, {"compiler", b.compiler}, {"build_type", b.build_type}, {"eigen", b.eigen}};
}

std::string format_design(const Design& d) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    for (std::size_t b = 0; b < d.blocks(); ++b) {
        os << (b ? " | " : "");
        for (std::size_t k = 0; k < d.arms(); ++k) os << (k ? " " : "") << d(b, k);
    }
    return os.str();
}

// Writes the snapshot, or checks that an existing one describes the same
// campaign.
void claim_directory(const CampaignConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path snap = dir / kConfigFile;
    const std::string text = cfg.serialize();
    if (fs::exists(snap)) {
        if (read_file(snap) != text) {
            throw ConfigError(dir.string() + " already holds a run with a different config");
        }
    } else {
        write_file(snap, text);
    }
    fs::remove(dir / kManifestFile);
}

void write_manifest(const fs::path& dir, const std::string& kind, const std::string& design_source,
                    std::vector<ManifestEntry> entries) {
    json files = json::array();
    for (auto& e : entries) {
        const fs::path p = dir / e.path;
        e.sha256 = hash_artifact(p, e.volatile_columns);
        e.bytes = fs::file_size(p);
        files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes},
                         {"volatile_columns", e.volatile_columns}});
    }
    json m = {{"schema_version", 1}, {"kind", kind}, {"build", build_json(build_info())}, {"files", files}};
    if (!design_source.empty()) m["design_source"] = design_source;
    write_file(dir / kManifestFile, m.dump(2) + "\n");
}

std::vector<TraceRow> read_partial_trace(const fs::path& p) {
    std::string text = read_file(p);
    // A run killed mid-write can leave a truncated final line.
    if (!text.empty() && text.back() != '\n') text.erase(text.find_last_of('\n') + 1);
    std::istringstream in(text);
    return read_trace_csv(in);
}

std::vector<std::string> parameter_names(Model m) {
    switch (m) {
        case Model::Wslts: return {"gamma_w", "gamma_l", "lambda"};
        case Model::Aeg: return {"epsilon", "phi"};
        case Model::Gls: return {"gamma_exec", "p_explore_loss", "p_explore_win", "p_exploit_loss", "p_exploit_win"};
    }
    return {};
}

std::vector<double> density_grid(const ScalarPrior& p, std::size_t points) {
    double lo = p.a, hi = p.b;
    if (p.kind == ScalarPrior::Kind::LogNormal) {
        lo = 0.0;
        hi = std::exp(p.a + 3.0 * p.b);
    }
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

void check_against_run(const CampaignConfig& cfg, const fs::path& run_dir) {
    const CampaignConfig run = CampaignConfig::load(run_dir / kConfigFile);
    if (run.task_name() != cfg.task_name() || run.blocks != cfg.blocks || run.arms != cfg.arms ||
        run.trials != cfg.trials || run.prior != cfg.prior || run.network_shape() != cfg.network_shape()) {
        throw ConfigError("run in " + run_dir.string() + " was made for a different task or shape");
    }
}

}  // namespace

BuildInfo build_info() {
    BuildInfo b;
    b.version = kVersion;
    b.compiler = BOED_COMPILER;
    b.build_type = BOED_BUILD_TYPE;
    b.eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
              std::to_string(EIGEN_MINOR_VERSION);
    return b;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ArtifactError("SHA-256 failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string hash_artifact(const fs::path& path, const std::vector<std::string>& volatile_columns) {
    const std::string text = read_file(path);
    if (volatile_columns.empty()) return sha256_hex(text);
    std::istringstream in(text);
    std::string line, canonical;
    std::vector<bool> drop;
    bool header = true;
    while (std::getline(in, line)) {
        const auto cells = split_csv_line(line);
        if (header) {
            for (const auto& c : cells)
                drop.push_back(std::find(volatile_columns.begin(), volatile_columns.end(), c) != volatile_columns.end());
            header = false;
        }
        bool first = true;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i < drop.size() && drop[i]) continue;
            canonical += (first ? "" : ",") + cells[i];
            first = false;
        }
        canonical += '\n';
    }
    return sha256_hex(canonical);
}

Manifest read_manifest(const fs::path& run_dir) {
    const fs::path p = run_dir / kManifestFile;
    if (!fs::exists(p)) throw ArtifactError("no manifest in " + run_dir.string() + " (run incomplete?)");
    json j;
    try {
        j = json::parse(read_file(p));
        Manifest m;
        m.schema_version = j.at("schema_version").get<int>();
        m.kind = j.at("kind").get<std::string>();
        const auto& b = j.at("build");
        m.build = {b.at("version"), b.at("compiler"), b.at("build_type"), b.at("eigen")};
        m.design_source = j.value("design_source", std::string());
        for (const auto& f : j.at("files")) {
            m.files.push_back({f.at("path"), f.at("sha256"), f.at("bytes").get<std::uintmax_t>(),
                               f.at("volatile_columns").get<std::vector<std::string>>()});
        }
        return m;
    } catch (const json::exception& e) {
        throw ArtifactError("malformed manifest " + p.string() + ": " + e.what());
    }
}

SearchOutcome run_design_search(const CampaignConfig& cfg, const fs::path& out_dir, std::ostream* log) {
    cfg.validate();
    claim_directory(cfg, out_dir);
    fs::create_directories(out_dir / "training");

    std::vector<TraceRow> resume;
    if (fs::exists(out_dir / kTraceFile)) {
        resume = read_partial_trace(out_dir / kTraceFile);
        if (resume.size() > cfg.bo.budget.total) resume.resize(cfg.bo.budget.total);
        if (log && !resume.empty()) *log << "resuming after " << resume.size() << " evaluations\n";
    }

    const GenerativeModel model = GenerativeModel::from_prior(cfg.prior, cfg.trials);
    const MiObjectiveConfig mi = cfg.objective_config();
    auto on_trained = [&out_dir](std::size_t index, const TrainedBound& tb) {
        char name[32];
        std::snprintf(name, sizeof name, "eval_%05zu.csv", index);
        std::ofstream out = open_out(out_dir / "training" / name);
        write_training_trace_csv(out, tb.estimate.trace);
    };
    const Objective objective = mi_objective(model, mi, cfg.seed, on_trained);

    std::ofstream trace = open_out(out_dir / kTraceFile);
    write_trace_header(trace, cfg.blocks * cfg.arms);
    trace.flush();
    auto on_row = [&](const TraceRow& row) {
        write_trace_row(trace, row);
        trace.flush();
        if (log) {
            *log << "eval " << row.iteration << "  U=" << row.utility << "  best=" << row.incumbent << '\n';
        }
    };

    BoConfig bo = cfg.bo;
    bo.parallelism = cfg.parallelism;
    SearchOutcome outcome{search_designs(objective, cfg.blocks, cfg.arms, bo, cfg.seed, resume, on_row), out_dir};
    trace.close();
    const SearchResult& r = outcome.result;

    save_checkpoint(out_dir / kCriticFile, r.trained->net);
    std::size_t failed = 0;
    for (const auto& row : r.trace) failed += std::isfinite(row.utility) ? 0 : 1;
    const json result = {{"task", cfg.task_name()},
                         {"design", design_json(r.best)},
                         {"best_index", r.best_index},
                         {"utility", r.best_utility},
                         {"posterior_mean", r.best_posterior_mean},
                         {"critic_bound", r.trained->estimate.value},
                         {"evaluations", r.trace.size()},
                         {"failed_evaluations", failed},
                         {"converged", r.converged}};
    write_file(out_dir / kResultFile, result.dump(2) + "\n");
    if (log) *log << "d* = " << format_design(r.best) << "  U = " << r.best_utility << '\n';

    std::vector<ManifestEntry> entries{{kConfigFile, "", 0, {}},
                                       {kTraceFile, "", 0, {"wall_time"}},
                                       {kCriticFile, "", 0, {}},
                                       {kResultFile, "", 0, {}}};
    std::vector<std::string> training;
    for (const auto& e : fs::directory_iterator(out_dir / "training"))
        training.push_back("training/" + e.path().filename().string());
    std::sort(training.begin(), training.end());
    for (auto& t : training) entries.push_back({t, "", 0, {}});
    write_manifest(out_dir, "search", "", std::move(entries));
    return outcome;
}

DesignSource DesignSource::parse(std::string_view text) {
    DesignSource s;
    const std::string t(text);
    if (t == "baseline") {
        s.kind = Kind::Baseline;
    } else if (t.rfind("optimal:", 0) == 0 && t.size() > 8) {
        s.kind = Kind::Optimal;
        s.run_dir = t.substr(8);
    } else if (t.rfind("explicit:", 0) == 0) {
        s.kind = Kind::Explicit;
        std::stringstream rows(t.substr(9));
        std::string row;
        while (std::getline(rows, row, ';')) {
            std::vector<double> r;
            for (const auto& cell : split_csv_line(row)) {
                try {
                    std::size_t used = 0;
                    r.push_back(std::stod(cell, &used));
                    if (used != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw ConfigError("bad design entry '" + cell + "'");
                }
            }
            s.rows.push_back(std::move(r));
        }
        try {
            (void)Design(s.rows);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("bad explicit design: ") + e.what());
        }
    } else {
        throw ConfigError("design source must be 'optimal:<run dir>', 'explicit:<rows>' or 'baseline'");
    }
    return s;
}

std::string DesignSource::describe() const {
    switch (kind) {
        case Kind::Baseline: return "baseline";
        case Kind::Optimal: return "optimal:" + run_dir.string();
        case Kind::Explicit: {
            std::ostringstream os;
            os << std::setprecision(17) << "explicit:";
            for (std::size_t b = 0; b < rows.size(); ++b) {
                os << (b ? ";" : "");
                for (std::size_t k = 0; k < rows[b].size(); ++k) os << (k ? "," : "") << rows[b][k];
            }
            return os.str();
        }
    }
    return {};
}

EvaluationOutcome run_evaluation(const CampaignConfig& cfg, const DesignSource& source, const fs::path& out_dir,
                                 std::ostream* log) {
    cfg.validate();
    const GenerativeModel model = GenerativeModel::from_prior(cfg.prior, cfg.trials);
    const MiObjectiveConfig mi = cfg.objective_config();

    // Collect (label, design, critic) triples before touching out_dir so a
    // bad source leaves nothing behind.
    struct Candidate {
        std::string label;
        Design design;
        std::optional<BoundNetwork> net;
        std::uint64_t train_seed = 0;
    };
    std::vector<Candidate> candidates;
    switch (source.kind) {
        case DesignSource::Kind::Optimal: {
            check_against_run(cfg, source.run_dir);
            const fs::path critic = source.run_dir / kCriticFile;
            BoundNetwork net = load_checkpoint(critic);
            json result;
            try {
                result = json::parse(read_file(source.run_dir / kResultFile));
            } catch (const json::exception& e) {
                throw ArtifactError("malformed result.json: " + std::string(e.what()));
            }
            candidates.push_back({"optimal", design_from_json(result.at("design")), std::move(net), 0});
            break;
        }
        case DesignSource::Kind::Explicit: {
            Design d(source.rows);
            if (d.blocks() != cfg.blocks || d.arms() != cfg.arms) {
                throw ConfigError("explicit design is " + std::to_string(d.blocks()) + "x" + std::to_string(d.arms()) +
                                  " but the config expects " + std::to_string(cfg.blocks) + "x" +
                                  std::to_string(cfg.arms));
            }
            candidates.push_back({"explicit", d, std::nullopt, derive_seed(cfg.seed, "evaluate_explicit", 0)});
            break;
        }
        case DesignSource::Kind::Baseline: {
            if (cfg.eval.baseline_replicates < 1) throw ConfigError("eval.baseline_replicates must be positive");
            for (std::size_t r = 0; r < cfg.eval.baseline_replicates; ++r) {
                Rng rng = make_rng(cfg.seed, "baseline_design", r);
                char label[32];
                std::snprintf(label, sizeof label, "baseline_%02zu", r);
                candidates.push_back({label, sample_baseline_design(cfg.blocks, cfg.arms, rng), std::nullopt,
                                      derive_seed(cfg.seed, "evaluate_baseline", r)});
            }
            break;
        }
    }

    claim_directory(cfg, out_dir);
    std::vector<ManifestEntry> entries{{kConfigFile, "", 0, {}}};
    EvaluationOutcome outcome;
    outcome.dir = out_dir;
    json summary = {{"task", cfg.task_name()}, {"design_source", source.describe()}, {"designs", json::array()}};

    const bool md = cfg.prior.task == Task::ModelDiscrimination;
    const auto names = md ? std::vector<std::string>{} : parameter_names(cfg.prior.model);
    std::vector<std::vector<double>> grids;
    std::vector<std::vector<std::pair<std::string, std::vector<double>>>> density_columns(names.size());
    std::vector<VariableOfInterest> draws;
    Eigen::MatrixXd encoded_draws;
    std::vector<VariableOfInterest> truths;
    std::vector<Trajectory> observations_per_design;
    if (!md) {
        const auto& priors = cfg.prior.params[static_cast<std::size_t>(cfg.prior.model)];
        for (const auto& p : priors) grids.push_back(density_grid(p, cfg.eval.grid_points));
        Rng draw_rng = make_rng(cfg.seed, "posterior_draws");
        draws = sample_prior(cfg.prior, cfg.eval.posterior_draws, draw_rng);
        encoded_draws = encode_variables(draws, model.encoding);
        Rng truth_rng = make_rng(cfg.seed, "test_truths");
        truths = sample_prior(cfg.prior, cfg.eval.pe_observations, truth_rng);
    }

    for (auto& c : candidates) {
        if (!c.net) {
            if (log) *log << c.label << ": training critic at " << format_design(c.design) << '\n';
            TrainedBound tb = train_at_design(model, c.design, mi, c.train_seed, 0);
            c.net = std::move(tb.net);
            std::ofstream t = open_out(out_dir / ("training_" + c.label + ".csv"));
            write_training_trace_csv(t, tb.estimate.trace);
            entries.push_back({"training_" + c.label + ".csv", "", 0, {}});
        }
        EvaluatedDesign ev;
        ev.label = c.label;
        ev.design = c.design;
        json dj = {{"label", c.label}, {"design", design_json(c.design)}};
        // The same test stream for every design keeps comparisons paired.
        Rng test_rng = make_rng(cfg.seed, "test_observations");
        if (md) {
            ev.confusion = confusion_matrix(*c.net, model, c.design, cfg.eval.n_test, test_rng);
            const std::string file = "confusion_" + c.label + ".csv";
            std::ofstream out = open_out(out_dir / file);
            write_confusion_csv(out, ev.confusion);
            entries.push_back({file, "", 0, {}});
            std::vector<double> diag;
            for (std::size_t m = 0; m < kModelCount; ++m) diag.push_back(ev.confusion.rate(m, m));
            dj["diagonal"] = diag;
            if (log) {
                *log << c.label << ": diagonal";
                for (double x : diag) *log << ' ' << x;
                *log << '\n';
            }
        } else {
            const std::size_t dim = names.size();
            std::vector<PosteriorSample> posts;
            posts.reserve(truths.size());
            const std::string file = "posterior_" + c.label + ".csv";
            std::ofstream out = open_out(out_dir / file);
            out << "observation";
            for (const auto& n : names) out << ",true_" << n << ",mean_" << n << ",sd_" << n;
            out << ",ess,low_ess\n";
            ev.mean_posterior_sd.assign(dim, 0.0);
            for (std::size_t o = 0; o < truths.size(); ++o) {
                const Trajectory y = model.simulate(truths[o], c.design, test_rng);
                PosteriorSample ps = posterior_pe(*c.net, y, draws, model.encoding, &encoded_draws);
                out << o;
                for (std::size_t j = 0; j < dim; ++j) {
                    const double sd = ps.sd(j);
                    ev.mean_posterior_sd[j] += sd / static_cast<double>(truths.size());
                    out << ',' << truths[o].params[j] << ',' << ps.mean(j) << ',' << sd;
                }
                out << ',' << ps.ess << ',' << (ps.low_ess ? 1 : 0) << '\n';
                if (ps.ess < 10.0) {
                    ++ev.degenerate;
                } else {
                    posts.push_back(std::move(ps));
                }
            }
            entries.push_back({file, "", 0, {}});
            for (std::size_t j = 0; j < dim; ++j) {
                std::vector<double> dens(grids[j].size(), 0.0);
                if (!posts.empty()) dens = average_marginal_density(posts, j, grids[j]);
                density_columns[j].emplace_back(c.label, std::move(dens));
            }
            dj["mean_posterior_sd"] = ev.mean_posterior_sd;
            dj["degenerate_observations"] = ev.degenerate;
            if (log) {
                *log << c.label << ": mean posterior sd";
                for (std::size_t j = 0; j < dim; ++j) *log << ' ' << names[j] << '=' << ev.mean_posterior_sd[j];
                *log << '\n';
            }
        }
        summary["designs"].push_back(dj);
        outcome.designs.push_back(std::move(ev));
    }

    for (std::size_t j = 0; j < names.size(); ++j) {
        const std::string file = "density_" + names[j] + ".csv";
        std::ofstream out = open_out(out_dir / file);
        write_density_csv(out, grids[j], density_columns[j]);
        entries.push_back({file, "", 0, {}});
    }
    write_file(out_dir / "evaluation.json", summary.dump(2) + "\n");
    entries.push_back({"evaluation.json", "", 0, {}});
    write_manifest(out_dir, "evaluate", source.describe(), std::move(entries));
    return outcome;
}

bool ReplayReport::on_disk_ok() const {
    for (const auto& e : on_disk)
        if (e.status != ReplayEntry::Status::Match) return false;
    return true;
}

bool ReplayReport::regenerated_ok() const {
    for (const auto& e : regenerated)
        if (e.status != ReplayEntry::Status::Match) return false;
    return true;
}

ReplayReport replay(const fs::path& run_dir, bool verify_only, std::ostream* log) {
    const Manifest m = read_manifest(run_dir);
    ReplayReport report;
    report.recorded = m.build;
    report.environment_matches = m.build == build_info();

    for (const auto& f : m.files) {
        const fs::path p = run_dir / f.path;
        ReplayEntry e{f.path, ReplayEntry::Status::Match};
        if (!fs::exists(p)) {
            e.status = ReplayEntry::Status::Missing;
        } else if (hash_artifact(p, f.volatile_columns) != f.sha256) {
            e.status = ReplayEntry::Status::Mismatch;
        }
        report.on_disk.push_back(e);
    }
    if (verify_only) return report;

    const CampaignConfig cfg = CampaignConfig::load(run_dir / kConfigFile);
    const fs::path scratch = run_dir / ".replay";
    fs::remove_all(scratch);
    if (log) *log << "re-executing into " << scratch.string() << '\n';
    if (m.kind == "search") {
        run_design_search(cfg, scratch, log);
    } else if (m.kind == "evaluate") {
        run_evaluation(cfg, DesignSource::parse(m.design_source), scratch, log);
    } else {
        throw ArtifactError("unknown run kind '" + m.kind + "' in manifest");
    }
    const Manifest again = read_manifest(scratch);
    report.reexecuted = true;
    for (const auto& f : m.files) {
        ReplayEntry e{f.path, ReplayEntry::Status::Missing};
        for (const auto& g : again.files) {
            if (g.path == f.path) {
                e.status = g.sha256 == f.sha256 ? ReplayEntry::Status::Match : ReplayEntry::Status::Mismatch;
                break;
            }
        }
        report.regenerated.push_back(e);
    }
    fs::remove_all(scratch);
    return report;
}

void print_replay_report(std::ostream& out, const ReplayReport& r) {
    auto status = [](ReplayEntry::Status s) {
        switch (s) {
            case ReplayEntry::Status::Match: return "ok";
            case ReplayEntry::Status::Mismatch: return "MISMATCH";
            case ReplayEntry::Status::Missing: return "MISSING";
        }
        return "";
    };
    if (!r.environment_matches) {
        const BuildInfo now = build_info();
        out << "environment differs from the recorded build (" << r.recorded.compiler << ' ' << r.recorded.build_type
            << " eigen " << r.recorded.eigen << " vs " << now.compiler << ' ' << now.build_type << " eigen "
            << now.eigen << "); regenerated mismatches may stem from the environment, not corruption\n";
    }
    for (const auto& e : r.on_disk)
        if (e.status != ReplayEntry::Status::Match) out << "on disk     " << status(e.status) << "  " << e.path << '\n';
    for (const auto& e : r.regenerated)
        if (e.status != ReplayEntry::Status::Match)
            out << "regenerated " << (r.environment_matches ? status(e.status) : "ENV-DIFF") << "  " << e.path << '\n';
    out << "on-disk integrity: " << (r.on_disk_ok() ? "ok" : "FAILED") << " (" << r.on_disk.size() << " files)\n";
    if (r.reexecuted) out << "re-execution: " << (r.regenerated_ok() ? "identical" : "DIFFERS") << '\n';
}

void simulate_to_directory(const CampaignConfig& cfg, const Design& design, std::size_t n, const fs::path& out_dir) {
    if (n < 1) throw ConfigError("need at least one trajectory");
    if (design.blocks() != cfg.blocks || design.arms() != cfg.arms) {
        throw ConfigError("design shape does not match the config");
    }
    const GenerativeModel model = GenerativeModel::from_prior(cfg.prior, cfg.trials);
    Rng rng = make_rng(cfg.seed, "simulate");
    std::vector<VariableOfInterest> vs;
    std::vector<Trajectory> ys;
    for (std::size_t i = 0; i < n; ++i) {
        vs.push_back(model.sample_variable(rng));
        ys.push_back(model.simulate(vs.back(), design, rng));
    }
    fs::create_directories(out_dir);
    {
        std::ofstream out = open_out(out_dir / "trajectories.csv");
        write_trajectories_csv(out, ys);
    }
    write_trajectory_cache(out_dir / "trajectories.btrj", ys);
    std::ofstream out = open_out(out_dir / "variables.csv");
    out << "sample_id,model,params\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << i << ',' << model_name(vs[i].model) << ',';
        for (std::size_t j = 0; j < vs[i].params.size(); ++j) out << (j ? ";" : "") << vs[i].params[j];
        out << '\n';
    }
}

}  // namespace boed
