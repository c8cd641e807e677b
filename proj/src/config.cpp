#include "boed/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <tuple>
#include <set>
#include <sstream>

#include "boed/errors.hpp"

namespace boed {

namespace {

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
    throw ConfigError("config key '" + key + "': " + what + " (got '" + value + "')");
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "expected a number");
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& p : split(v, ',')) out.push_back(parse_integer<std::size_t>(key, p));
    return out;
}

std::pair<double, double> parse_range(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 2) bad(key, v, "expected 'lo,hi'");
    return {parse_real(key, parts[0]), parse_real(key, parts[1])};
}

std::string fmt(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string fmt_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string fmt_priors(const std::vector<ScalarPrior>& ps) {
    std::string s;
    for (std::size_t i = 0; i < ps.size(); ++i) s += (i ? "; " : "") + ps[i].tag();
    return s;
}

const char* kPriorKeys[kModelCount] = {"prior.wslts", "prior.aeg", "prior.gls"};

}  // namespace

CampaignConfig CampaignConfig::defaults_for(std::string_view task) {
    CampaignConfig c;
    const std::string t = trim(task);
    if (t == "MD") {
        c.prior = PriorSpec::model_discrimination();
        c.blocks = 2;
        c.summary_dim = 6;
        c.head_hidden = {32, 32};
        c.train.epochs = 200;
        c.train.weight_decay = 1e-3;
        c.output_dir = "runs/md";
        return c;
    }
    if (t.rfind("PE:", 0) != 0) throw ConfigError("unknown task '" + t + "' (expected MD or PE:<model>)");
    Model m;
    try {
        m = parse_model(t.substr(3));
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    c.prior = PriorSpec::parameter_estimation(m);
    c.blocks = 3;
    c.head_hidden = {64, 32};
    switch (m) {
        case Model::Wslts:
            c.summary_dim = 8;
            c.train.epochs = 400;
            c.train.weight_decay = 1e-4;
            break;
        case Model::Aeg:
            c.summary_dim = 6;
            c.train.epochs = 300;
            break;
        case Model::Gls:
            c.summary_dim = 8;
            c.train.epochs = 300;
            break;
    }
    std::string lower(model_name(m));
    for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    c.output_dir = "runs/pe_" + lower;
    return c;
}

std::string CampaignConfig::task_name() const {
    if (prior.task == Task::ModelDiscrimination) return "MD";
    return "PE:" + std::string(model_name(prior.model));
}

CampaignConfig CampaignConfig::parse(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError("duplicate config key '" + key + "'");
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        if (v.empty()) throw ConfigError("config key '" + key + "' has an empty value");
        return v;
    };

    const auto version = take("schema_version");
    if (!version) throw ConfigError("config is missing 'schema_version'");
    if (parse_integer<int>("schema_version", *version) != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + *version);
    }
    const auto task = take("task");
    if (!task) throw ConfigError("config is missing 'task'");
    CampaignConfig c = defaults_for(*task);

    auto set_size = [&](const char* key, std::size_t& field) {
        if (auto v = take(key)) field = parse_integer<std::size_t>(key, *v);
    };
    auto set_real = [&](const char* key, double& field) {
        if (auto v = take(key)) field = parse_real(key, *v);
    };

    set_size("arms", c.arms);
    set_size("trials", c.trials);
    set_size("blocks", c.blocks);
    for (std::size_t m = 0; m < kModelCount; ++m) {
        if (auto v = take(kPriorKeys[m])) {
            std::vector<ScalarPrior> ps;
            for (const auto& tag : split(*v, ';')) {
                try {
                    ps.push_back(ScalarPrior::parse(tag));
                } catch (const DomainError& e) {
                    bad(kPriorKeys[m], *v, e.what());
                }
            }
            c.prior.params[m] = std::move(ps);
        }
    }
    if (auto v = take("net.summary_hidden")) c.summary_hidden = parse_sizes("net.summary_hidden", *v);
    set_size("net.summary_dim", c.summary_dim);
    if (auto v = take("net.head_hidden")) c.head_hidden = parse_sizes("net.head_hidden", *v);

    set_size("train.epochs", c.train.epochs);
    set_real("train.lr", c.train.lr);
    set_real("train.weight_decay", c.train.weight_decay);
    set_size("train.batch_size", c.train.batch_size);
    set_real("train.lr_factor", c.train.lr_factor);
    if (auto v = take("train.patience")) c.train.patience = parse_integer<int>("train.patience", *v);
    set_real("train.min_lr", c.train.min_lr);
    set_real("train.exp_cap", c.train.exp_cap);

    set_size("data.n_samples", c.n_samples);
    set_real("data.validation_fraction", c.validation_fraction);

    set_size("bo.total", c.bo.budget.total);
    set_size("bo.initial", c.bo.budget.initial);
    set_size("bo.window", c.bo.budget.window);
    set_real("bo.tolerance", c.bo.budget.tolerance);
    set_size("bo.refit_every", c.bo.refit_every);
    set_size("bo.hyper_starts", c.bo.hyper_starts);
    set_size("bo.candidates", c.bo.proposal.candidates);
    set_size("bo.refine_steps", c.bo.proposal.refine_steps);
    if (auto v = take("bo.lengthscale_bounds")) {
        std::tie(c.bo.bounds.lengthscale_lo, c.bo.bounds.lengthscale_hi) = parse_range("bo.lengthscale_bounds", *v);
    }
    if (auto v = take("bo.signal_bounds")) {
        std::tie(c.bo.bounds.signal_lo, c.bo.bounds.signal_hi) = parse_range("bo.signal_bounds", *v);
    }
    if (auto v = take("bo.noise_bounds")) {
        std::tie(c.bo.bounds.noise_lo, c.bo.bounds.noise_hi) = parse_range("bo.noise_bounds", *v);
    }

    set_size("eval.n_test", c.eval.n_test);
    set_size("eval.baseline_replicates", c.eval.baseline_replicates);
    set_size("eval.posterior_draws", c.eval.posterior_draws);
    set_size("eval.pe_observations", c.eval.pe_observations);
    set_size("eval.grid_points", c.eval.grid_points);

    if (auto v = take("seed")) c.seed = parse_integer<std::uint64_t>("seed", *v);
    if (auto v = take("output_dir")) c.output_dir = *v;
    set_size("parallelism", c.parallelism);

    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    c.validate();
    return c;
}

CampaignConfig CampaignConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void CampaignConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
    if (arms < 2 || arms > 255) fail("arms must lie in [2, 255]");
    if (trials < 1) fail("trials must be positive");
    if (blocks < 1) fail("blocks must be positive");
    try {
        prior.validate();
    } catch (const DomainError& e) {
        fail(e.what());
    }
    if (summary_hidden.empty() || head_hidden.empty()) fail("hidden layer lists must be non-empty");
    for (auto h : summary_hidden) if (h == 0) fail("hidden layer sizes must be positive");
    for (auto h : head_hidden) if (h == 0) fail("hidden layer sizes must be positive");
    if (summary_dim == 0) fail("net.summary_dim must be positive");
    if (train.epochs < 1) fail("train.epochs must be at least 1");
    if (!(train.lr > 0.0)) fail("train.lr must be positive");
    if (train.weight_decay < 0.0) fail("train.weight_decay must be non-negative");
    if (!(train.lr_factor > 0.0 && train.lr_factor <= 1.0)) fail("train.lr_factor must lie in (0, 1]");
    if (train.patience < 1) fail("train.patience must be positive");
    if (n_samples < 2) fail("data.n_samples must be at least 2");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) fail("data.validation_fraction must lie in (0, 1)");
    if (bo.budget.initial < 1 || bo.budget.initial > bo.budget.total) fail("need 1 <= bo.initial <= bo.total");
    if (bo.budget.window < 1) fail("bo.window must be positive");
    const auto& b = bo.bounds;
    if (!(b.lengthscale_lo > 0 && b.lengthscale_lo < b.lengthscale_hi)) fail("bad bo.lengthscale_bounds");
    if (!(b.signal_lo > 0 && b.signal_lo < b.signal_hi)) fail("bad bo.signal_bounds");
    if (!(b.noise_lo > 0 && b.noise_lo < b.noise_hi)) fail("bad bo.noise_bounds");
    if (eval.n_test < 1) fail("eval.n_test must be positive");
    if (eval.posterior_draws < 1 || eval.pe_observations < 1) fail("eval posterior sizes must be positive");
    if (eval.grid_points < 2) fail("eval.grid_points must be at least 2");
    if (parallelism < 1) fail("parallelism must be at least 1");
    if (output_dir.empty()) fail("output_dir must be set");
}

std::string CampaignConfig::serialize() const {
    std::ostringstream os;
    os << "schema_version = " << schema_version << '\n'
       << "task = " << task_name() << '\n'
       << "arms = " << arms << '\n'
       << "trials = " << trials << '\n'
       << "blocks = " << blocks << '\n';
    for (std::size_t m = 0; m < kModelCount; ++m) os << kPriorKeys[m] << " = " << fmt_priors(prior.params[m]) << '\n';
    os << "net.summary_hidden = " << fmt_sizes(summary_hidden) << '\n'
       << "net.summary_dim = " << summary_dim << '\n'
       << "net.head_hidden = " << fmt_sizes(head_hidden) << '\n'
       << "train.epochs = " << train.epochs << '\n'
       << "train.lr = " << fmt(train.lr) << '\n'
       << "train.weight_decay = " << fmt(train.weight_decay) << '\n'
       << "train.batch_size = " << train.batch_size << '\n'
       << "train.lr_factor = " << fmt(train.lr_factor) << '\n'
       << "train.patience = " << train.patience << '\n'
       << "train.min_lr = " << fmt(train.min_lr) << '\n'
       << "train.exp_cap = " << fmt(train.exp_cap) << '\n'
       << "data.n_samples = " << n_samples << '\n'
       << "data.validation_fraction = " << fmt(validation_fraction) << '\n'
       << "bo.total = " << bo.budget.total << '\n'
       << "bo.initial = " << bo.budget.initial << '\n'
       << "bo.window = " << bo.budget.window << '\n'
       << "bo.tolerance = " << fmt(bo.budget.tolerance) << '\n'
       << "bo.refit_every = " << bo.refit_every << '\n'
       << "bo.hyper_starts = " << bo.hyper_starts << '\n'
       << "bo.candidates = " << bo.proposal.candidates << '\n'
       << "bo.refine_steps = " << bo.proposal.refine_steps << '\n'
       << "bo.lengthscale_bounds = " << fmt(bo.bounds.lengthscale_lo) << ',' << fmt(bo.bounds.lengthscale_hi) << '\n'
       << "bo.signal_bounds = " << fmt(bo.bounds.signal_lo) << ',' << fmt(bo.bounds.signal_hi) << '\n'
       << "bo.noise_bounds = " << fmt(bo.bounds.noise_lo) << ',' << fmt(bo.bounds.noise_hi) << '\n'
       << "eval.n_test = " << eval.n_test << '\n'
       << "eval.baseline_replicates = " << eval.baseline_replicates << '\n'
       << "eval.posterior_draws = " << eval.posterior_draws << '\n'
       << "eval.pe_observations = " << eval.pe_observations << '\n'
       << "eval.grid_points = " << eval.grid_points << '\n'
       << "seed = " << seed << '\n'
       << "output_dir = " << output_dir << '\n'
       << "parallelism = " << parallelism << '\n';
    return os.str();
}

NetworkShape CampaignConfig::network_shape() const {
    NetworkShape s;
    s.blocks = blocks;
    s.block_input_dim = trials * (arms + 1);
    s.summary_dim = summary_dim;
    s.variable_dim = prior.task == Task::ModelDiscrimination ? kModelCount : model_arity(prior.model);
    s.summary_hidden = summary_hidden;
    s.head_hidden = head_hidden;
    return s;
}

MiObjectiveConfig CampaignConfig::objective_config() const {
    MiObjectiveConfig m;
    m.n_samples = n_samples;
    m.validation_fraction = validation_fraction;
    m.shape = network_shape();
    m.train = train;
    return m;
}

}  // namespace boed
