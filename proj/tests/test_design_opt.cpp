#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "boed/design_opt.hpp"
#include "boed/errors.hpp"
#include "support/oracles.hpp"

using namespace boed;

namespace {

Eigen::MatrixXd column(const std::vector<double>& x) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = x[i];
    return X;
}

Eigen::VectorXd vec(const std::vector<double>& u) {
    return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}

// Smooth synthetic utility with its maximum at 0.7 in every coordinate.
double bump(const Design& d) {
    double s = 0.0;
    for (double x : d.flat()) s += (x - 0.7) * (x - 0.7);
    return std::exp(-4.0 * s);
}

BoConfig small_bo(std::size_t total, std::size_t initial) {
    BoConfig c;
    c.budget.total = total;
    c.budget.initial = initial;
    c.proposal.candidates = 512;
    c.proposal.refine_steps = 20;
    c.hyper_starts = 3;
    return c;
}

}  // namespace

TEST_CASE("Matern-5/2 kernel values") {
    CHECK(matern52(0.0, 0.4, 2.5) == 2.5);
    const double expect = 2.5 * (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
    CHECK(std::abs(matern52(0.4, 0.4, 2.5) - expect) <= 1e-15);
}

TEST_CASE("GP predictions match the textbook oracle on 1-D toys") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rep % 7;
        std::vector<double> x(n), u(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = uniform01(rng);
            u[i] = std::sin(6.0 * x[i]) + 0.1 * standard_normal(rng);
        }
        const GpHyper h{0.05 + uniform01(rng), 0.1 + 2.0 * uniform01(rng), 1e-4 + 0.1 * uniform01(rng)};
        const GpState gp(column(x), vec(u), h);
        for (int q = 0; q < 25; ++q) {
            const double xq = 1.2 * uniform01(rng) - 0.1;
            const auto ref = oracle::gp_predict(x, u, h.lengthscale, h.signal_variance, h.noise_variance + gp.jitter(), xq);
            const GpPrediction p = gp.predict(std::vector<double>{xq});
            CHECK(std::abs(p.mean - ref.mean) <= 1e-8);
            CHECK(std::abs(p.variance - std::max(0.0, ref.variance)) <= 1e-8);
        }
    }
}

TEST_CASE("duplicate inputs fit via jitter and interpolate") {
    Rng rng(2);
    const Eigen::MatrixXd X = column({0.3, 0.3, 0.8});
    const Eigen::VectorXd u = vec({0.5, 0.5, -0.2});
    const GpState gp = gp_fit(X, u, GpBounds{}, rng);
    CHECK(std::abs(gp.predict(std::vector<double>{0.3}).mean - 0.5) <= 1e-6);
    // Forcing zero noise on exact duplicates needs the jitter path.
    const GpState exact(X, u, GpHyper{0.3, 1.0, 0.0});
    CHECK(exact.jitter() > 0.0);
    CHECK(std::abs(exact.predict(std::vector<double>{0.3}).mean - 0.5) <= 1e-6);
}

TEST_CASE("constant targets") {
    Rng rng(3);
    const Eigen::MatrixXd X = column({0.1, 0.4, 0.5, 0.9});
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.37);
    const GpState gp = gp_fit(X, u, GpBounds{}, rng);
    for (double xq : {0.0, 0.25, 0.6, 1.0}) CHECK(std::abs(gp.predict(std::vector<double>{xq}).mean - 0.37) <= 1e-9);
    CHECK(gp.hyper().signal_variance <= 1e-3);
}

TEST_CASE("noiseless interpolation and prior reversion") {
    const Eigen::MatrixXd X = column({0.2, 0.5});
    const Eigen::VectorXd u = vec({1.0, 3.0});
    const GpState gp(X, u, GpHyper{0.01, 1.7, 1e-12});
    CHECK(std::abs(gp.predict(std::vector<double>{0.2}).mean - 1.0) <= 1e-6);
    CHECK(std::abs(gp.predict(std::vector<double>{0.5}).mean - 3.0) <= 1e-6);
    const GpPrediction far = gp.predict(std::vector<double>{0.95});
    CHECK(std::abs(far.mean - gp.prior_mean()) <= 1e-9);
    CHECK(far.mean == doctest::Approx(2.0));
    CHECK(std::abs(far.variance - 1.7) <= 1e-9);
}

TEST_CASE("predictive variance is non-negative everywhere") {
    Rng rng(4);
    const std::size_t n = 30, dim = 6;
    Eigen::MatrixXd X(n, dim);
    Eigen::VectorXd u(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) X(i, d) = uniform01(rng);
        u(i) = uniform01(rng);
    }
    const GpState gp = gp_fit(X, u, GpBounds{}, rng);
    std::vector<double> x(dim);
    for (int q = 0; q < 100000; ++q) {
        for (double& xi : x) xi = uniform01(rng);
        REQUIRE(gp.predict(x).variance >= 0.0);
        REQUIRE(expected_improvement(gp, x) >= 0.0);
    }
}

TEST_CASE("expected improvement closed form") {
    CHECK(expected_improvement(1.0, 0.0, 2.0) == 0.0);
    CHECK(std::abs(expected_improvement(0.4, 1.0, 0.4) - 1.0 / std::sqrt(2.0 * std::numbers::pi)) <= 1e-15);
    CHECK(expected_improvement(3.0, 0.0, 2.0) == 1.0);
}

TEST_CASE("expected improvement matches Monte Carlo") {
    Rng rng(5);
    std::mt19937_64 mc(6);
    std::normal_distribution<double> z;
    for (int t = 0; t < 100; ++t) {
        const double mean = 2.0 * uniform01(rng) - 1.0;
        const double sd = 0.05 + uniform01(rng);
        const double inc = 2.0 * uniform01(rng) - 1.0;
        const int n = 1000000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = std::max(0.0, z(mc) * sd + mean - inc);
            s += g;
            s2 += g * g;
        }
        const double m = s / n;
        const double se = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
        // 4 sigma over 100 triples; the floor covers tails no draw reaches.
        CHECK(std::abs(expected_improvement(mean, sd, inc) - m) <= 4.0 * se + 1e-9);
    }
}

TEST_CASE("EI vanishes at the incumbent as noise goes to zero") {
    const Eigen::MatrixXd X = column({0.1, 0.5, 0.9});
    const Eigen::VectorXd u = vec({0.2, 0.8, 0.4});
    const GpState gp(X, u, GpHyper{0.2, 1.0, 1e-10});
    for (double x : {0.1, 0.5, 0.9}) CHECK(expected_improvement(gp, std::vector<double>{x}) <= 1e-4);
}

TEST_CASE("proposals") {
    SUBCASE("flat noiseless data still yields an in-bounds point") {
        Rng rng(7);
        Eigen::MatrixXd X(4, 3);
        X << 0.1, 0.2, 0.3, 0.9, 0.8, 0.7, 0.5, 0.5, 0.5, 0.2, 0.9, 0.4;
        const GpState gp(X, Eigen::VectorXd::Constant(4, 1.0), GpHyper{0.3, 1e-4, 1e-6});
        const auto x = propose_next(gp, ProposalConfig{}, rng);
        REQUIRE(x.size() == 3);
        for (double xi : x) CHECK((xi >= 0.0 && xi <= 1.0));
    }
    SUBCASE("a single point is not proposed again") {
        Rng rng(8);
        const GpState gp(column({0.4}), vec({1.0}), GpHyper{0.2, 1.0, 1e-8});
        const auto x = propose_next(gp, ProposalConfig{}, rng);
        CHECK(std::abs(x[0] - 0.4) > 1e-3);
    }
    SUBCASE("seeded proposals repeat") {
        const GpState gp(column({0.1, 0.6, 0.8}), vec({0.1, 0.5, 0.2}), GpHyper{0.2, 1.0, 1e-3});
        Rng a(9), b(9);
        for (int i = 0; i < 3; ++i) CHECK(propose_next(gp, ProposalConfig{}, a) == propose_next(gp, ProposalConfig{}, b));
    }
}

TEST_CASE("Latin hypercube strata") {
    Rng rng(10);
    const auto pts = latin_hypercube(20, 6, rng);
    for (std::size_t d = 0; d < 6; ++d) {
        std::vector<int> hit(20, 0);
        for (const auto& p : pts) ++hit[static_cast<std::size_t>(p[d] * 20)];
        for (int h : hit) CHECK(h == 1);
    }
}

TEST_CASE("pure random search returns the best of its points") {
    std::vector<double> seen;
    const Objective obj = [&](const Design& d, std::size_t) {
        seen.push_back(bump(d));
        return ObjectiveResult{seen.back(), std::nullopt};
    };
    const SearchResult r = search_designs(obj, 1, 2, small_bo(3, 3), 1);
    REQUIRE(r.trace.size() == 3);
    CHECK(r.best_utility == *std::max_element(seen.begin(), seen.end()));
}

TEST_CASE("BO search invariants on a synthetic utility") {
    Rng noise(11);
    const Objective obj = [&](const Design& d, std::size_t i) {
        Rng r = make_rng(99, "noise", i);
        return ObjectiveResult{bump(d) + 0.01 * standard_normal(r), std::nullopt};
    };
    const BoConfig cfg = small_bo(30, 8);
    const SearchResult r = search_designs(obj, 1, 2, cfg, 3);
    REQUIRE(r.trace.size() == 30);
    double prev = -1e300;
    for (const auto& row : r.trace) {
        CHECK(row.incumbent >= prev);
        prev = row.incumbent;
        for (double x : row.design) CHECK((x >= 0.0 && x <= 1.0));
    }
    CHECK(bump(r.best) > 0.8);  // near the optimum at (0.7, 0.7)

    SUBCASE("same seed, same trace") {
        const SearchResult again = search_designs(obj, 1, 2, cfg, 3);
        for (std::size_t i = 0; i < 30; ++i) {
            CHECK(again.trace[i].design == r.trace[i].design);
            CHECK(again.trace[i].utility == r.trace[i].utility);
        }
    }
    SUBCASE("parallel initial phase, same trace") {
        BoConfig par = cfg;
        par.parallelism = 3;
        const SearchResult p = search_designs(obj, 1, 2, par, 3);
        for (std::size_t i = 0; i < 30; ++i) CHECK(p.trace[i].design == r.trace[i].design);
    }
    SUBCASE("resuming from a partial trace reproduces the run") {
        std::stringstream csv;
        write_trace_header(csv, 2);
        for (std::size_t i = 0; i < 17; ++i) write_trace_row(csv, r.trace[i]);
        const auto resumed_rows = read_trace_csv(csv);
        REQUIRE(resumed_rows.size() == 17);
        std::size_t calls = 0;
        const Objective counting = [&](const Design& d, std::size_t i) {
            ++calls;
            return obj(d, i);
        };
        const SearchResult resumed = search_designs(counting, 1, 2, cfg, 3, resumed_rows);
        CHECK(calls == 13 + 1);  // new evaluations plus the retrain at d*
        for (std::size_t i = 0; i < 30; ++i) {
            CHECK(resumed.trace[i].design == r.trace[i].design);
            CHECK(resumed.trace[i].utility == r.trace[i].utility);
        }
        CHECK(resumed.best == r.best);
    }
    SUBCASE("a trace from another seed is rejected") {
        CHECK_THROWS_AS(search_designs(obj, 1, 2, cfg, 4, r.trace), ArtifactError);
    }
}

TEST_CASE("failed evaluations are recorded as missing and skipped") {
    const Objective obj = [](const Design& d, std::size_t i) -> ObjectiveResult {
        if (i % 4 == 1) throw TrainingError("synthetic failure");
        return {bump(d), std::nullopt};
    };
    const SearchResult r = search_designs(obj, 1, 2, small_bo(12, 5), 5);
    for (const auto& row : r.trace) CHECK(std::isnan(row.utility) == (row.iteration % 4 == 1));
    CHECK(std::isfinite(r.best_utility));
    std::stringstream csv;
    write_trace_header(csv, 2);
    for (const auto& row : r.trace) write_trace_row(csv, row);
    CHECK(csv.str().find(",NA,") != std::string::npos);
    const auto back = read_trace_csv(csv);
    CHECK(std::isnan(back[1].utility));
    CHECK(back[2].design == r.trace[2].design);
}

TEST_CASE("convergence window stops early") {
    const Objective obj = [](const Design&, std::size_t) { return ObjectiveResult{0.5, std::nullopt}; };
    BoConfig cfg = small_bo(60, 5);
    cfg.budget.window = 10;
    const SearchResult r = search_designs(obj, 1, 2, cfg, 6);
    CHECK(r.converged);
    CHECK(r.trace.size() == 11);
}

TEST_CASE("the critic returned for d* is reproducible") {
    const GenerativeModel model = GenerativeModel::from_prior(PriorSpec::model_discrimination(), 30);
    MiObjectiveConfig mi;
    mi.n_samples = 200;
    mi.shape = NetworkShape::for_task(PriorSpec::model_discrimination(), 2, 30, 3);
    mi.train.epochs = 3;
    const SearchResult r = search_designs(mi_objective(model, mi, 7), 2, 3, small_bo(4, 3), 7);
    REQUIRE(r.trained.has_value());
    const TrainedBound again = train_at_design(model, r.best, mi, 7, r.best_index);
    CHECK(again.net == r.trained->net);
    CHECK(again.estimate.value == r.best_utility);
}
