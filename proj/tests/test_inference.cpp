#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "boed/errors.hpp"
#include "boed/inference.hpp"
#include "support/toy.hpp"

using namespace boed;

namespace {

BoundNetwork constant_network(const NetworkShape& s, double c) {
    BoundNetwork net(s);
    net.head().layers().back().bias(0) = c;
    return net;
}

const GenerativeModel& md_model() {
    static const GenerativeModel m = GenerativeModel::from_prior(PriorSpec::model_discrimination(), 30);
    return m;
}

const Design kMdDesign({{0.0, 0.0, 0.6}, {1.0, 1.0, 0.0}});

PosteriorSample uniform_sample(std::size_t n, Rng& rng, std::size_t dims = 1) {
    PosteriorSample ps;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dims);
        for (double& x : v) x = uniform01(rng);
        ps.values.push_back(std::move(v));
    }
    ps.weights.assign(n, 1.0 / static_cast<double>(n));
    ps.ess = static_cast<double>(n);
    return ps;
}

}  // namespace

TEST_CASE("model posteriors from an untrained critic") {
    const auto shape = NetworkShape::for_task(PriorSpec::model_discrimination(), 2, 30, 3);
    const BoundNetwork zero(shape);
    Rng rng(1), init(2);
    const BoundNetwork random = BoundNetwork::create(shape, init);
    for (int i = 0; i < 1000; ++i) {
        const Trajectory y = md_model().simulate(md_model().sample_variable(rng), kMdDesign, rng);
        const auto p0 = posterior_md(zero, y, md_model().encoding);
        for (double p : p0) CHECK(std::abs(p - 1.0 / 3.0) <= 1e-15);
        const auto p = posterior_md(random, y, md_model().encoding);
        REQUIRE(p.size() == 3);
        CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
        for (double x : p) CHECK((x >= 0.0 && x <= 1.0));
    }
}

TEST_CASE("self-normalized weights") {
    const std::vector<double> t{0.3, -1.2, 2.0, 0.0};
    const auto w = normalized_weights(t);
    CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-15);
    std::vector<double> shifted = t;
    for (double& x : shifted) x += 700.0;  // overflows without the max shift
    const auto ws = normalized_weights(shifted);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(ws[i] - w[i]) <= 1e-12);  // 700 + t rounds t
    const double z = std::exp(0.3) + std::exp(-1.2) + std::exp(2.0) + 1.0;
    CHECK(std::abs(w[2] - std::exp(2.0) / z) <= 1e-15);
    const std::vector<double> prior{std::log(0.5), std::log(0.5), std::log(0.0 + 1e-300), std::log(1.0)};
    CHECK(normalized_weights(t, prior)[2] < 1e-200);
    CHECK_THROWS_AS(normalized_weights(t, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("ties go to the lowest index") {
    CHECK(argmax_lowest(std::vector<double>{0.2, 0.4, 0.4}) == 1);
    CHECK(argmax_lowest(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == 0);
    CHECK(argmax_lowest(std::vector<double>{0.1, 0.2, 0.7}) == 2);
}

TEST_CASE("importance weights under a constant critic") {
    const PriorSpec spec = PriorSpec::parameter_estimation(Model::Wslts);
    const auto enc = VariableEncoding::for_prior(spec);
    const BoundNetwork one = constant_network(NetworkShape::for_task(spec, 3, 30, 3), 1.0);
    Rng rng(3);
    const auto draws = sample_prior(spec, 2000, rng);
    const Design d({{0, 1, 0}, {0, 1, 1}, {1, 0, 1}});
    const Trajectory y = simulate_model(Model::Wslts, draws[0].params, d, 30, rng);
    const PosteriorSample ps = posterior_pe(one, y, draws, enc);
    REQUIRE(ps.size() == 2000);
    for (double w : ps.weights) CHECK(std::abs(w - 1.0 / 2000) <= 1e-15);
    CHECK(std::abs(ps.ess - 2000.0) <= 1e-8);
    CHECK_FALSE(ps.low_ess);
    double m = 0.0;
    for (const auto& v : draws) m += v.params[0] / 2000.0;
    CHECK(std::abs(ps.mean(0) - m) <= 1e-12);
}

TEST_CASE("effective sample size") {
    CHECK(effective_sample_size(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0));
    CHECK(effective_sample_size(std::vector<double>{1.0, 0.0, 0.0}) == doctest::Approx(1.0));
    // Unnormalized weights give the same answer.
    CHECK(effective_sample_size(std::vector<double>{2.0, 1.0, 1.0}) == doctest::Approx(16.0 / 6.0));
}

TEST_CASE("a collapsed posterior is flagged") {
    const PriorSpec spec = PriorSpec::parameter_estimation(Model::Aeg);
    const auto enc = VariableEncoding::for_prior(spec);
    auto shape = NetworkShape::for_task(spec, 1, 5, 2);
    BoundNetwork net(shape);
    // Large weight on the first variable coordinate: exp(T) concentrates on
    // the draw with the largest epsilon.
    net.head().layers()[0].weight(0, shape.summary_dim) = 1.0;
    net.head().layers()[1].weight(0, 0) = 1.0;
    net.head().layers()[2].weight(0, 0) = 5000.0;
    Rng rng(4);
    const auto draws = sample_prior(spec, 500, rng);
    const Trajectory y = simulate_model(Model::Aeg, draws[0].params, Design({{0.5, 0.5}}), 5, rng);
    const PosteriorSample ps = posterior_pe(net, y, draws, enc);
    CHECK(ps.ess < 5.0);
    CHECK(ps.low_ess);
    CHECK_THROWS_AS(marginal_density(ps, 0, std::vector<double>{0.5}), DomainError);
    CHECK_NOTHROW(marginal_density(ps, 0, std::vector<double>{0.5}, 0.05));
}

TEST_CASE("confusion matrix bookkeeping") {
    const BoundNetwork zero(NetworkShape::for_task(PriorSpec::model_discrimination(), 2, 30, 3));
    Rng rng(5);
    const ConfusionMatrix cm = confusion_matrix(zero, md_model(), kMdDesign, 1000, rng);
    CHECK(cm.total() == 3000);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(cm.rate(t, 0) + cm.rate(t, 1) + cm.rate(t, 2) == doctest::Approx(1.0));
        CHECK(cm.count(t, 0) == 1000);  // uniform posterior, lowest index wins
    }
    std::ostringstream os;
    write_confusion_csv(os, cm);
    CHECK(os.str().rfind("true_model,inferred_model,count,rate\n0,0,1000,1\n", 0) == 0);
}

TEST_CASE("the exact Bayes classifier reproduces the enumerated confusion matrix") {
    const auto models = toy::exact();
    std::vector<std::vector<double>> expect(2, std::vector<double>(2, 0.0));
    for (std::size_t t = 0; t < 2; ++t)
        for (const auto& [y, p] : models[t]) expect[t][argmax_lowest(toy::exact_posterior(models, y))] += p;

    const GenerativeModel model = toy::generative_model();
    Rng rng(6);
    const std::size_t n = 20000;
    const ConfusionMatrix cm = confusion_matrix(
        [&](const Trajectory& y) { return argmax_lowest(toy::exact_posterior(models, toy::outcome(y))); }, model,
        toy::design(), n, rng);
    for (std::size_t t = 0; t < 2; ++t) {
        INFO("true model " << t << " expected diagonal " << expect[t][t]);
        CHECK(oracle::binomial_p_value(static_cast<double>(cm.count(t, t)), static_cast<double>(n), expect[t][t]) > 1e-3);
    }
}

TEST_CASE("a trained critic recovers the exact toy posterior") {
    const auto models = toy::exact();
    const GenerativeModel model = toy::generative_model();
    Rng data_rng(7), init_rng(8), train_rng(9);
    const SimulatedDataset d = simulate_dataset(model, toy::design(), 10000, 0.5, data_rng);
    TrainConfig tc;
    tc.epochs = 300;
    const TrainedBound tb = train_bound(BoundNetwork::create(toy::shape(), init_rng), d, model.encoding, tc, train_rng);

    // Expected total-variation distance under the marginal of y.
    double tv = 0.0;
    Rng sim(10);
    for (std::size_t m = 0; m < 2; ++m) {
        for (const auto& [o, p] : models[m]) {
            // Rebuild a trajectory carrying outcome o.
            Trajectory y = model.simulate(model.sample_for_model(m, sim), toy::design(), sim);
            for (std::size_t t = 0; t < toy::kTrials; ++t) {
                y.choices[t] = static_cast<std::uint8_t>(o[2 * t]);
                y.rewards[t] = static_cast<std::uint8_t>(o[2 * t + 1]);
            }
            const auto exact = toy::exact_posterior(models, o);
            const auto est = posterior_md(tb.net, y, model.encoding);
            tv += 0.5 * p * std::abs(est[0] - exact[0]);
        }
    }
    CHECK(tv < 0.05);
}

TEST_CASE("a trained critic concentrates the WSLTS win-stay posterior") {
    const PriorSpec spec = PriorSpec::parameter_estimation(Model::Wslts);
    const GenerativeModel model = GenerativeModel::from_prior(spec, 30);
    const Design d({{0, 1, 0}, {0, 1, 1}, {1, 0, 1}});
    Rng data_rng(11), init_rng(12), train_rng(13);
    const SimulatedDataset data = simulate_dataset(model, d, 10000, 0.2, data_rng);
    TrainConfig tc;
    tc.epochs = 300;
    tc.weight_decay = 1e-4;
    const TrainedBound tb =
        train_bound(BoundNetwork::create(NetworkShape::for_task(spec, 3, 30, 3), init_rng), data, model.encoding, tc, train_rng);

    Rng rng(14);
    const auto draws = sample_prior(spec, 2000, rng);
    double mean = 0.0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> truth = sample_prior(spec, 1, rng).front().params;
        truth[0] = 0.9;
        const Trajectory y = simulate_model(Model::Wslts, truth, d, 30, rng);
        mean += posterior_pe(tb.net, y, draws, model.encoding).mean(0) / 100.0;
    }
    INFO("mean posterior gamma_w " << mean);
    CHECK(std::abs(mean - 0.9) < std::abs(mean - 0.5));
}

TEST_CASE("weighted kernel density estimates") {
    Rng rng(15);
    const PosteriorSample ps = uniform_sample(20000, rng);
    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(0.1 + 0.01 * i);
    const auto f = marginal_density(ps, 0, grid);
    for (double v : f) CHECK(std::abs(v - 1.0) <= 0.1);

    std::vector<double> wide;
    for (int i = 0; i <= 4000; ++i) wide.push_back(-1.0 + 0.00075 * i);
    const auto g = marginal_density(ps, 0, wide);
    double integral = 0.0;
    for (std::size_t i = 1; i < wide.size(); ++i) integral += 0.5 * (g[i] + g[i - 1]) * (wide[i] - wide[i - 1]);
    CHECK(std::abs(integral - 1.0) <= 0.05);

    PosteriorSample spike;
    spike.values = {{0.3}, {0.9}};
    spike.weights = {1.0, 0.0};
    const auto k = marginal_density(spike, 0, std::vector<double>{0.3, 0.4}, 0.1);
    const double peak = 1.0 / (0.1 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(std::abs(k[0] - peak) <= 1e-12);
    CHECK(std::abs(k[1] - peak * std::exp(-0.5)) <= 1e-12);

    CHECK(silverman_bandwidth(ps, 0) == doctest::Approx(1.06 * ps.sd(0) * std::pow(20000.0, -0.2)));
    const std::vector<PosteriorSample> two{ps, ps};
    const auto avg = average_marginal_density(two, 0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(avg[i] == doctest::Approx(f[i]));
}

TEST_CASE("posterior and density CSV layouts") {
    Rng rng(16);
    const PosteriorSample ps = uniform_sample(3, rng, 2);
    std::ostringstream os;
    const std::vector<std::string> names{"epsilon", "phi"};
    write_posterior_csv(os, ps, names);
    CHECK(os.str().rfind("epsilon,phi,weight\n", 0) == 0);
    std::ostringstream dens;
    write_density_csv(dens, std::vector<double>{0.0, 1.0}, {{"optimal", {0.5, 1.5}}, {"baseline_00", {1.0, 1.0}}});
    CHECK(dens.str() == "x,optimal,baseline_00\n0,0.5,1\n1,1.5,1\n");
}
