#include <doctest.h>

#include <cstring>
#include <sstream>

#include "boed/checkpoint.hpp"
#include "boed/encoding.hpp"
#include "boed/errors.hpp"
#include "boed/neural_net.hpp"
#include "support/gradient_check.hpp"
#include "support/oracles.hpp"

using namespace boed;

namespace {

std::vector<oracle::Layer> to_oracle(const Mlp& m) {
    std::vector<oracle::Layer> out;
    for (const auto& L : m.layers()) {
        oracle::Layer o;
        o.relu = L.activation == Activation::Relu;
        o.w.assign(L.weight.rows(), std::vector<double>(L.weight.cols()));
        for (Eigen::Index r = 0; r < L.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < L.weight.cols(); ++c) o.w[r][c] = L.weight(r, c);
        o.b.assign(L.bias.data(), L.bias.data() + L.bias.size());
        out.push_back(o);
    }
    return out;
}

NetworkShape small_shape() {
    NetworkShape s;
    s.blocks = 2;
    s.block_input_dim = 8;  // 2 trials, 3 arms
    s.summary_dim = 3;
    s.variable_dim = 3;
    s.summary_hidden = {5, 4};
    s.head_hidden = {6, 4};
    return s;
}

}  // namespace

TEST_CASE("zero network outputs zero") {
    BoundNetwork net(small_shape());
    const std::vector<std::vector<double>> blocks(2, std::vector<double>(8, 0.7));
    CHECK(net.forward(std::vector<double>{1, 0, 0}, blocks) == 0.0);
}

TEST_CASE("identity single layer sums its inputs") {
    Mlp m({4, 1});
    m.layers()[0].weight.setOnes();
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8;
    const Eigen::MatrixXd y = m.forward(x);
    CHECK(y(0, 0) == 16.0);
    CHECK(y(0, 1) == 20.0);
    const Eigen::MatrixXd y3 = m.forward(3.0 * x);
    CHECK(y3(0, 0) == 48.0);
}

TEST_CASE("forward pass matches a loop-based oracle") {
    Rng rng(13);
    for (const auto& dims : {std::vector<std::size_t>{3, 4, 1}, std::vector<std::size_t>{7, 5, 4, 2}}) {
        Mlp m(dims);
        m.init_he_uniform(rng);
        for (auto& L : m.layers())
            for (Eigen::Index i = 0; i < L.bias.size(); ++i) L.bias(i) = uniform01(rng) - 0.5;
        const auto ref = to_oracle(m);
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> x(dims.front());
            for (double& xi : x) xi = 2.0 * uniform01(rng) - 1.0;
            const Eigen::MatrixXd out = m.forward(Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
            const auto expect = oracle::mlp_forward(ref, x);
            for (std::size_t o = 0; o < expect.size(); ++o) CHECK(std::abs(out(o, 0) - expect[o]) <= 1e-12);
        }
    }
}

TEST_CASE("critic forward matches the composed oracle") {
    Rng rng(14);
    BoundNetwork net = BoundNetwork::create(small_shape(), rng);
    std::vector<std::vector<double>> blocks(2, std::vector<double>(8));
    for (auto& b : blocks)
        for (double& x : b) x = uniform01(rng);
    const std::vector<double> v{0, 1, 0};
    std::vector<double> head_in;
    for (std::size_t b = 0; b < 2; ++b) {
        const auto s = oracle::mlp_forward(to_oracle(net.summaries()[b]), blocks[b]);
        head_in.insert(head_in.end(), s.begin(), s.end());
    }
    head_in.insert(head_in.end(), v.begin(), v.end());
    const double expect = oracle::mlp_forward(to_oracle(net.head()), head_in)[0];
    CHECK(std::abs(net.forward(v, blocks) - expect) <= 1e-12);
}

TEST_CASE("dimension mismatches are domain errors") {
    BoundNetwork net(small_shape());
    const std::vector<std::vector<double>> blocks(2, std::vector<double>(8, 0.0));
    CHECK_THROWS_AS(net.forward(std::vector<double>{1, 0}, blocks), DomainError);
    CHECK_THROWS_AS(net.forward(std::vector<double>{1, 0, 0}, std::vector<std::vector<double>>(2, std::vector<double>(7))),
                    DomainError);
    CHECK_THROWS_AS(net.forward(std::vector<double>{1, 0, 0}, std::vector<std::vector<double>>(3, std::vector<double>(8))),
                    DomainError);
}

TEST_CASE("zero output gradient gives zero parameter gradient") {
    Rng rng(15);
    Mlp m({3, 4, 2});
    m.init_he_uniform(rng);
    Mlp::Cache cache;
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
    m.forward(x, &cache);
    Mlp grad({3, 4, 2});
    grad.set_zero();
    m.backward(cache, Eigen::MatrixXd::Zero(2, 5), grad, false);
    for (const auto& L : grad.layers()) {
        CHECK(L.weight.isZero(0.0));
        CHECK(L.bias.isZero(0.0));
    }
}

TEST_CASE("single linear neuron matches the closed-form gradient") {
    // L = sum_i (w.x_i + b - t_i)^2: dL/dw = 2 sum r_i x_i, dL/db = 2 sum r_i.
    Mlp m({2, 1});
    m.layers()[0].weight << 0.5, -1.5;
    m.layers()[0].bias << 0.25;
    Eigen::MatrixXd x(2, 3);
    x << 1, 2, -1, 0.5, 0, 3;
    const Eigen::RowVector3d t(1.0, -2.0, 0.5);
    Mlp::Cache cache;
    const Eigen::MatrixXd y = m.forward(x, &cache);
    const Eigen::RowVectorXd r = y.row(0) - t;
    Mlp grad({2, 1});
    grad.set_zero();
    m.backward(cache, 2.0 * r, grad, false);
    CHECK(grad.layers()[0].weight(0, 0) == doctest::Approx(2.0 * (r.array() * x.row(0).array()).sum()).epsilon(1e-14));
    CHECK(grad.layers()[0].weight(0, 1) == doctest::Approx(2.0 * (r.array() * x.row(1).array()).sum()).epsilon(1e-14));
    CHECK(grad.layers()[0].bias(0) == doctest::Approx(2.0 * r.sum()).epsilon(1e-14));
}

TEST_CASE("random probe loss: analytic gradient matches central differences") {
    Rng rng(16);
    const NetworkShape shape = small_shape();
    BoundNetwork net = BoundNetwork::create(shape, rng);
    auto spans = net.parameter_spans();
    for (auto& s : spans)
        for (double& x : s) x += 0.05 * (uniform01(rng) - 0.5);
    EncodedBatch batch;
    const Eigen::Index n = 6;
    for (int b = 0; b < 2; ++b) batch.blocks.push_back(Eigen::MatrixXd::Random(8, n));
    batch.variables = Eigen::MatrixXd::Random(3, n);
    const Eigen::RowVectorXd probe = Eigen::RowVectorXd::Random(n);
    auto loss = [&](const BoundNetwork& nt) {
        return (nt.evaluate(batch, {batch.variables}).outputs[0].array() * probe.array()).sum();
    };
    const BoundNetwork grad = net.backward(net.evaluate(batch, {batch.variables}), {probe});
    const auto analytic = grad.flatten();
    auto p = net.flatten();
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + 1e-5;
        net.assign(p);
        const double up = loss(net);
        p[i] = orig - 1e-5;
        net.assign(p);
        const double down = loss(net);
        p[i] = orig;
        worst = std::max(worst, gradcheck::relative_error(analytic[i], (up - down) / 2e-5));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("NWJ gradient on the MD architecture matches central differences") {
    const auto r = gradcheck::check_task(PriorSpec::model_discrimination(), 2, 3, 2, 16, 200);
    INFO("max relative error " << r.max_relative_error);
    CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("Adam: zero gradients and no decay leave parameters unchanged") {
    std::vector<double> p{0.3, -1.2};
    const std::vector<double> g{0.0, 0.0};
    AdamState adam({1e-3, 0.9, 0.999, 1e-8, 0.0});
    for (int i = 0; i < 5; ++i) adam.step({std::span<double>(p)}, {std::span<const double>(g)});
    CHECK(p == std::vector<double>{0.3, -1.2});
}

TEST_CASE("Adam: the first step moves by lr against the gradient sign") {
    std::vector<double> p{1.0, 1.0, 1.0};
    const std::vector<double> g{0.7, -3.0, 1e-3};
    AdamState adam({0.01, 0.9, 0.999, 1e-8, 0.0});
    adam.step({std::span<double>(p)}, {std::span<const double>(g)});
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(1.0 + 0.01).epsilon(1e-9));
    CHECK(p[2] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));  // eps matters for tiny gradients
}

TEST_CASE("Adam: three-step trace with decoupled weight decay") {
    // lr 0.01, wd 0.1, p0 = 0.5, gradients 0.3, -0.1, 0.2, worked step by step:
    //   t=1: m=0.03  v=9e-5       mhat=0.3    vhat=0.09
    //        p = 0.5 - 0.01*0.3/(0.3+1e-8) - 0.01*0.1*0.5 = 0.4895000003333333
    //   t=2: m=0.017 v=9.991e-5   mhat=0.0894737  vhat=0.049980
    //        p = 0.48500831479247475
    //   t=3: m=0.0353 v=1.398101e-4 mhat=0.130627 vhat=0.046651
    //        p = 0.4784924418424881
    std::vector<double> p{0.5};
    AdamState adam({0.01, 0.9, 0.999, 1e-8, 0.1});
    const double expect[3] = {0.4895000003333333, 0.48500831479247475, 0.4784924418424881};
    const double grads[3] = {0.3, -0.1, 0.2};
    for (int t = 0; t < 3; ++t) {
        const std::vector<double> g{grads[t]};
        adam.step({std::span<double>(p)}, {std::span<const double>(g)});
        CHECK(std::abs(p[0] - expect[t]) <= 1e-10);
    }
    CHECK(adam.steps() == 3);
}

TEST_CASE("Adam: non-finite gradient is a training error") {
    std::vector<double> p{1.0};
    const std::vector<double> g{std::nan("")};
    AdamState adam;
    CHECK_THROWS_AS(adam.step({std::span<double>(p)}, {std::span<const double>(g)}), TrainingError);
}

TEST_CASE("plateau scheduler") {
    SUBCASE("strict improvement never triggers") {
        PlateauScheduler s(1e-3);
        for (int e = 0; e < 100; ++e) s.step(0.01 * e);
        CHECK(s.lr() == 1e-3);
    }
    SUBCASE("26 constant epochs halve once") {
        PlateauScheduler s(1e-3);
        for (int e = 0; e < 26; ++e) s.step(0.2);
        CHECK(s.lr() == 5e-4);
        CHECK(s.reductions() == 1);
        PlateauScheduler t(1e-3);
        for (int e = 0; e < 25; ++e) t.step(0.2);
        CHECK(t.lr() == 1e-3);
    }
    SUBCASE("two 30-epoch plateaus quarter the rate") {
        // Improvement at epochs 1 and 31; halvings at 26 and 56.
        PlateauScheduler s(1e-3);
        for (int e = 0; e < 30; ++e) s.step(0.1);
        for (int e = 0; e < 30; ++e) s.step(0.2);
        CHECK(s.lr() == 2.5e-4);
    }
    SUBCASE("the floor holds") {
        PlateauScheduler s(4e-6, 0.5, 1, 1e-6);
        for (int e = 0; e < 20; ++e) s.step(0.0);
        CHECK(s.lr() == 1e-6);
    }
}

TEST_CASE("input encoding") {
    Trajectory y(1, 2, 3);
    y.record(0, 0, 2, true);
    y.record(0, 1, 0, false);
    std::vector<double> out(8);
    encode_block(y, 0, out);
    CHECK(out == std::vector<double>{0, 0, 1, 1, 1, 0, 0, 0});
    CHECK(block_input_dim(30, 3) == 120);

    const VariableEncoding md = VariableEncoding::for_prior(PriorSpec::model_discrimination());
    std::vector<double> v(3);
    encode_variable(md, {Model::Aeg, {0.1, 0.2}}, v);
    CHECK(v == std::vector<double>{0, 1, 0});

    const VariableEncoding pe = VariableEncoding::for_prior(PriorSpec::parameter_estimation(Model::Wslts));
    encode_variable(pe, {Model::Wslts, {0.5, 0.5, 1.0}}, v);
    CHECK(v == std::vector<double>{0.5, 0.5, 0.0});
}

TEST_CASE("architecture conformance") {
    struct Expect {
        PriorSpec spec;
        std::size_t blocks, summary, variable;
        std::vector<std::size_t> head;
    };
    const Expect cases[] = {{PriorSpec::model_discrimination(), 2, 6, 3, {32, 32}},
                            {PriorSpec::parameter_estimation(Model::Wslts), 3, 8, 3, {64, 32}},
                            {PriorSpec::parameter_estimation(Model::Aeg), 3, 6, 2, {64, 32}},
                            {PriorSpec::parameter_estimation(Model::Gls), 3, 8, 5, {64, 32}}};
    for (const auto& c : cases) {
        const NetworkShape s = NetworkShape::for_task(c.spec, c.blocks, 30, 3);
        BoundNetwork net(s);
        REQUIRE(net.summaries().size() == c.blocks);
        for (const auto& sub : net.summaries()) CHECK(sub.dims() == std::vector<std::size_t>{120, 64, 32, c.summary});
        std::vector<std::size_t> head{c.blocks * c.summary + c.variable};
        head.insert(head.end(), c.head.begin(), c.head.end());
        head.push_back(1);
        CHECK(net.head().dims() == head);
        for (std::size_t i = 0; i + 1 < net.head().layers().size(); ++i)
            CHECK(net.head().layers()[i].activation == Activation::Relu);
        CHECK(net.head().layers().back().activation == Activation::Identity);
    }
}

TEST_CASE("He-uniform initialization bounds") {
    Rng rng(17);
    Mlp m({120, 64, 1});
    m.init_he_uniform(rng);
    const double bound = std::sqrt(6.0 / 120.0);
    CHECK(m.layers()[0].weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(m.layers()[0].weight.cwiseAbs().maxCoeff() > 0.9 * bound);
    CHECK(m.layers()[0].bias.isZero(0.0));
}

TEST_CASE("checkpoints round-trip bit for bit") {
    Rng rng(18);
    const BoundNetwork net = BoundNetwork::create(NetworkShape::for_task(PriorSpec::parameter_estimation(Model::Gls), 3, 30, 3), rng);
    std::stringstream ss;
    save_checkpoint(ss, net);
    const BoundNetwork back = load_checkpoint(ss);
    CHECK(back == net);
    const auto a = net.flatten(), b = back.flatten();
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

    std::stringstream bad("BNEX....");
    CHECK_THROWS_AS(load_checkpoint(bad), ArtifactError);
    CHECK_THROWS_AS(load_checkpoint(std::filesystem::path("/nonexistent/critic.bnet")), ArtifactError);
    std::string text = ss.str();
    std::stringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(truncated), ArtifactError);
}
