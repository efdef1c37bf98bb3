#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qadsb/nn.hpp"
#include "test_util.hpp"

using namespace qadsb;
using doctest::Approx;

namespace {

nn::DenseLayer layer_2x2(std::array<double, 4> w, std::array<double, 2> b) {
    nn::DenseLayer l;
    l.weights = Tensor2(2, 2);
    l.weights.data = {w[0], w[1], w[2], w[3]};
    l.bias = {b[0], b[1]};
    return l;
}

Tensor2 row(std::initializer_list<double> values) {
    Tensor2 t(1, values.size());
    std::copy(values.begin(), values.end(), t.data.begin());
    return t;
}

double loss_value(const nn::ModelSpec& spec, const nn::ModelParams& params, const Tensor2& x,
                  nn::LossKind loss, std::span<const int> labels) {
    const Tensor2 logits = nn::model_forward(spec, params, x);
    if (loss == nn::LossKind::BceWithLogits) {
        Tensor2 onehot(labels.size(), 2);
        for (std::size_t i = 0; i < labels.size(); ++i) onehot(i, labels[i]) = 1.0;
        return nn::bce_with_logits_loss(logits, onehot);
    }
    return nn::cross_entropy_loss(logits, labels);
}

// Finite-difference oracle over every parameter, independent of backward.
void check_grads_against_fd(const nn::ModelSpec& spec, const nn::ModelParams& params,
                            const Tensor2& x, nn::LossKind loss,
                            std::span<const int> labels) {
    const auto back = nn::model_backward(spec, params, x, loss, labels);
    const double h = 1e-4;

    nn::ModelParams probe = params;
    auto views = nn::param_views(spec, probe);
    nn::ModelGrads grads_copy = back.grads;
    auto grad_views = nn::param_views(spec, grads_copy);
    REQUIRE(views.size() == grad_views.size());

    for (std::size_t v = 0; v < views.size(); ++v) {
        for (std::size_t k = 0; k < views[v].size(); ++k) {
            const double saved = views[v][k];
            views[v][k] = saved + h;
            const double lp = loss_value(spec, probe, x, loss, labels);
            views[v][k] = saved - h;
            const double lm = loss_value(spec, probe, x, loss, labels);
            views[v][k] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double got = grad_views[v][k];
            const double tol = std::max(1e-6, 1e-3 * std::abs(fd));
            CHECK(std::abs(got - fd) <= tol);
        }
    }
}

} // namespace

TEST_CASE("dense_forward affine map") {
    SUBCASE("identity") {
        const auto l = layer_2x2({1, 0, 0, 1}, {0, 0});
        Tensor2 x(3, 2);
        x.data = {1, 2, 3, 4, 5, 6};
        CHECK(nn::dense_forward(l, x) == x);
    }
    SUBCASE("scalar case W=[[2]], b=[1], x=[[3]] -> [[7]]") {
        nn::DenseLayer l;
        l.weights = Tensor2(1, 1);
        l.weights.data = {2.0};
        l.bias = {1.0};
        const auto y = nn::dense_forward(l, row({3.0}));
        CHECK(y(0, 0) == Approx(7.0));
    }
    SUBCASE("hand-computed 2x2 product") {
        const auto l = layer_2x2({1.5, -2.0, 0.5, 3.0}, {0.25, -1.0});
        Tensor2 x(2, 2);
        x.data = {2.0, 1.0, -1.0, 4.0};
        const auto y = nn::dense_forward(l, x);
        // row 0: [2*1.5 + 1*(-2) + 0.25, 2*0.5 + 1*3 - 1] = [1.25, 3.0]
        CHECK(y(0, 0) == Approx(1.25));
        CHECK(y(0, 1) == Approx(3.0));
        // row 1: [-1.5 - 8 + 0.25, -0.5 + 12 - 1] = [-9.25, 10.5]
        CHECK(y(1, 0) == Approx(-9.25));
        CHECK(y(1, 1) == Approx(10.5));
    }
    SUBCASE("shape mismatch") {
        const auto l = layer_2x2({1, 0, 0, 1}, {0, 0});
        CHECK_THROWS_AS(nn::dense_forward(l, row({1.0, 2.0, 3.0})), ShapeError);
    }
}

TEST_CASE("relu") {
    const auto y = nn::relu(row({-1.0, 0.0, 2.0}));
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == 2.0);

    const auto neg = nn::relu(row({-5.0, -0.1}));
    CHECK(neg(0, 0) == 0.0);
    CHECK(neg(0, 1) == 0.0);

    const auto once = nn::relu(row({-3.0, 4.0}));
    CHECK(nn::relu(once) == once); // idempotent
}

TEST_CASE("bce_with_logits examples and stability") {
    Tensor2 zeros(1, 2);
    Tensor2 t10(1, 2);
    t10.data = {1.0, 0.0};
    CHECK(nn::bce_with_logits_loss(zeros, t10) == Approx(std::log(2.0)).epsilon(1e-12));

    Tensor2 sat(1, 2);
    sat.data = {40.0, -40.0};
    const double near_zero = nn::bce_with_logits_loss(sat, t10);
    CHECK(std::isfinite(near_zero));
    CHECK(near_zero < 1e-15);

    Tensor2 wrong(1, 2);
    wrong.data = {-40.0, 40.0};
    CHECK(nn::bce_with_logits_loss(wrong, t10) == Approx(40.0).epsilon(1e-12));

    Tensor2 huge(1, 2);
    huge.data = {1e4, -1e4};
    CHECK(std::isfinite(nn::bce_with_logits_loss(huge, t10)));

    Tensor2 not_onehot(1, 2);
    not_onehot.data = {0.5, 0.5};
    CHECK_THROWS_AS(nn::bce_with_logits_loss(zeros, not_onehot), DataError);
}

TEST_CASE("cross_entropy examples and stability") {
    Tensor2 zeros(1, 2);
    const std::vector<int> cls0{0};
    CHECK(nn::cross_entropy_loss(zeros, cls0) == Approx(std::log(2.0)).epsilon(1e-12));

    Tensor2 confident(1, 2);
    confident.data = {10.0, -10.0};
    // -log sigmoid(20) = log1p(exp(-20))
    CHECK(nn::cross_entropy_loss(confident, cls0) ==
          Approx(std::log1p(std::exp(-20.0))).epsilon(1e-9));

    Tensor2 huge(1, 2);
    huge.data = {-1e4, 1e4};
    CHECK(std::isfinite(nn::cross_entropy_loss(huge, cls0)));

    CHECK_THROWS_AS(nn::cross_entropy_loss(zeros, std::vector<int>{2}), DataError);

    // permutation invariance of the batch mean
    Tensor2 batch(3, 2);
    batch.data = {0.3, -0.4, 1.2, 0.8, -2.0, 0.5};
    Tensor2 permuted(3, 2);
    permuted.data = {-2.0, 0.5, 0.3, -0.4, 1.2, 0.8};
    CHECK(nn::cross_entropy_loss(batch, std::vector<int>{0, 1, 1}) ==
          Approx(nn::cross_entropy_loss(permuted, std::vector<int>{1, 0, 1})).epsilon(1e-14));
}

TEST_CASE("model_forward contract") {
    SUBCASE("zero output layer gives zero logits") {
        const auto spec = nn::ModelSpec::hfqnn(3, 2, 1);
        auto params = nn::init_params(spec, 4);
        params.output.weights = Tensor2(2, 2);
        params.output.bias = {0.0, 0.0};
        Tensor2 x(4, 3);
        for (std::size_t k = 0; k < x.data.size(); ++k) x.data[k] = 0.37 * (double(k) - 5);
        const auto logits = nn::model_forward(spec, params, x);
        for (double v : logits.data) CHECK(v == 0.0);
    }
    SUBCASE("both models produce [B, 2]") {
        const auto hspec = nn::ModelSpec::hfqnn(4, 3, 2);
        const auto fspec = nn::ModelSpec::fnn(4, 3);
        Tensor2 x(5, 4);
        for (std::size_t k = 0; k < x.data.size(); ++k) x.data[k] = 0.1 * double(k);
        const auto hl = nn::model_forward(hspec, nn::init_params(hspec, 9), x);
        const auto fl = nn::model_forward(fspec, nn::init_params(fspec, 9), x);
        CHECK(hl.rows == 5);
        CHECK(hl.cols == 2);
        CHECK(fl.rows == 5);
        CHECK(fl.cols == 2);
    }
}

TEST_CASE("hybrid forward matches a stage-by-stage hand trace") {
    const auto spec = nn::ModelSpec::hfqnn(2, 2, 1);
    nn::ModelParams p = nn::zero_grads(spec);
    p.input = layer_2x2({0.5, -0.25, 0.1, 0.3}, {0.05, -0.1});
    p.hidden = layer_2x2({0.2, 0.4, -0.3, 0.6}, {0.0, 0.2});
    p.quantum.values = {0.3, -0.2, 0.5, 0.7, 0.1, -0.4};
    p.output = layer_2x2({1.0, -0.5, 0.25, 0.75}, {0.1, -0.2});

    const Tensor2 x = row({0.7, -1.2});

    // layer 1
    const double z1a = 0.7 * 0.5 + (-1.2) * (-0.25) + 0.05;
    const double z1b = 0.7 * 0.1 + (-1.2) * 0.3 + (-0.1);
    const double h1a = std::max(0.0, z1a), h1b = std::max(0.0, z1b);
    // layer 2
    const double z2a = h1a * 0.2 + h1b * 0.4 + 0.0;
    const double z2b = h1a * (-0.3) + h1b * 0.6 + 0.2;
    const double h2a = std::max(0.0, z2a), h2b = std::max(0.0, z2b);
    // quantum layer via the circuit module directly
    const auto q = vqc::forward(spec.circuit, p.quantum, std::vector<double>{h2a, h2b});
    // output layer
    const double l0 = q[0] * 1.0 + q[1] * (-0.5) + 0.1;
    const double l1 = q[0] * 0.25 + q[1] * 0.75 - 0.2;

    const auto logits = nn::model_forward(spec, p, x);
    CHECK(logits(0, 0) == Approx(l0).epsilon(1e-14));
    CHECK(logits(0, 1) == Approx(l1).epsilon(1e-14));
}

TEST_CASE("model_backward matches finite differences") {
    testutil::LabeledSet set = testutil::make_separable_set(4, 1, 21);

    SUBCASE("hfqnn bce") {
        const auto spec = nn::ModelSpec::hfqnn(3, 2, 1);
        check_grads_against_fd(spec, nn::init_params(spec, 5), set.x,
                               nn::LossKind::BceWithLogits, set.y);
    }
    SUBCASE("hfqnn ce two layers") {
        const auto spec = nn::ModelSpec::hfqnn(3, 3, 2);
        check_grads_against_fd(spec, nn::init_params(spec, 6), set.x,
                               nn::LossKind::CrossEntropy, set.y);
    }
    SUBCASE("hfqnn with tanh rescale") {
        const auto spec = nn::ModelSpec::hfqnn(3, 2, 1, /*rescale=*/true);
        check_grads_against_fd(spec, nn::init_params(spec, 7), set.x,
                               nn::LossKind::BceWithLogits, set.y);
    }
    SUBCASE("fnn both losses") {
        const auto spec = nn::ModelSpec::fnn(3, 4);
        check_grads_against_fd(spec, nn::init_params(spec, 8), set.x,
                               nn::LossKind::BceWithLogits, set.y);
        check_grads_against_fd(spec, nn::init_params(spec, 8), set.x,
                               nn::LossKind::CrossEntropy, set.y);
    }
}

TEST_CASE("saturated correct predictions give near-zero gradients") {
    const auto spec = nn::ModelSpec::fnn(2, 2);
    nn::ModelParams p = nn::zero_grads(spec); // all-zero weights
    p.output.bias = {40.0, -40.0};            // hard class-0 logits
    Tensor2 x(3, 2);
    x.data = {0.4, -1.0, 2.0, 0.1, -0.7, 0.9};
    const std::vector<int> labels{0, 0, 0};

    const auto back = nn::model_backward(spec, p, x, nn::LossKind::BceWithLogits, labels);
    CHECK(back.loss < 1e-15);
    nn::ModelGrads grads = back.grads;
    for (const auto& view : nn::param_views(spec, grads)) {
        for (double g : view) CHECK(std::abs(g) < 1e-12);
    }
}

TEST_CASE("duplicating every sample leaves mean gradients unchanged") {
    const auto spec = nn::ModelSpec::hfqnn(2, 2, 1);
    const auto params = nn::init_params(spec, 11);
    Tensor2 x(2, 2);
    x.data = {0.3, -0.8, 1.1, 0.4};
    const std::vector<int> y{1, 0};

    Tensor2 xx(4, 2);
    std::copy(x.data.begin(), x.data.end(), xx.data.begin());
    std::copy(x.data.begin(), x.data.end(), xx.data.begin() + 4);
    const std::vector<int> yy{1, 0, 1, 0};

    auto a = nn::model_backward(spec, params, x, nn::LossKind::CrossEntropy, y);
    auto b = nn::model_backward(spec, params, xx, nn::LossKind::CrossEntropy, yy);
    CHECK(a.loss == Approx(b.loss).epsilon(1e-13));
    auto va = nn::param_views(spec, a.grads);
    auto vb = nn::param_views(spec, b.grads);
    for (std::size_t v = 0; v < va.size(); ++v) {
        for (std::size_t k = 0; k < va[v].size(); ++k) {
            CHECK(va[v][k] == Approx(vb[v][k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("adam behavior") {
    SUBCASE("zero gradients leave parameters unchanged") {
        auto state = nn::AdamState::for_size(3);
        std::vector<double> params{1.0, -2.0, 0.5};
        const std::vector<double> zeros{0.0, 0.0, 0.0};
        nn::adam_step(state, params, zeros, 0.05);
        CHECK(params == std::vector<double>{1.0, -2.0, 0.5});
    }
    SUBCASE("first step moves by about -lr * sign(g)") {
        auto state = nn::AdamState::for_size(2);
        std::vector<double> params{1.0, 1.0};
        const std::vector<double> grads{3.7, -0.002};
        nn::adam_step(state, params, grads, 0.01);
        CHECK(params[0] == Approx(1.0 - 0.01).epsilon(1e-4));
        CHECK(params[1] == Approx(1.0 + 0.01).epsilon(1e-4));
    }
    SUBCASE("two steps descend a convex quadratic") {
        // f(w) = (w - 3)^2
        auto state = nn::AdamState::for_size(1);
        std::vector<double> w{0.0};
        auto f = [&] { return (w[0] - 3.0) * (w[0] - 3.0); };
        const double f0 = f();
        std::vector<double> g{2.0 * (w[0] - 3.0)};
        nn::adam_step(state, w, g, 0.1);
        const double f1 = f();
        g[0] = 2.0 * (w[0] - 3.0);
        nn::adam_step(state, w, g, 0.1);
        const double f2 = f();
        CHECK(f1 < f0);
        CHECK(f2 < f1);
    }
}

TEST_CASE("training behavior") {
    testutil::LabeledSet train = testutil::make_separable_set(120, 0, 31);
    testutil::LabeledSet val = testutil::make_separable_set(40, 0, 32);

    SUBCASE("fnn reaches 95 percent on a separable set") {
        const auto spec = nn::ModelSpec::fnn(2, 4);
        nn::TrainConfig cfg;
        cfg.epochs = 60;
        cfg.learning_rate = 0.02;
        cfg.batch_size = 16;
        cfg.seed = 3;
        const auto result = nn::train(spec, cfg, train.x, train.y, val.x, val.y);
        double best = 0.0;
        for (const auto& e : result.history) best = std::max(best, e.val.accuracy);
        CHECK(best >= 0.95);
    }
    SUBCASE("fixed seed reproduces the history bit for bit") {
        const auto spec = nn::ModelSpec::hfqnn(2, 2, 1);
        nn::TrainConfig cfg;
        cfg.epochs = 3;
        cfg.batch_size = 32;
        cfg.seed = 17;
        const auto a = nn::train(spec, cfg, train.x, train.y, val.x, val.y);
        const auto b = nn::train(spec, cfg, train.x, train.y, val.x, val.y);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t e = 0; e < a.history.size(); ++e) {
            CHECK(a.history[e].train_loss == b.history[e].train_loss);
            CHECK(a.history[e].val.accuracy == b.history[e].val.accuracy);
        }
        auto va = nn::param_views(spec, const_cast<nn::ModelParams&>(a.params));
        auto vb = nn::param_views(spec, const_cast<nn::ModelParams&>(b.params));
        for (std::size_t v = 0; v < va.size(); ++v)
            for (std::size_t k = 0; k < va[v].size(); ++k) CHECK(va[v][k] == vb[v][k]);
    }
    SUBCASE("zero learning rate leaves parameters at initialization") {
        const auto spec = nn::ModelSpec::fnn(2, 3);
        nn::TrainConfig cfg;
        cfg.epochs = 3;
        cfg.learning_rate = 0.0;
        cfg.seed = 23;
        const auto result = nn::train(spec, cfg, train.x, train.y, val.x, val.y);
        const auto fresh = nn::init_params(spec, derive_seed(23, 0x696e69u));
        auto vr = nn::param_views(spec, const_cast<nn::ModelParams&>(result.params));
        auto vf = nn::param_views(spec, const_cast<nn::ModelParams&>(fresh));
        for (std::size_t v = 0; v < vr.size(); ++v)
            for (std::size_t k = 0; k < vr[v].size(); ++k) CHECK(vr[v][k] == vf[v][k]);
        for (std::size_t e = 1; e < result.history.size(); ++e) {
            CHECK(result.history[e].train_loss ==
                  Approx(result.history[0].train_loss).epsilon(1e-12));
        }
    }
    SUBCASE("empty dataset is rejected") {
        const auto spec = nn::ModelSpec::fnn(2, 3);
        nn::TrainConfig cfg;
        Tensor2 empty(0, 2);
        CHECK_THROWS_AS(nn::train(spec, cfg, empty, std::vector<int>{}, val.x, val.y),
                        DataError);
    }
}
