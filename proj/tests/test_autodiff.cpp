#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "dbmm/autodiff/adam.hpp"
#include "dbmm/autodiff/checkpoint.hpp"
#include "dbmm/autodiff/dense_net.hpp"
#include "dbmm/autodiff/heads.hpp"
#include "dbmm/core/errors.hpp"
#include "dbmm/core/rng.hpp"

using namespace dbmm;

namespace {

// Scalar loss for gradcheck: L = dy . f(x), linear in the outputs so the
// upstream gradient is exactly dy.
double probe_loss(const DenseNet& net, const std::vector<double>& x,
                  const std::vector<double>& dy) {
    std::vector<double> y = net.forward(x);
    double L = 0.0;
    for (size_t i = 0; i < y.size(); ++i) L += dy[i] * y[i];
    return L;
}

double central_diff(const std::function<double(double)>& f, double x0,
                    double h = 1e-6) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("dense net zero-init maps everything to zero") {
    DenseNet net(4, 10, 3);
    std::vector<double> y = net.forward(std::vector<double>{1.0, -2.0, 0.5, 3.0});
    for (double v : y) CHECK(v == 0.0);
    CHECK(net.param_count() == size_t(4 * 10 + 10 + 10 * 3 + 3));
}

TEST_CASE("xavier init touches weights but not biases") {
    DenseNet net(4, 10, 3);
    net.init_params(RngStream(3));
    const auto& p = net.params();
    double wsum = 0.0;
    for (size_t i = net.off_w1(); i < net.off_b1(); ++i) wsum += std::abs(p[i]);
    CHECK(wsum > 0.0);
    for (size_t i = net.off_b1(); i < net.off_w2(); ++i) CHECK(p[i] == 0.0);
    for (size_t i = net.off_b2(); i < p.size(); ++i) CHECK(p[i] == 0.0);

    // deterministic in the stream
    DenseNet net2(4, 10, 3);
    net2.init_params(RngStream(3));
    CHECK(net.params() == net2.params());
}

TEST_CASE("dense net gradients match finite differences") {
    RngStream rng(17);
    DenseNet net(5, 8, 4);
    net.init_params(rng.split(0));

    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> x(5), dy(4);
        RngStream draw = rng.split(10 + rep);
        for (auto& v : x) v = draw.normal();
        for (auto& v : dy) v = draw.normal();

        Tape tape;
        std::vector<double> y(4);
        net.forward(x.data(), y.data(), &tape);
        std::vector<double> grad(net.param_count(), 0.0);
        std::vector<double> dx(5, 0.0);
        net.backward(tape, dy.data(), grad, dx.data());

        // parameter gradients: probe a spread of indices across all blocks
        DenseNet probe = net;
        for (size_t idx = 0; idx < net.param_count();
             idx += 1 + net.param_count() / 40) {
            const double fd = central_diff(
                [&](double v) {
                    probe.mutable_params()[idx] = v;
                    return probe_loss(probe, x, dy);
                },
                net.params()[idx]);
            probe.mutable_params()[idx] = net.params()[idx];
            CHECK(grad[idx] == doctest::Approx(fd).epsilon(1e-5));
        }

        // input gradients
        for (int i = 0; i < 5; ++i) {
            std::vector<double> xp = x;
            const double fd = central_diff(
                [&](double v) {
                    xp[i] = v;
                    return probe_loss(net, xp, dy);
                },
                x[i]);
            CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("backward rejects tapes from an older parameter version") {
    DenseNet net(2, 3, 2);
    net.init_params(RngStream(1));
    Tape tape;
    std::vector<double> y(2);
    const double x[] = {0.1, 0.2};
    net.forward(x, y.data(), &tape);

    net.mutable_params()[0] += 0.5;  // invalidates the tape

    std::vector<double> grad(net.param_count(), 0.0);
    const double dy[] = {1.0, 0.0};
    CHECK_THROWS_AS(net.backward(tape, dy, grad), TapeError);
}

TEST_CASE("adam refuses non-finite gradients without touching state") {
    Adam opt(3);
    std::vector<double> p{1.0, 2.0, 3.0};
    std::vector<double> g{0.1, std::nan(""), 0.2};
    const std::vector<double> before = p;
    CHECK_THROWS_AS(opt.step(p, g), NonFiniteGradient);
    CHECK(p == before);
    CHECK(opt.t() == 0);

    // a clean step afterwards behaves like step 1
    g[1] = -0.5;
    opt.step(p, g);
    CHECK(opt.t() == 1);
    CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(2.0 + 1e-3).epsilon(1e-4));
}

TEST_CASE("adam converges on a quadratic") {
    // minimize (p - 3)^2 / 2; gradient p - 3
    Adam opt(1, {.lr = 0.05});
    std::vector<double> p{-4.0};
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> g{p[0] - 3.0};
        opt.step(p, g);
    }
    CHECK(p[0] == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("softmax and log_softmax") {
    auto p = softmax({0.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.5));
    auto p2 = softmax({1000.0, 1000.0, 999.0});
    CHECK(p2[0] == doctest::Approx(p2[1]));
    CHECK(p2[0] + p2[1] + p2[2] == doctest::Approx(1.0));

    auto lp = log_softmax({1.0, 2.0, 3.0});
    auto ps = softmax({1.0, 2.0, 3.0});
    for (int i = 0; i < 3; ++i) CHECK(lp[i] == doctest::Approx(std::log(ps[i])));
}

TEST_CASE("softmax backward matches finite differences") {
    RngStream rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> z(4), dp(4);
        for (auto& v : z) v = rng.normal();
        for (auto& v : dp) v = rng.normal();

        auto probs = softmax(z);
        auto dz = softmax_backward(probs, dp);
        auto dz_log = log_softmax_backward(probs, dp);

        for (int i = 0; i < 4; ++i) {
            const double fd = central_diff(
                [&](double v) {
                    auto zp = z;
                    zp[i] = v;
                    auto pp = softmax(zp);
                    double L = 0.0;
                    for (int j = 0; j < 4; ++j) L += dp[j] * pp[j];
                    return L;
                },
                z[i]);
            CHECK(dz[i] == doctest::Approx(fd).epsilon(1e-5));

            const double fd_log = central_diff(
                [&](double v) {
                    auto zp = z;
                    zp[i] = v;
                    auto lp = log_softmax(zp);
                    double L = 0.0;
                    for (int j = 0; j < 4; ++j) L += dp[j] * lp[j];
                    return L;
                },
                z[i]);
            CHECK(dz_log[i] == doctest::Approx(fd_log).epsilon(1e-5));
        }
    }
}

TEST_CASE("categorical kl") {
    std::vector<double> q{0.2, 0.8};
    CHECK(categorical_kl(q, q) == doctest::Approx(0.0));
    std::vector<double> p{0.5, 0.5};
    CHECK(categorical_kl(q, p) ==
          doctest::Approx(0.2 * std::log(0.4) + 0.8 * std::log(1.6)));
    // q mass on a floored p entry: finite, driven by the floor
    std::vector<double> pz{1.0, 0.0};
    CHECK(categorical_kl(q, pz) ==
          doctest::Approx(0.2 * std::log(0.2) + 0.8 * std::log(0.8 / 1e-12)));
    // zero q entries contribute nothing even where p is zero
    std::vector<double> qz{1.0, 0.0};
    CHECK(categorical_kl(qz, pz) == doctest::Approx(0.0));
}

TEST_CASE("gaussian head applies softplus floor to the std") {
    const double raw[] = {0.3, 0.0};
    GaussianParams g = gaussian_head(raw);
    CHECK(g.mean == 0.3);
    CHECK(g.std == doctest::Approx(std::log(2.0) + 1e-4).epsilon(1e-12));

    const double raw_tiny[] = {0.0, -100.0};
    CHECK(gaussian_head(raw_tiny).std >= kStdFloor);

    // backward vs finite differences
    RngStream rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        double r[2] = {rng.normal(), rng.normal()};
        const double dmean = rng.normal(), dstd = rng.normal();
        double draw_[2] = {0.0, 0.0};
        gaussian_head_backward(r, dmean, dstd, draw_);
        for (int i = 0; i < 2; ++i) {
            const double fd = central_diff(
                [&](double v) {
                    double rp[2] = {r[0], r[1]};
                    rp[i] = v;
                    GaussianParams gp = gaussian_head(rp);
                    return dmean * gp.mean + dstd * gp.std;
                },
                r[i]);
            CHECK(draw_[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("gaussian log pdf and gradient") {
    CHECK(gaussian_log_pdf(0.0, 0.0, 1.0) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    CHECK(gaussian_log_pdf(2.0, 1.0, 0.5) ==
          doctest::Approx(-0.5 * std::log(2 * M_PI * 0.25) - 0.5 * 4.0));

    RngStream rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        const double x = rng.normal(), mean = rng.normal();
        const double std_ = 0.2 + std::abs(rng.normal());
        double dm = 0, ds = 0;
        gaussian_log_pdf_grad(x, mean, std_, &dm, &ds);
        CHECK(dm == doctest::Approx(central_diff([&](double v) {
                        return gaussian_log_pdf(x, v, std_);
                    }, mean)).epsilon(1e-5));
        CHECK(ds == doctest::Approx(central_diff([&](double v) {
                        return gaussian_log_pdf(x, mean, v);
                    }, std_)).epsilon(1e-5));
    }
}

TEST_CASE("gaussian kl closed forms and gradient") {
    CHECK(gaussian_kl({1.0, 1.0}, {0.0, 1.0}) == doctest::Approx(0.5));
    CHECK(gaussian_kl({0.0, 2.0}, {0.0, 1.0}) ==
          doctest::Approx(0.5 * (4.0 - 1.0) - std::log(2.0)));
    CHECK(gaussian_kl({0.7, 0.3}, {0.7, 0.3}) == doctest::Approx(0.0));

    RngStream rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        GaussianParams q{rng.normal(), 0.2 + std::abs(rng.normal())};
        GaussianParams p{rng.normal(), 0.2 + std::abs(rng.normal())};
        double dqm, dqs, dpm, dps;
        gaussian_kl_grad(q, p, &dqm, &dqs, &dpm, &dps);
        CHECK(dqm == doctest::Approx(central_diff([&](double v) {
                         return gaussian_kl({v, q.std}, p);
                     }, q.mean)).epsilon(1e-5));
        CHECK(dqs == doctest::Approx(central_diff([&](double v) {
                         return gaussian_kl({q.mean, v}, p);
                     }, q.std)).epsilon(1e-5));
        CHECK(dpm == doctest::Approx(central_diff([&](double v) {
                         return gaussian_kl(q, {v, p.std});
                     }, p.mean)).epsilon(1e-5));
        CHECK(dps == doctest::Approx(central_diff([&](double v) {
                         return gaussian_kl(q, {p.mean, v});
                     }, p.std)).epsilon(1e-5));
    }
}

TEST_CASE("truncated normal log pdf, gradient, sampler") {
    // N(0,1) truncated to x <= 0 doubles the density on the support
    CHECK(truncated_normal_log_pdf(-1.0, 0.0, 1.0, 0.0) ==
          doctest::Approx(-0.7257913526447274).epsilon(1e-12));
    CHECK(truncated_normal_log_pdf(0.5, 0.0, 1.0, 0.0) == -INFINITY);

    RngStream rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const double mean = rng.normal(), std_ = 0.3 + std::abs(rng.normal());
        const double ub = mean + rng.normal();
        double x = truncated_normal_sample(mean, std_, ub, rng);
        REQUIRE(x <= ub);
        double dm, ds;
        truncated_normal_log_pdf_grad(x, mean, std_, ub, &dm, &ds);
        CHECK(dm == doctest::Approx(central_diff([&](double v) {
                        return truncated_normal_log_pdf(x, v, std_, ub);
                    }, mean)).epsilon(1e-4));
        CHECK(ds == doctest::Approx(central_diff([&](double v) {
                        return truncated_normal_log_pdf(x, mean, v, ub);
                    }, std_)).epsilon(1e-4));
    }

    // sampler moments: standard normal truncated at 0 has mean -phi(0)/Phi(0)
    RngStream srng(9);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = truncated_normal_sample(0.0, 1.0, 0.0, srng);
        REQUIRE(x <= 0.0);
        sum += x;
    }
    CHECK(sum / n == doctest::Approx(-std::sqrt(2.0 / M_PI)).epsilon(0.01));

    // deep truncation: ub far below the mean still yields valid samples
    RngStream drng(10);
    for (int i = 0; i < 1000; ++i) {
        const double x = truncated_normal_sample(0.0, 1.0, -8.0, drng);
        REQUIRE(x <= -8.0);
        REQUIRE(std::isfinite(x));
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    namespace fs = std::filesystem;
    const std::string path =
        (fs::temp_directory_path() / "dbmm_test_ckpt.bin").string();

    RngStream rng(11);
    std::vector<ParamBlock> blocks;
    blocks.push_back({"omega", {3, 4}, {}});
    blocks.push_back({"bias", {4}, {}});
    for (auto& b : blocks) {
        size_t n = 1;
        for (int d : b.dims) n *= size_t(d);
        b.data.resize(n);
        for (auto& v : b.data) v = rng.normal() * 1e3;
    }
    blocks[0].data[0] = 0.1 + 0.2;  // not exactly representable; must survive

    save_param_blocks(path, 42, blocks);
    LoadedCheckpoint lc = load_param_blocks(path);
    CHECK(lc.model_tag == 42);
    REQUIRE(lc.blocks.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(lc.blocks[i].name == blocks[i].name);
        CHECK(lc.blocks[i].dims == blocks[i].dims);
        REQUIRE(lc.blocks[i].data.size() == blocks[i].data.size());
        for (size_t j = 0; j < blocks[i].data.size(); ++j)
            CHECK(lc.blocks[i].data[j] == blocks[i].data[j]);
    }
    fs::remove(path);
}

TEST_CASE("checkpoint loader rejects garbage") {
    namespace fs = std::filesystem;
    const std::string missing =
        (fs::temp_directory_path() / "dbmm_no_such_ckpt.bin").string();
    fs::remove(missing);
    CHECK_THROWS_AS(load_param_blocks(missing), Error);

    const std::string bad =
        (fs::temp_directory_path() / "dbmm_bad_ckpt.bin").string();
    {
        FILE* f = std::fopen(bad.c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs("not a checkpoint at all", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_param_blocks(bad), Error);

    // valid header, truncated payload
    const std::string trunc =
        (fs::temp_directory_path() / "dbmm_trunc_ckpt.bin").string();
    save_param_blocks(trunc, 1, {{"w", {8}, std::vector<double>(8, 1.5)}});
    {
        const auto full = fs::file_size(trunc);
        fs::resize_file(trunc, full - 16);
    }
    CHECK_THROWS_AS(load_param_blocks(trunc), Error);
    fs::remove(bad);
    fs::remove(trunc);
}
