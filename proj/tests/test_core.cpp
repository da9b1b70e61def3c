#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"
#include "dbmm/core/rng.hpp"
#include "dbmm/core/special.hpp"

using namespace dbmm;

TEST_CASE("normalize basic examples") {
    std::vector<double> v{2.0, 2.0};
    normalize(v);
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[1] == doctest::Approx(0.5));

    // division by the sum 0.667
    std::vector<double> w{0.64, 0.026, 0.001, 0.0, 0.0};
    normalize(w);
    CHECK(w[0] == doctest::Approx(0.9595).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.0390).epsilon(1e-3));
    CHECK(w[2] == doctest::Approx(0.0015).epsilon(1e-3));
    CHECK(w[3] == 0.0);
    CHECK(w[4] == 0.0);
}

TEST_CASE("normalize rejects degenerate input") {
    std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(normalize(zeros), DegenerateBelief);
    std::vector<double> neg{1.0, -0.5};
    CHECK_THROWS_AS(normalize(neg), DegenerateBelief);
    std::vector<double> nan{1.0, std::nan("")};
    CHECK_THROWS_AS(normalize(nan), DegenerateBelief);
    std::vector<double> inf{1.0, INFINITY};
    CHECK_THROWS_AS(normalize(inf), DegenerateBelief);
    std::vector<double> empty;
    CHECK_THROWS_AS(normalize(empty), EmptyInput);
}

TEST_CASE("normalize is idempotent and scale-invariant") {
    RngStream rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.uniform01() * 10.0;
        std::vector<double> once = normalized(v);
        std::vector<double> twice = normalized(once);
        std::vector<double> scaled = v;
        for (auto& x : scaled) x *= 3.7e4;
        std::vector<double> scaled_norm = normalized(scaled);
        for (int i = 0; i < 5; ++i) {
            CHECK(std::abs(twice[i] - once[i]) < 1e-12);
            CHECK(std::abs(scaled_norm[i] - once[i]) < 1e-12);
        }
    }
}

TEST_CASE("log_sum_exp") {
    CHECK(log_sum_exp({0.0, 0.0}) == doctest::Approx(std::log(2.0)));
    CHECK(log_sum_exp({1000.0, 1000.0}) ==
          doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(log_sum_exp({-1e30, 0.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(log_sum_exp({}), EmptyInput);

    // shift invariance
    RngStream rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(6);
        for (auto& x : v) x = rng.normal() * 50.0;
        const double c = rng.normal() * 100.0;
        std::vector<double> shifted = v;
        for (auto& x : shifted) x += c;
        CHECK(std::abs(log_sum_exp(shifted) - (log_sum_exp(v) + c)) < 1e-10);
    }
}

TEST_CASE("one_hot") {
    CHECK(one_hot(0, 3) == std::vector<double>{1, 0, 0});
    CHECK(one_hot(2, 3) == std::vector<double>{0, 0, 1});
    CHECK_THROWS_AS(one_hot(3, 3), IndexError);
    CHECK_THROWS_AS(one_hot(-1, 3), IndexError);
    CHECK_THROWS_AS(one_hot(0, 0), ShapeError);
}

TEST_CASE("rng streams replay bit-identically") {
    RngStream a(123, 45);
    RngStream b(123, 45);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(123, 46);
    bool all_equal = true;
    RngStream a2(123, 45);
    for (int i = 0; i < 10; ++i)
        if (a2.next_u64() != c.next_u64()) all_equal = false;
    CHECK_FALSE(all_equal);
}

TEST_CASE("split determinism and separation") {
    RngStream parent(9);
    RngStream c1 = parent.split(7);
    RngStream c2 = split_stream(parent, 7);
    for (int i = 0; i < 100; ++i) CHECK(c1.next_u64() == c2.next_u64());

    // sibling streams and same-child-of-different-parent streams differ
    int first_draw_collisions = 0;
    for (int i = 0; i < 1000; ++i) {
        RngStream x = parent.split(uint64_t(i));
        RngStream y = parent.split(uint64_t(i) + 1);
        if (x.next_u64() == y.next_u64()) ++first_draw_collisions;
    }
    CHECK(first_draw_collisions == 0);

    RngStream pa(1), pb(2);
    int cross_parent_collisions = 0;
    for (int i = 0; i < 1000; ++i) {
        RngStream x = pa.split(uint64_t(i));
        RngStream y = pb.split(uint64_t(i));
        if (x.next_u64() == y.next_u64()) ++cross_parent_collisions;
    }
    CHECK(cross_parent_collisions == 0);

    // splitting depends on identity, not on how many draws were consumed
    RngStream p1(9);
    RngStream before = p1.split(3);
    p1.next_u64();
    p1.next_u64();
    RngStream after = p1.split(3);
    for (int i = 0; i < 10; ++i) CHECK(before.next_u64() == after.next_u64());
}

TEST_CASE("uniform01 stays inside the open interval and is roughly uniform") {
    RngStream rng(5);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have the right first two moments") {
    RngStream rng(6);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));

    double shifted_sum = 0.0;
    for (int i = 0; i < 20000; ++i) shifted_sum += rng.normal(3.0, 0.5);
    CHECK(shifted_sum / 20000.0 == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("uniform_int and categorical") {
    RngStream rng(11);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[rng.uniform_int(4)];
    for (int c : counts)
        CHECK(double(c) / 100000.0 == doctest::Approx(0.25).epsilon(0.05));
    CHECK_THROWS_AS(rng.uniform_int(0), IndexError);

    std::vector<double> probs{0.1, 0.6, 0.3};
    std::vector<int> cat_counts(3, 0);
    for (int i = 0; i < 100000; ++i) ++cat_counts[rng.categorical(probs)];
    CHECK(double(cat_counts[0]) / 100000.0 == doctest::Approx(0.1).epsilon(0.1));
    CHECK(double(cat_counts[1]) / 100000.0 == doctest::Approx(0.6).epsilon(0.05));
    CHECK(double(cat_counts[2]) / 100000.0 == doctest::Approx(0.3).epsilon(0.05));
    CHECK_THROWS_AS(rng.categorical({}), EmptyInput);
}

// ---- special functions: constants frozen from an independent reference
// implementation ----------------------------------------------------------

TEST_CASE("normal cdf and its inverse") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.975) ==
          doctest::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(inverse_normal_cdf(1e-12) ==
          doctest::Approx(-7.034483825301131).epsilon(1e-10));
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), IndexError);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), IndexError);

    // round trip across the domain
    for (double p : {1e-10, 1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999, 1 - 1e-9})
        CHECK(normal_cdf(inverse_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-9));
}

TEST_CASE("log normal cdf deep tail") {
    struct Case {
        double z, expect;
    };
    const Case cases[] = {
        {-40.0, -804.6084420137539}, {-20.0, -203.9171553710973},
        {-10.0, -53.23128515051248}, {-5.0, -15.06499839398873},
        {-1.0, -1.841021645009264},  {0.0, -0.6931471805599453},
        {1.5, -0.06914345561223399},
    };
    for (const auto& c : cases)
        CHECK(log_normal_cdf(c.z) == doctest::Approx(c.expect).epsilon(1e-10));
}

TEST_CASE("normal hazard ratio") {
    struct Case {
        double z, expect;
    };
    const Case cases[] = {
        {-30.0, 30.03325966743637}, {-8.0, 8.12136811223618},
        {-2.0, 2.37321553282284},   {0.0, 0.7978845608028654},
        {3.0, 0.004437839042125666},
    };
    for (const auto& c : cases)
        CHECK(normal_hazard(c.z) == doctest::Approx(c.expect).epsilon(1e-10));
}

TEST_CASE("regularized incomplete beta") {
    CHECK(betainc(2.5, 0.5, 0.3) ==
          doctest::Approx(0.01892712407194566).epsilon(1e-10));
    CHECK(betainc(0.35, 0.5, 0.9) ==
          doctest::Approx(0.8405365740309483).epsilon(1e-10));
    CHECK(betainc(15.0, 0.5, 0.99) ==
          doctest::Approx(0.5860649647763355).epsilon(1e-10));
    CHECK(betainc(2.0, 3.0, 0.0) == 0.0);
    CHECK(betainc(2.0, 3.0, 1.0) == 1.0);
    CHECK(std::exp(log_betainc(2.5, 0.5, 0.3)) ==
          doctest::Approx(0.01892712407194566).epsilon(1e-9));
}

TEST_CASE("student t cdf against reference values") {
    struct Case {
        double t, nu, expect;
    };
    const Case cases[] = {
        {-3.0, 5.0, 0.01504962394873128},  {-1.0, 5.0, 0.1816087338245613},
        {0.5, 5.0, 0.6808505641795355},    {2.0, 5.0, 0.9490302605850709},
        {-2.0, 1.0, 0.1475836176504332},   {-1.5, 2.0, 0.1361965624455005},
        {-0.3, 0.7, 0.4146175931856675},   {-2.5, 30.0, 0.009057824534033353},
        {-1.0, 1e9, 0.1586552540524428},
    };
    for (const auto& c : cases)
        CHECK(student_t_cdf(c.t, c.nu) == doctest::Approx(c.expect).epsilon(1e-10));

    // closed forms: nu=1 is Cauchy, nu=2 has an elementary formula
    for (double t : {-5.0, -1.3, -0.2, 0.4, 2.7}) {
        CHECK(student_t_cdf(t, 1.0) ==
              doctest::Approx(0.5 + std::atan(t) / M_PI).epsilon(1e-12));
        CHECK(student_t_cdf(t, 2.0) ==
              doctest::Approx(0.5 + t / (2.0 * std::sqrt(t * t + 2.0)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("student t log pdf") {
    CHECK(student_t_log_pdf(-1.3, 5.0) ==
          doctest::Approx(-1.842147474172834).epsilon(1e-12));
    CHECK(student_t_log_pdf(0.4, 2.0) ==
          doctest::Approx(-1.15516233254411).epsilon(1e-12));
}

TEST_CASE("student t quantile") {
    CHECK(student_t_quantile(0.25, 5.0) ==
          doctest::Approx(-0.7266868437979397).epsilon(1e-10));
    CHECK(student_t_quantile(1e-6, 5.0) ==
          doctest::Approx(-24.77102972053568).epsilon(1e-8));
    CHECK(student_t_quantile(0.9, 2.0) ==
          doctest::Approx(1.885618083164151).epsilon(1e-10));
    CHECK(student_t_quantile(0.01, 1.0) ==
          doctest::Approx(-31.82051595375761).epsilon(1e-8));

    for (double nu : {0.7, 1.0, 2.0, 5.0, 30.0})
        for (double p : {1e-8, 1e-4, 0.05, 0.3, 0.5, 0.77, 0.999})
            CHECK(student_t_cdf(student_t_quantile(p, nu), nu) ==
                  doctest::Approx(p).epsilon(1e-8));
}

TEST_CASE("log student t cdf stays usable far into the tail") {
    // agreement with the direct cdf where it has headroom
    for (double t : {-8.0, -3.0, -1.0, 0.0, 1.5})
        CHECK(log_student_t_cdf(t, 5.0) ==
              doctest::Approx(std::log(student_t_cdf(t, 5.0))).epsilon(1e-9));
    // power-law tail: each decade in t costs nu decades of probability
    const double l1 = log_student_t_cdf(-1e5, 5.0);
    const double l2 = log_student_t_cdf(-1e6, 5.0);
    CHECK(std::isfinite(l1));
    CHECK(l2 - l1 == doctest::Approx(-5.0 * std::log(10.0)).epsilon(1e-3));
}

TEST_CASE("vector helpers check shapes") {
    CHECK(vec_sum({1.0, 2.0, 3.5}) == doctest::Approx(6.5));
    CHECK(vec_dot({1.0, 2.0}, {3.0, -1.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(vec_dot({1.0}, {1.0, 2.0}), ShapeError);
}
