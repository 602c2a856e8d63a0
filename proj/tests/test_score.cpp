#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "parataa/score.hpp"

using namespace parataa;

namespace {

bool same_bits(const Vector& a, const Vector& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Vector random_vector(std::mt19937_64& g, int d, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Vector v(d);
    for (int i = 0; i < d; ++i) {
        v[i] = n(g);
    }
    return v;
}

// Mixture log-density written out directly, without log-sum-exp.
double log_density(const GaussianMixtureModel& m, double abar, const Vector& x) {
    const double v = abar * m.s0_sq() + 1.0 - abar;
    const double d = static_cast<double>(x.size());
    double p = 0.0;
    for (std::size_t k = 0; k < m.weights().size(); ++k) {
        const double q = (x - std::sqrt(abar) * m.means()[k]).squaredNorm();
        p += m.weights()[k] * std::exp(-0.5 * q / v) / std::pow(2.0 * M_PI * v, 0.5 * d);
    }
    return std::log(p);
}

class FailingModel final : public ScoreModel {
public:
    int dim() const override { return 2; }
    int steps() const override { return 10; }
    Vector predict(const Vector& x, int t) const override {
        if (t == 7) {
            throw std::runtime_error("boom at 7");
        }
        return x;
    }
};

} // namespace

TEST_CASE("single standard normal component") {
    const BetaSchedule s = build_beta_schedule(20, 1e-4, 0.02);
    const GaussianMixtureModel m(s, {1.0}, {Vector::Zero(3)}, 1.0);
    std::mt19937_64 g(1);
    for (int t = 1; t <= 20; ++t) {
        const Vector x = random_vector(g, 3);
        const Vector e = eval_eps(m, x, t);
        const Vector want = std::sqrt(1.0 - s.alpha_bar(t)) * x;
        CHECK((e - want).norm() <= 1e-14 * want.norm());
    }
}

TEST_CASE("single component vanishes at its mode") {
    const BetaSchedule s = build_beta_schedule(20, 1e-4, 0.02);
    std::mt19937_64 g(2);
    const Vector mu = random_vector(g, 4, 2.0);
    const GaussianMixtureModel m(s, {3.0}, {mu}, 0.3);
    for (int t : {1, 10, 20}) {
        const Vector e = eval_eps(m, std::sqrt(s.alpha_bar(t)) * mu, t);
        CHECK(e.norm() <= 1e-15);
    }
}

TEST_CASE("single component closed form for every step") {
    const BetaSchedule s = build_beta_schedule(30, 1e-4, 0.02);
    std::mt19937_64 g(3);
    const Vector mu = random_vector(g, 5);
    const double s0 = 0.2;
    const GaussianMixtureModel m(s, {1.0}, {mu}, s0);
    for (int t = 1; t <= 30; ++t) {
        const double ab = s.alpha_bar(t);
        const Vector x = random_vector(g, 5);
        const Vector want = std::sqrt(1.0 - ab) * (x - std::sqrt(ab) * mu) / (ab * s0 + 1.0 - ab);
        CHECK((eval_eps(m, x, t) - want).norm() <= 1e-13 * want.norm());
    }
}

TEST_CASE("two components against finite differences of the log-density") {
    const BetaSchedule s = build_beta_schedule(50, 1e-4, 0.02);
    std::mt19937_64 g(4);
    const GaussianMixtureModel m(s, {0.3, 0.7}, {random_vector(g, 2), random_vector(g, 2)}, 0.5);
    const double h = 1e-5;
    for (int t : {1, 5, 25, 50}) {
        const double ab = s.alpha_bar(t);
        for (double gx = -1.5; gx <= 1.5; gx += 0.75) {
            for (double gy = -1.5; gy <= 1.5; gy += 0.75) {
                Vector x(2);
                x << gx, gy;
                Vector grad(2);
                for (int i = 0; i < 2; ++i) {
                    Vector hi = x, lo = x;
                    hi[i] += h;
                    lo[i] -= h;
                    grad[i] = (log_density(m, ab, hi) - log_density(m, ab, lo)) / (2.0 * h);
                }
                const Vector want = -std::sqrt(1.0 - ab) * grad;
                CHECK((eval_eps(m, x, t) - want).norm() <= 1e-6 * std::max(1.0, want.norm()));
            }
        }
    }
}

TEST_CASE("responsibilities form a distribution far from every mean") {
    const BetaSchedule s = build_beta_schedule(10, 1e-4, 0.02);
    const GaussianMixtureModel m = GaussianMixtureModel::random(s, 8, 5, 3.0, 0.01, 9);
    double total = 0.0;
    for (double w : m.weights()) {
        total += w;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    std::mt19937_64 g(5);
    for (int t : {1, 10}) {
        const Vector x = random_vector(g, 8, 100.0);
        const auto gamma = m.responsibilities(x, t);
        double sum = 0.0;
        for (double v : gamma) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(eval_eps(m, x, t).allFinite());
    }
}

TEST_CASE("evaluation is pure") {
    const BetaSchedule s = build_beta_schedule(10, 1e-4, 0.02);
    const GaussianMixtureModel m = GaussianMixtureModel::random(s, 6, 3, 1.0, 0.1, 1);
    std::mt19937_64 g(6);
    const Vector x = random_vector(g, 6);
    std::set<std::string> patterns;
    for (int i = 0; i < 1000; ++i) {
        const Vector e = eval_eps(m, x, 4);
        patterns.emplace(reinterpret_cast<const char*>(e.data()), sizeof(double) * e.size());
    }
    CHECK(patterns.size() == 1);
}

TEST_CASE("argument validation") {
    const BetaSchedule s = build_beta_schedule(10, 1e-4, 0.02);
    const GaussianMixtureModel m = GaussianMixtureModel::random(s, 3, 2, 1.0, 0.1, 1);
    CHECK_THROWS_AS(eval_eps(m, Vector::Zero(4), 1), ShapeError);
    CHECK_THROWS_AS(eval_eps(m, Vector::Zero(3), 0), IndexError);
    CHECK_THROWS_AS(eval_eps(m, Vector::Zero(3), 11), IndexError);
    CHECK_THROWS_AS(GaussianMixtureModel(s, {1.0, -1.0}, {Vector::Zero(3), Vector::Zero(3)}, 0.1), ShapeError);
    CHECK_THROWS_AS(GaussianMixtureModel(s, {1.0}, {Vector::Zero(3)}, 0.0), ShapeError);
    CHECK_THROWS_AS(GaussianMixtureModel(s, {1.0, 1.0}, {Vector::Zero(3), Vector::Zero(2)}, 0.1), ShapeError);
}

TEST_CASE("batch evaluation is positional and thread-count invariant") {
    const BetaSchedule s = build_beta_schedule(100, 1e-4, 0.02);
    const GaussianMixtureModel m = GaussianMixtureModel::random(s, 16, 3, 2.0, 0.1, 7);
    std::mt19937_64 g(8);
    std::vector<Vector> xs;
    std::vector<EvalPoint> pts;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(random_vector(g, 16));
    }
    for (int i = 0; i < 100; ++i) {
        pts.push_back({&xs[i], 100 - i});
    }
    const auto ref = eval_batch(m, pts, ThreadPool(1));
    REQUIRE(ref.size() == 100);
    for (int i = 0; i < 100; ++i) {
        CHECK(same_bits(ref[i], eval_eps(m, xs[i], 100 - i)));
    }
    for (int threads : {4, 8}) {
        const auto got = eval_batch(m, pts, ThreadPool(threads));
        for (int i = 0; i < 100; ++i) {
            CHECK(same_bits(ref[i], got[i]));
        }
    }
    CHECK(eval_batch(m, std::span<const EvalPoint>{}, ThreadPool(4)).empty());
    const auto one = eval_batch(m, std::span<const EvalPoint>(pts.data(), 1), ThreadPool(4));
    REQUIRE(one.size() == 1);
    CHECK(same_bits(one[0], ref[0]));
}

TEST_CASE("batch errors carry the point index") {
    const FailingModel m;
    std::vector<Vector> xs(10, Vector::Zero(2));
    std::vector<EvalPoint> pts;
    for (int i = 0; i < 10; ++i) {
        pts.push_back({&xs[i], i + 1});
    }
    for (int threads : {1, 3}) {
        try {
            eval_batch(m, pts, ThreadPool(threads));
            FAIL("expected an error");
        } catch (const BatchEvalError& e) {
            CHECK(e.index() == 6);
            CHECK(std::string(e.what()).find("boom at 7") != std::string::npos);
        }
    }
    xs[2] = Vector::Zero(3);
    try {
        eval_batch(m, pts, ThreadPool(2));
        FAIL("expected an error");
    } catch (const BatchEvalError& e) {
        CHECK(e.index() == 2);
    }
}

TEST_CASE("guidance combination") {
    Vector u(3), c(3);
    u << 1.0, -2.0, 0.5;
    c << 0.0, 4.0, 1.5;
    CHECK(same_bits(apply_guidance(u, c, 0.0), u));
    CHECK(same_bits(apply_guidance(u, c, 1.0), c));
    CHECK(same_bits(apply_guidance(Vector::Zero(3), c, 5.0), Vector(5.0 * c)));
    CHECK_THROWS_AS(apply_guidance(u, Vector::Zero(2), 1.0), ShapeError);

    const BetaSchedule s = build_beta_schedule(10, 1e-4, 0.02);
    auto a = std::make_shared<GaussianMixtureModel>(GaussianMixtureModel::random(s, 3, 2, 1.0, 0.1, 1));
    auto b = std::make_shared<GaussianMixtureModel>(GaussianMixtureModel::random(s, 3, 2, 1.0, 0.1, 2));
    const GuidedModel guided(a, b, 5.0);
    std::mt19937_64 g(9);
    const Vector x = random_vector(g, 3);
    CHECK(same_bits(eval_eps(guided, x, 3), apply_guidance(eval_eps(*a, x, 3), eval_eps(*b, x, 3), 5.0)));
}
