#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "parataa/triangular_system.hpp"

using namespace parataa;

namespace {

bool same_bits(const Vector& a, const Vector& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

class ZeroModel final : public ScoreModel {
public:
    ZeroModel(int d, int T) : d_(d), T_(T) {}
    int dim() const override { return d_; }
    int steps() const override { return T_; }
    Vector predict(const Vector&, int) const override { return Vector::Zero(d_); }

private:
    int d_, T_;
};

struct Setup {
    BetaSchedule sched;
    CoefficientTable coeffs;
    GaussianMixtureModel model;

    Setup(int T, int d, double eta, std::uint64_t model_seed = 7)
        : sched(build_beta_schedule(T, 1e-4, 0.02)), coeffs(CoefficientTable::build(sched, eta, 1e-3, d)),
          model(GaussianMixtureModel::random(sched, d, 3, 2.0, 0.1, model_seed)) {}
};

void fill_eps(TrajectoryState& s, const ScoreModel& m) { refresh_eps(s, m, 1, s.steps, ThreadPool(1)); }

double scale_of(const TrajectoryState& s) {
    double n = 0.0;
    for (const auto& v : s.x) {
        n = std::max(n, v.norm());
    }
    return n;
}

} // namespace

TEST_CASE("sequential solve with a zero model is a pure scaling chain") {
    const int T = 12;
    const BetaSchedule s = build_beta_schedule(T, 1e-4, 0.02);
    const CoefficientTable c = CoefficientTable::build(s, 0.0, 1e-3, 3);
    const ZeroModel m(3, T);
    const TrajectoryState init = TrajectoryState::random(T, 3, 5);
    const TrajectoryState out = sequential_solve(c, m, init.xi);
    CHECK((out.x[0] - c.abar(1, T) * init.xi[T]).norm() <= 1e-14 * init.xi[T].norm());
    CHECK(same_bits(out.x[T], init.xi[T]));
}

TEST_CASE("sequential solve matches a straight-line loop bitwise") {
    const Setup p(10, 2, 1.0);
    const TrajectoryState init = TrajectoryState::random(10, 2, 11);
    const TrajectoryState out = sequential_solve(p.coeffs, p.model, init.xi);
    Vector x = init.xi[10];
    for (int t = 10; t >= 1; --t) {
        const Vector e = p.model.predict(x, t);
        Vector next = p.coeffs.a(t) * x;
        next += p.coeffs.b(t) * e;
        if (p.coeffs.c(t - 1) != 0.0) {
            next += p.coeffs.c(t - 1) * init.xi[t - 1];
        }
        x = next;
        CHECK(same_bits(out.x[t - 1], x));
    }
    for (int t = 1; t <= 10; ++t) {
        CHECK(out.eps_valid[t]);
    }
}

TEST_CASE("order-k map") {
    const int T = 9;
    const Setup p(T, 3, 1.0);
    TrajectoryState s = TrajectoryState::random(T, 3, 3);
    fill_eps(s, p.model);

    SUBCASE("k = 1 is one sequential step") {
        for (int t = 1; t <= T; ++t) {
            const Vector want = p.coeffs.a(t) * s.x[t] + p.coeffs.b(t) * s.eps[t] + p.coeffs.c(t - 1) * s.xi[t - 1];
            CHECK((f_order_k(t, s, p.coeffs, 1) - want).norm() <= 1e-14 * want.norm());
        }
    }
    SUBCASE("the top equation ignores the order") {
        for (int k = 1; k <= T; ++k) {
            CHECK(same_bits(f_order_k(T, s, p.coeffs, k), f_order_k(T, s, p.coeffs, 1)));
        }
    }
    SUBCASE("k = 2 substitutes the next equation") {
        for (int t = 1; t < T; ++t) {
            const Vector inner = p.coeffs.a(t + 1) * s.x[t + 1] + p.coeffs.b(t + 1) * s.eps[t + 1] +
                                 p.coeffs.c(t) * s.xi[t];
            const Vector want = p.coeffs.a(t) * inner + p.coeffs.b(t) * s.eps[t] + p.coeffs.c(t - 1) * s.xi[t - 1];
            CHECK((f_order_k(t, s, p.coeffs, 2) - want).norm() <= 1e-13 * want.norm());
        }
    }
    SUBCASE("a horizon caps the order") {
        CHECK(same_bits(f_order_k(2, s, p.coeffs, 5, 4), f_order_k(2, s, p.coeffs, 3)));
        CHECK(same_bits(f_order_k(2, s, p.coeffs, 5, 2), f_order_k(2, s, p.coeffs, 1)));
        CHECK_THROWS_AS(f_order_k(3, s, p.coeffs, 2, 2), IndexError);
    }
    SUBCASE("argument and cache checks") {
        CHECK_THROWS_AS(f_order_k(0, s, p.coeffs, 1), IndexError);
        CHECK_THROWS_AS(f_order_k(1, s, p.coeffs, T + 1), IndexError);
        s.eps_valid[5] = false;
        CHECK_THROWS_AS(f_order_k(3, s, p.coeffs, 4), StateError);
        CHECK_NOTHROW(f_order_k(3, s, p.coeffs, 2));
    }
}

TEST_CASE("residuals") {
    const int T = 4;
    const Setup p(T, 3, 1.0);

    SUBCASE("vanish on the sequential solution") {
        const TrajectoryState sol = sequential_solve(p.coeffs, p.model, TrajectoryState::random(T, 3, 1).xi);
        for (double r : residuals(sol, p.coeffs)) {
            CHECK(r == 0.0);
        }
    }
    SUBCASE("grow by the squared perturbation") {
        TrajectoryState sol = sequential_solve(p.coeffs, p.model, TrajectoryState::random(T, 3, 1).xi);
        Vector v(3);
        v << 0.5, -0.25, 1.0;
        sol.x[1] += v;
        CHECK(residual_at(1, sol, p.coeffs) == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
    }
    SUBCASE("match a naive loop on a random state") {
        TrajectoryState s = TrajectoryState::random(T, 3, 2);
        fill_eps(s, p.model);
        const ResidualVector r = residuals(s, p.coeffs);
        REQUIRE(r.size() == static_cast<std::size_t>(T));
        for (int t = 1; t <= T; ++t) {
            double sum = 0.0;
            const Vector e = p.model.predict(s.x[t], t);
            for (int i = 0; i < 3; ++i) {
                const double diff = s.x[t - 1][i] - p.coeffs.a(t) * s.x[t][i] - p.coeffs.b(t) * e[i] -
                                    p.coeffs.c(t - 1) * s.xi[t - 1][i];
                sum += diff * diff;
            }
            CHECK(r[t - 1] == doctest::Approx(sum).epsilon(1e-12));
            CHECK(r[t - 1] >= 0.0);
        }
    }
}

TEST_CASE("first-order Jacobi sweeps fix one more unknown per iteration") {
    const int T = 16;
    const Setup p(T, 4, 1.0);
    TrajectoryState s = TrajectoryState::random(T, 4, 21);
    const TrajectoryState sol = sequential_solve(p.coeffs, p.model, s.xi);
    const ThreadPool pool(4);
    for (int i = 1; i <= T; ++i) {
        refresh_eps(s, p.model, 1, T, pool);
        s = fixed_point_step(s, p.coeffs, 1, 0, T - 1, pool);
        CHECK(s.iteration == i);
        for (int u = T - i; u < T; ++u) {
            CHECK(same_bits(s.x[u], sol.x[u]));
        }
        if (i < T) {
            CHECK_FALSE(same_bits(s.x[T - i - 1], sol.x[T - i - 1]));
        }
    }
    refresh_eps(s, p.model, 1, T, pool);
    const TrajectoryState again = fixed_point_step(s, p.coeffs, 1, 0, T - 1, pool);
    for (int u = 0; u <= T; ++u) {
        CHECK(same_bits(again.x[u], s.x[u]));
    }
}

TEST_CASE("Jacobi sweep is order and thread-count independent") {
    const int T = 20;
    const Setup p(T, 5, 1.0);
    TrajectoryState s = TrajectoryState::random(T, 5, 4);
    s.frozen[17] = true;
    fill_eps(s, p.model);
    for (int k : {1, 3, T}) {
        // Reference computed in reverse order from the untouched state.
        std::vector<Vector> want(T);
        for (int u = T - 1; u >= 0; --u) {
            want[u] = s.frozen[u] ? s.x[u] : f_order_k(u + 1, s, p.coeffs, k);
        }
        for (int threads : {1, 4, 8}) {
            const TrajectoryState out = fixed_point_step(s, p.coeffs, k, 0, T - 1, ThreadPool(threads));
            for (int u = 0; u < T; ++u) {
                CHECK(same_bits(out.x[u], want[u]));
            }
            CHECK(same_bits(out.x[17], s.x[17]));
            CHECK(out.eps_valid[17]);
            CHECK_FALSE(out.eps_valid[16]);
        }
    }
    CHECK_THROWS_AS(fixed_point_step(s, p.coeffs, 1, 5, 4, ThreadPool(1)), IndexError);
}

TEST_CASE("full-order sweeps reproduce a Picard iteration") {
    const int T = 30;
    const Setup p(T, 3, 1.0);
    TrajectoryState s = TrajectoryState::random(T, 3, 8);
    const ThreadPool pool(4);
    for (int it = 0; it < 8; ++it) {
        refresh_eps(s, p.model, 1, T, pool);
        // Picard: integrate the drift of the previous iterate from x_T downwards.
        std::vector<Vector> picard(T + 1);
        picard[T] = s.x[T];
        for (int t = T; t >= 1; --t) {
            picard[t - 1] = p.coeffs.a(t) * picard[t] + p.coeffs.b(t) * p.model.predict(s.x[t], t) +
                            p.coeffs.c(t - 1) * s.xi[t - 1];
        }
        s = fixed_point_step(s, p.coeffs, T, 0, T - 1, pool);
        for (int u = 0; u < T; ++u) {
            CHECK((s.x[u] - picard[u]).norm() <= 1e-12 * std::max(1.0, picard[u].norm()));
        }
    }
}

TEST_CASE("the sequential solution solves every order") {
    for (int T : {8, 100}) {
        const Setup p(T, 16, 1.0);
        TrajectoryState sol = sequential_solve(p.coeffs, p.model, TrajectoryState::random(T, 16, 2).xi);
        const double scale = scale_of(sol);
        CHECK(verify_equivalence(sol, p.coeffs, p.model, 1, ThreadPool(2)) == 0.0);
        for (int k : {2, 4, 8, T}) {
            if (k > T) {
                continue;
            }
            CHECK(verify_equivalence(sol, p.coeffs, p.model, k, ThreadPool(2)) <= 1e-6 * scale);
        }
        TrajectoryState bad = sol;
        bad.x[T / 2][0] += 1e-3;
        bad.invalidate_eps();
        CHECK(verify_equivalence(bad, p.coeffs, p.model, 2, ThreadPool(2)) > 0.0);
    }
}

TEST_CASE("information needs ceil((T-1)/k) sweeps to reach x_0") {
    const int T = 32;
    const Setup p(T, 4, 0.0);
    const ThreadPool pool(4);
    for (int k : {1, 2, 4, 8}) {
        TrajectoryState s = TrajectoryState::random(T, 4, 100 + k);
        const TrajectoryState sol = sequential_solve(p.coeffs, p.model, s.xi);
        int iters = 0;
        while ((s.x[0] - sol.x[0]).norm() > 1e-9 * sol.x[0].norm()) {
            refresh_eps(s, p.model, 1, T, pool);
            s = fixed_point_step(s, p.coeffs, k, 0, T - 1, pool);
            ++iters;
            REQUIRE(iters <= T);
        }
        CHECK(iters >= (T - 1 + k - 1) / k);
    }
}

TEST_CASE("state construction") {
    const TrajectoryState a = TrajectoryState::random(5, 2, 9);
    const TrajectoryState b = TrajectoryState::random(5, 2, 9);
    for (int u = 0; u <= 5; ++u) {
        CHECK(same_bits(a.x[u], b.x[u]));
        CHECK(same_bits(a.xi[u], b.xi[u]));
    }
    CHECK(same_bits(a.x[5], a.xi[5]));
    CHECK_THROWS_AS(TrajectoryState::random(0, 2, 1), ShapeError);
    CHECK_THROWS_AS(TrajectoryState::from_noise({Vector::Zero(2)}), ShapeError);
    CHECK_THROWS_AS(TrajectoryState::from_noise({Vector::Zero(2), Vector::Zero(3)}), ShapeError);
    const Setup p(6, 2, 0.0);
    CHECK_THROWS_AS(residuals(a, p.coeffs), ShapeError);
}
