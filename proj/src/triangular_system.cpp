#include "parataa/triangular_system.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "parataa/errors.hpp"

namespace parataa {

TrajectoryState TrajectoryState::random(int steps, int dim, std::uint64_t seed) {
    if (steps < 1 || dim < 1) {
        throw ShapeError("trajectory needs steps >= 1 and dim >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) {
            v[i] = normal(rng);
        }
        return v;
    };
    std::vector<Vector> xi(steps + 1);
    for (auto& v : xi) {
        v = draw();
    }
    TrajectoryState s = from_noise(std::move(xi), seed);
    for (int u = 0; u < steps; ++u) {
        s.x[u] = draw();
    }
    return s;
}

TrajectoryState TrajectoryState::from_noise(std::vector<Vector> xi, std::uint64_t seed) {
    if (xi.size() < 2) {
        throw ShapeError("noise bank needs at least two vectors");
    }
    TrajectoryState s;
    s.steps = static_cast<int>(xi.size()) - 1;
    s.dim = static_cast<int>(xi.front().size());
    s.seed = seed;
    for (const auto& v : xi) {
        if (v.size() != s.dim) {
            throw ShapeError("noise bank vectors differ in dimension");
        }
    }
    s.xi = std::move(xi);
    s.x.assign(s.steps + 1, Vector::Zero(s.dim));
    s.x[s.steps] = s.xi[s.steps];
    s.eps.assign(s.steps + 1, Vector());
    s.eps_valid.assign(s.steps + 1, false);
    s.frozen.assign(s.steps, false);
    return s;
}

void TrajectoryState::invalidate_eps() {
    std::fill(eps_valid.begin(), eps_valid.end(), false);
}

namespace {

void check_shape(const TrajectoryState& state, const CoefficientTable& coeffs) {
    if (state.steps != coeffs.steps() || state.dim != coeffs.dim()) {
        throw ShapeError("trajectory (T=" + std::to_string(state.steps) + ", d=" + std::to_string(state.dim) +
                         ") does not match coefficients (T=" + std::to_string(coeffs.steps()) +
                         ", d=" + std::to_string(coeffs.dim()) + ")");
    }
}

const Vector& cached_eps(const TrajectoryState& state, int t) {
    if (!state.eps_valid[t]) {
        throw StateError("score value for step " + std::to_string(t) + " is not cached");
    }
    return state.eps[t];
}

} // namespace

TrajectoryState sequential_solve(const CoefficientTable& coeffs, const ScoreModel& model,
                                 const std::vector<Vector>& xi, std::uint64_t seed) {
    TrajectoryState s = TrajectoryState::from_noise(xi, seed);
    check_shape(s, coeffs);
    for (int t = s.steps; t >= 1; --t) {
        s.eps[t] = eval_eps(model, s.x[t], t);
        s.eps_valid[t] = true;
        s.x[t - 1] = f_order_k(t, s, coeffs, 1);
    }
    return s;
}

int refresh_eps(TrajectoryState& state, const ScoreModel& model, int first, int last, const ThreadPool& pool) {
    if (first > last) {
        return 0;
    }
    if (first < 1 || last > state.steps) {
        throw IndexError("refresh_eps: steps [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] outside 1.." + std::to_string(state.steps));
    }
    std::vector<EvalPoint> points;
    points.reserve(last - first + 1);
    for (int t = first; t <= last; ++t) {
        points.push_back({&state.x[t], t});
    }
    auto values = eval_batch(model, points, pool);
    for (int t = first; t <= last; ++t) {
        state.eps[t] = std::move(values[t - first]);
        state.eps_valid[t] = true;
    }
    return last - first + 1;
}

Vector f_order_k(int t, const TrajectoryState& state, const CoefficientTable& coeffs, int k, int horizon) {
    const int T = state.steps;
    if (t < 1 || t > T) {
        throw IndexError("f_order_k: step " + std::to_string(t) + " outside 1.." + std::to_string(T));
    }
    if (k < 1 || k > T) {
        throw IndexError("f_order_k: order " + std::to_string(k) + " outside 1.." + std::to_string(T));
    }
    if (horizon < 0) {
        horizon = T;
    }
    if (horizon < t || horizon > T) {
        throw IndexError("f_order_k: horizon " + std::to_string(horizon) + " outside " + std::to_string(t) + ".." +
                         std::to_string(T));
    }
    const int tk = std::min(t + k - 1, horizon);
    Vector acc = coeffs.abar(t, tk) * state.x[tk];
    for (int j = t; j <= tk; ++j) {
        acc += (coeffs.abar(t, j - 1) * coeffs.b(j)) * cached_eps(state, j);
    }
    for (int j = t; j <= tk; ++j) {
        const double cj = coeffs.c(j - 1);
        if (cj != 0.0) {
            acc += (coeffs.abar(t, j - 1) * cj) * state.xi[j - 1];
        }
    }
    return acc;
}

double residual_at(int u, const TrajectoryState& state, const CoefficientTable& coeffs) {
    return (state.x[u] - f_order_k(u + 1, state, coeffs, 1)).squaredNorm();
}

ResidualVector residuals(const TrajectoryState& state, const CoefficientTable& coeffs) {
    check_shape(state, coeffs);
    ResidualVector r(state.steps);
    for (int u = 0; u < state.steps; ++u) {
        r[u] = residual_at(u, state, coeffs);
    }
    return r;
}

TrajectoryState fixed_point_step(const TrajectoryState& state, const CoefficientTable& coeffs, int k, int first,
                                 int last, const ThreadPool& pool) {
    check_shape(state, coeffs);
    if (first < 0 || last >= state.steps || first > last) {
        throw IndexError("fixed_point_step: window [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] invalid for T=" + std::to_string(state.steps));
    }
    TrajectoryState next = state;
    const auto n = static_cast<std::size_t>(last - first + 1);
    pool.parallel_for(n, [&](std::size_t i) {
        const int u = first + static_cast<int>(i);
        if (!state.frozen[u]) {
            next.x[u] = f_order_k(u + 1, state, coeffs, k);
        }
    });
    // Cached scores describe the old iterate.
    for (int u = first; u <= last; ++u) {
        if (!state.frozen[u] && u >= 1) {
            next.eps_valid[u] = false;
        }
    }
    next.iteration = state.iteration + 1;
    return next;
}

double verify_equivalence(TrajectoryState& trajectory, const CoefficientTable& coeffs, const ScoreModel& model,
                          int k, const ThreadPool& pool) {
    check_shape(trajectory, coeffs);
    std::vector<EvalPoint> points;
    std::vector<int> missing;
    for (int t = 1; t <= trajectory.steps; ++t) {
        if (!trajectory.eps_valid[t]) {
            missing.push_back(t);
            points.push_back({&trajectory.x[t], t});
        }
    }
    auto values = eval_batch(model, points, pool);
    for (std::size_t i = 0; i < missing.size(); ++i) {
        trajectory.eps[missing[i]] = std::move(values[i]);
        trajectory.eps_valid[missing[i]] = true;
    }
    double worst = 0.0;
    for (int t = 1; t <= trajectory.steps; ++t) {
        worst = std::max(worst, (trajectory.x[t - 1] - f_order_k(t, trajectory, coeffs, k)).norm());
    }
    return worst;
}

} // namespace parataa
