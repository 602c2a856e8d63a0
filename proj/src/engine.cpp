#include "parataa/engine.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "parataa/errors.hpp"

namespace parataa {

SolverConfig SolverConfig::resolved(int steps) const {
    SolverConfig c = *this;
    if (c.window <= 0) {
        c.window = steps;
    }
    if (c.max_iters <= 0) {
        c.max_iters = 4 * steps;
    }
    if (c.init_steps < 0) {
        c.init_steps = steps;
    }
    return c;
}

void SolverConfig::validate(int steps, int dim) const {
    const SolverConfig c = resolved(steps);
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (c.order < 1 || c.order > steps) {
        fail("order k=" + std::to_string(c.order) + " must lie in 1.." + std::to_string(steps));
    }
    if (c.window < 1 || c.window > steps) {
        fail("window w=" + std::to_string(c.window) + " must lie in 1.." + std::to_string(steps));
    }
    if (c.init_steps > steps) {
        fail("init_steps=" + std::to_string(c.init_steps) + " exceeds T=" + std::to_string(steps));
    }
    if (c.history < 1) {
        fail("history m=" + std::to_string(c.history) + " must be at least 1");
    }
    if (c.variant != Variant::FP && c.history >= dim) {
        fail("history m=" + std::to_string(c.history) + " must be smaller than the dimension d=" +
             std::to_string(dim));
    }
    if (!(c.tau >= 0.0)) {
        fail("tau must be non-negative");
    }
    if (!(c.lambda >= 0.0)) {
        fail("lambda must be non-negative");
    }
}

Variant SolverConfig::effective_variant() const {
    return history <= 1 ? Variant::FP : variant;
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged:
        return "converged";
    case SolveStatus::MaxIters:
        return "max-iters";
    case SolveStatus::EarlyStopped:
        return "early-stopped";
    }
    return "?";
}

long SolveReport::iteration_evals() const {
    long n = 0;
    for (const auto& r : iterations) {
        n += r.evals;
    }
    return n;
}

std::vector<double> stopping_thresholds(const CoefficientTable& coeffs, double tau) {
    std::vector<double> out(coeffs.steps());
    for (int u = 0; u < coeffs.steps(); ++u) {
        const double g = coeffs.noise_scale(u);
        out[u] = tau * tau * g * g * coeffs.dim();
    }
    return out;
}

WindowUpdate update_window(std::span<const double> residuals, std::span<const double> thresholds, int t1, int t2,
                           int window, std::vector<bool>& frozen) {
    if (t1 < 0 || t2 >= static_cast<int>(residuals.size()) || t1 > t2 || residuals.size() != thresholds.size() ||
        frozen.size() != residuals.size()) {
        throw IndexError("update_window: inconsistent window or vector sizes");
    }
    WindowUpdate w;
    int frontier = -1;
    for (int u = t2; u >= t1; --u) {
        if (residuals[u] > thresholds[u]) {
            frontier = u;
            break;
        }
    }
    for (int u = std::max(frontier + 1, t1); u <= t2; ++u) {
        frozen[u] = true;
    }
    if (frontier < 0 && t1 == 0) {
        w.converged = true;
        w.t1 = 0;
        w.t2 = -1;
        return w;
    }
    // A settled window with unknowns below it slides down; nothing inside it is updated.
    if (frontier < 0) {
        frontier = t1 - 1;
    }
    w.t2 = frontier;
    w.t1 = std::max(0, frontier - window + 1);
    return w;
}

TrajectoryState init_from_trajectory(const TrajectoryState& existing, int init_steps, const CoefficientTable& coeffs) {
    if (existing.steps != coeffs.steps() || existing.dim != coeffs.dim()) {
        throw ShapeError("incompatible trajectory: (T=" + std::to_string(existing.steps) + ", d=" +
                         std::to_string(existing.dim) + ") vs (T=" + std::to_string(coeffs.steps()) +
                         ", d=" + std::to_string(coeffs.dim()) + ")");
    }
    if (init_steps < 0 || init_steps > existing.steps) {
        throw IndexError("init_steps=" + std::to_string(init_steps) + " outside 0.." +
                         std::to_string(existing.steps));
    }
    TrajectoryState s = TrajectoryState::from_noise(existing.xi, existing.seed);
    for (int u = 0; u < s.steps; ++u) {
        s.x[u] = existing.x[u];
        s.frozen[u] = u >= init_steps;
    }
    return s;
}

namespace {

using Clock = std::chrono::steady_clock;

} // namespace

SolveResult solve_parallel(const SolverConfig& config, const CoefficientTable& coeffs, const ScoreModel& model,
                           TrajectoryState init, const ThreadPool& pool, const ProgressCallback& progress) {
    const int T = coeffs.steps();
    const int d = coeffs.dim();
    if (init.steps != T || init.dim != d || model.dim() != d || model.steps() != T) {
        throw ShapeError("solve_parallel: trajectory, model and coefficients disagree on (T, d)");
    }
    config.validate(T, d);
    const SolverConfig cfg = config.resolved(T);
    const Variant variant = cfg.effective_variant();
    const int k = cfg.order;
    const std::vector<double> thresholds = stopping_thresholds(coeffs, cfg.tau);

    SolveResult result{std::move(init), {}};
    TrajectoryState& st = result.state;
    SolveReport& report = result.report;
    st.x[T] = st.xi[T];
    st.invalidate_eps();
    for (int u = cfg.init_steps; u < T; ++u) {
        st.frozen[u] = true;
    }
    if (cfg.init_steps == 0) {
        report.status = SolveStatus::Converged;
        return result;
    }

    int t2 = cfg.init_steps - 1;
    int t1 = std::max(0, cfg.init_steps - cfg.window);

    const AAConfig aa{cfg.lambda, variant, cfg.safeguard};
    HistoryBuffer history(T, d, variant == Variant::FP ? 0 : cfg.history - 1);
    std::vector<Vector> prev_x(T), prev_r(T);
    std::vector<bool> prev_valid(T, false);
    std::vector<double> r(T, 0.0);

    report.status = SolveStatus::MaxIters;
    for (int s = 1; s <= cfg.max_iters; ++s) {
        const auto start = Clock::now();
        const int evals = refresh_eps(st, model, t1 + 1, t2 + 1, pool);
        pool.parallel_for(static_cast<std::size_t>(t2 - t1 + 1),
                          [&](std::size_t i) { r[t1 + i] = residual_at(t1 + static_cast<int>(i), st, coeffs); });

        const WindowUpdate next = update_window(r, thresholds, t1, t2, cfg.window, st.frozen);
        if (next.converged) {
            report.final_check_evals = evals;
            report.status = SolveStatus::Converged;
            break;
        }
        // Unknowns entering the window below t1 have no fresh score yet; they start next iteration.
        for (int u = next.t1; u < t1; ++u) {
            history.reset(u);
            prev_valid[u] = false;
        }
        const int first = t1;
        const int last = next.t2;
        if (last >= first) {
            const auto n = static_cast<std::size_t>(last - first + 1);

            std::vector<Vector> target(n), residual(n), dx(n), dr(n);
            pool.parallel_for(n, [&](std::size_t i) {
                const int u = first + static_cast<int>(i);
                // The first frozen variable x_{last+1} is the terminal value of the active subsystem.
                target[i] = f_order_k(u + 1, st, coeffs, k, last + 1);
                residual[i] = target[i] - st.x[u];
                if (prev_valid[u]) {
                    dx[i] = st.x[u] - prev_x[u];
                    dr[i] = residual[i] - prev_r[u];
                } else {
                    dx[i] = Vector::Zero(d);
                    dr[i] = Vector::Zero(d);
                }
            });
            history.push(first, dx, dr);
            std::vector<Vector> correction;
            if (history.depth() > 0) {
                correction = anderson_corrections(history, residual, first, aa);
            }
            if (cfg.safeguard && !correction.empty()) {
                // Successors of the frontier are frozen, so its plain fixed-point step is exact.
                correction[n - 1].setZero();
            }
            for (std::size_t i = 0; i < n; ++i) {
                const int u = first + static_cast<int>(i);
                prev_x[u] = st.x[u];
                prev_r[u] = residual[i];
                prev_valid[u] = true;
                if (correction.empty()) {
                    st.x[u] = std::move(target[i]);
                } else {
                    st.x[u] = target[i] - correction[i];
                }
                if (u >= 1) {
                    st.eps_valid[u] = false;
                }
            }
        }
        st.iteration = s;

        IterationRecord rec;
        rec.iteration = s;
        rec.t1 = t1;
        rec.t2 = t2;
        rec.evals = evals;
        for (int u = t1; u <= t2; ++u) {
            rec.sum_residual += r[u];
            rec.max_residual = std::max(rec.max_residual, r[u]);
        }
        if (cfg.record_residuals) {
            rec.residuals.assign(r.begin() + t1, r.begin() + t2 + 1);
        }
        rec.wallclock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
        report.iterations.push_back(std::move(rec));
        t1 = next.t1;
        t2 = next.t2;

        if (progress) {
            progress(report.iterations.back());
        }
        if (cfg.early_stop) {
            bool stop = false;
            try {
                stop = cfg.early_stop(report, st);
            } catch (const std::exception& e) {
                throw Error("early-stop hook failed at iteration " + std::to_string(s) + ": " + e.what());
            }
            if (stop) {
                report.status = SolveStatus::EarlyStopped;
                break;
            }
        }
    }
    return result;
}

} // namespace parataa
