#include "parataa/schedule.hpp"

#include <cmath>
#include <string>

#include "parataa/errors.hpp"

namespace parataa {

double BetaSchedule::alpha_bar(int t) const {
    if (t < 0 || t > steps) {
        throw IndexError("alpha_bar: step " + std::to_string(t) + " outside 0.." + std::to_string(steps));
    }
    return t == 0 ? 1.0 : alpha_bars[t - 1];
}

BetaSchedule build_beta_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) {
        throw ScheduleError("beta schedule needs at least one step, got " + std::to_string(steps));
    }
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw ScheduleError("beta schedule requires 0 < beta_start <= beta_end < 1, got [" +
                            std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
    }
    BetaSchedule s;
    s.steps = steps;
    s.betas.resize(steps);
    s.alpha_bars.resize(steps);
    for (int i = 0; i < steps; ++i) {
        s.betas[i] = steps == 1 ? beta_start
                                : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (steps - 1);
    }
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        prod *= 1.0 - s.betas[i];
        s.alpha_bars[i] = prod;
    }
    return s;
}

namespace {

double sigma(double ab_prev, double ab, double eta) {
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

} // namespace

CoefficientTable CoefficientTable::build(const BetaSchedule& sched, double eta, double tau, int dim) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ScheduleError("eta must lie in [0, 1], got " + std::to_string(eta));
    }
    if (!(tau >= 0.0)) {
        throw ScheduleError("tau must be non-negative, got " + std::to_string(tau));
    }
    if (dim < 1) {
        throw ScheduleError("data dimension must be positive, got " + std::to_string(dim));
    }
    const int T = sched.steps;
    CoefficientTable tab;
    tab.steps_ = T;
    tab.dim_ = dim;
    tab.eta_ = eta;
    tab.tau_ = tau;
    tab.a_.resize(T);
    tab.b_.resize(T);
    tab.c_.resize(T);
    tab.noise_scale_.resize(T);
    tab.thresholds_.resize(T);

    for (int t = 1; t <= T; ++t) {
        const double ab_prev = sched.alpha_bar(t - 1);
        const double ab = sched.alpha_bar(t);
        const double sig = sigma(ab_prev, ab, eta);
        const double sig_full = sigma(ab_prev, ab, 1.0);
        double dir = 1.0 - ab_prev - sig * sig;
        if (dir < 0.0) {
            dir = 0.0;
            tab.clamped_ = true;
        }
        tab.a_[t - 1] = std::sqrt(ab_prev / ab);
        tab.b_[t - 1] = std::sqrt(dir) - std::sqrt(ab_prev * (1.0 - ab) / ab);
        tab.c_[t - 1] = eta == 0.0 ? 0.0 : sig;
        tab.noise_scale_[t - 1] = sig_full;
        tab.thresholds_[t - 1] = tau * tau * sig_full * sig_full * dim;
    }

    tab.abar_rows_.resize(T);
    for (int i = 1; i <= T; ++i) {
        auto& row = tab.abar_rows_[i - 1];
        row.resize(T - i + 2);
        row[0] = 1.0; // s = i - 1
        for (int s = i; s <= T; ++s) {
            row[s - i + 1] = row[s - i] * tab.a_[s - 1];
        }
    }
    return tab;
}

double CoefficientTable::a(int t) const {
    if (t < 1 || t > steps_) {
        throw IndexError("a: step " + std::to_string(t) + " outside 1.." + std::to_string(steps_));
    }
    return a_[t - 1];
}

double CoefficientTable::b(int t) const {
    if (t < 1 || t > steps_) {
        throw IndexError("b: step " + std::to_string(t) + " outside 1.." + std::to_string(steps_));
    }
    return b_[t - 1];
}

double CoefficientTable::c(int u) const {
    if (u < 0 || u >= steps_) {
        throw IndexError("c: index " + std::to_string(u) + " outside 0.." + std::to_string(steps_ - 1));
    }
    return c_[u];
}

double CoefficientTable::noise_scale(int u) const {
    if (u < 0 || u >= steps_) {
        throw IndexError("noise_scale: index " + std::to_string(u) + " outside 0.." + std::to_string(steps_ - 1));
    }
    return noise_scale_[u];
}

double CoefficientTable::threshold(int u) const {
    if (u < 0 || u >= steps_) {
        throw IndexError("threshold: index " + std::to_string(u) + " outside 0.." + std::to_string(steps_ - 1));
    }
    return thresholds_[u];
}

double CoefficientTable::abar(int i, int s) const {
    if (i < 1 || i > steps_ || s < 0 || s > steps_) {
        throw IndexError("abar: (" + std::to_string(i) + ", " + std::to_string(s) + ") out of range for T=" +
                         std::to_string(steps_));
    }
    if (s < i) {
        return 1.0;
    }
    return abar_rows_[i - 1][s - i + 1];
}

} // namespace parataa
