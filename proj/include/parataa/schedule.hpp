#ifndef PARATAA_SCHEDULE_HPP
#define PARATAA_SCHEDULE_HPP

#include <vector>

namespace parataa {

/// Discrete variance-preserving noise schedule with 1-based steps t = 1..T.
struct BetaSchedule {
    int steps = 0;
    std::vector<double> betas;      // betas[t-1] = beta_t
    std::vector<double> alpha_bars; // alpha_bars[t-1] = prod_{j<=t} (1 - beta_j)

    /// Cumulative product at step t in 0..T, with alpha_bar(0) == 1.
    double alpha_bar(int t) const;
};

/// Linearly spaced betas from beta_start to beta_end inclusive.
BetaSchedule build_beta_schedule(int steps, double beta_start, double beta_end);

/// Per-step coefficients of the first-order update
///
///   x_{t-1} = a_t x_t + b_t eps(x_t, t) + c_{t-1} xi_{t-1}
///
/// for the eta-family of samplers (eta = 0 deterministic, eta = 1 ancestral).
/// Also holds the per-equation stopping thresholds and the cumulative products
/// abar(i, s) = a_i * ... * a_s used by the higher-order equations.
class CoefficientTable {
public:
    static CoefficientTable build(const BetaSchedule& sched, double eta, double tau, int dim);

    int steps() const { return steps_; }
    int dim() const { return dim_; }
    double eta() const { return eta_; }
    double tau() const { return tau_; }

    double a(int t) const;           // t in 1..T
    double b(int t) const;           // t in 1..T
    double c(int u) const;           // u in 0..T-1
    double noise_scale(int u) const; // u in 0..T-1, eta = 1 value of c
    double threshold(int u) const;   // u in 0..T-1

    const std::vector<double>& thresholds() const { return thresholds_; }

    /// prod_{j=i}^{s} a_j, equal to 1 when s < i. Requires 1 <= i <= T, 0 <= s <= T.
    double abar(int i, int s) const;

    /// True when 1 - abar_{t-1} - sigma_t^2 went negative and was clamped to zero.
    bool clamped() const { return clamped_; }

private:
    int steps_ = 0;
    int dim_ = 0;
    double eta_ = 0.0;
    double tau_ = 0.0;
    bool clamped_ = false;
    std::vector<double> a_, b_, c_, noise_scale_, thresholds_;
    // Row i-1 holds abar(i, s) for s = i-1..T, built by a running product so
    // that abar(i, s) * a_{s+1} == abar(i, s+1) exactly.
    std::vector<std::vector<double>> abar_rows_;
};

} // namespace parataa

#endif
