#ifndef PARATAA_TRIANGULAR_SYSTEM_HPP
#define PARATAA_TRIANGULAR_SYSTEM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "parataa/schedule.hpp"
#include "parataa/score.hpp"
#include "parataa/thread_pool.hpp"

namespace parataa {

/// Unknowns x_0..x_{T-1}, the fixed terminal x_T = xi_T, the noise bank and a
/// per-step cache of score values.
///
/// Indexing: x[u] and xi[u] for u = 0..T; eps[t] caches eps(x_t, t) for
/// t = 1..T (slot 0 unused); frozen[u] for the unknowns u = 0..T-1.
struct TrajectoryState {
    int steps = 0;
    int dim = 0;
    std::uint64_t seed = 0;
    std::vector<Vector> x;
    std::vector<Vector> xi;
    std::vector<Vector> eps;
    std::vector<bool> eps_valid;
    std::vector<bool> frozen;
    int iteration = 0;

    /// Draws xi_0..xi_T from a standard normal seeded by `seed`, then the
    /// initial unknowns x_0..x_{T-1} from the same stream; x_T = xi_T.
    static TrajectoryState random(int steps, int dim, std::uint64_t seed);

    /// Zero unknowns, x_T = xi_T, nothing cached.
    static TrajectoryState from_noise(std::vector<Vector> xi, std::uint64_t seed = 0);

    void invalidate_eps();
};

/// Squared residuals r_0..r_{T-1} of the first-order equations.
using ResidualVector = std::vector<double>;

/// Runs the autoregressive sampler from x_T = xi_T down to x_0 using exactly
/// T score evaluations. The result has a fully populated score cache.
TrajectoryState sequential_solve(const CoefficientTable& coeffs, const ScoreModel& model,
                                 const std::vector<Vector>& xi, std::uint64_t seed = 0);

/// Evaluates the score at steps [first, last] in one batch and stores the
/// results in the cache. Returns the number of evaluations performed.
int refresh_eps(TrajectoryState& state, const ScoreModel& model, int first, int last, const ThreadPool& pool);

/// Right-hand side of equation t (1..T) in the order-k system, i.e. the
/// value F^{(k)}_{t-1} that x_{t-1} must equal. Reads scores from the cache
/// for steps t..t_k with t_k = min(t+k-1, horizon); sums run in ascending
/// step order. A horizon below T treats x_horizon as the terminal value of
/// the lower subsystem (horizon < 0 means T).
Vector f_order_k(int t, const TrajectoryState& state, const CoefficientTable& coeffs, int k, int horizon = -1);

/// r_{t-1} = || x_{t-1} - F^{(1)}_{t-1} ||^2 for t = 1..T.
ResidualVector residuals(const TrajectoryState& state, const CoefficientTable& coeffs);

/// Residual of a single unknown u (0..T-1).
double residual_at(int u, const TrajectoryState& state, const CoefficientTable& coeffs);

/// One Jacobi sweep over unknowns [first, last]: x_u <- F^{(k)}_u(old state).
/// Frozen unknowns are left unchanged. The score cache must already hold
/// values for every step read.
TrajectoryState fixed_point_step(const TrajectoryState& state, const CoefficientTable& coeffs, int k, int first,
                                 int last, const ThreadPool& pool);

/// max_u || x_u - F^{(k)}_u(x) ||. Evaluates any missing cached score values.
double verify_equivalence(TrajectoryState& trajectory, const CoefficientTable& coeffs, const ScoreModel& model,
                          int k, const ThreadPool& pool);

} // namespace parataa

#endif
