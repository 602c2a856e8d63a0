#ifndef PARATAA_ENGINE_HPP
#define PARATAA_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "parataa/anderson.hpp"
#include "parataa/schedule.hpp"
#include "parataa/score.hpp"
#include "parataa/thread_pool.hpp"
#include "parataa/triangular_system.hpp"

namespace parataa {

struct SolveReport;

/// Returns true to stop the solve before the residual criterion is met.
using EarlyStopHook = std::function<bool(const SolveReport&, const TrajectoryState&)>;

struct SolverConfig {
    int order = 1;       // k, clamped to T by validate() callers
    int history = 3;     // m: iterates kept, i.e. m - 1 secant pairs; m <= 1 means plain FP
    double tau = 1e-3;
    double lambda = 1e-8;
    int window = 0;      // w; 0 means T
    int max_iters = 0;   // s_max; 0 means 4 T
    int init_steps = -1; // T_init; negative means T
    Variant variant = Variant::TAA;
    bool safeguard = true;
    std::uint64_t seed = 0;
    bool record_residuals = false;
    EarlyStopHook early_stop;

    /// Copy with the 0/negative defaults resolved against T.
    SolverConfig resolved(int steps) const;

    /// Throws ConfigError if the resolved config is invalid for (T, d).
    void validate(int steps, int dim) const;

    /// Variant actually run: FP whenever no secant pairs are kept.
    Variant effective_variant() const;
};

enum class SolveStatus { Converged, MaxIters, EarlyStopped };

std::string_view to_string(SolveStatus s);

/// One parallel iteration. [t1, t2] is the window of unknowns whose
/// residuals were evaluated; `evals` = t2 - t1 + 1 score evaluations.
struct IterationRecord {
    int iteration = 0;
    int t1 = 0;
    int t2 = 0;
    double sum_residual = 0.0;
    double max_residual = 0.0;
    int evals = 0;
    std::int64_t wallclock_ns = 0;
    std::vector<double> residuals; // only when SolverConfig::record_residuals
};

struct SolveReport {
    std::vector<IterationRecord> iterations;
    SolveStatus status = SolveStatus::MaxIters;
    int setup_evals = 0;       // scores evaluated before the first pass
    int final_check_evals = 0; // the pass that found every residual under threshold

    /// Parallel inference steps that updated the trajectory.
    int parallel_steps() const { return static_cast<int>(iterations.size()); }
    long iteration_evals() const;
    long total_evals() const { return setup_evals + iteration_evals() + final_check_evals; }
};

struct SolveResult {
    TrajectoryState state;
    SolveReport report;
};

using ProgressCallback = std::function<void(const IterationRecord&)>;

/// eps_u = tau^2 * noise_scale_u^2 * d for every unknown.
std::vector<double> stopping_thresholds(const CoefficientTable& coeffs, double tau);

struct WindowUpdate {
    bool converged = false; // no residual above threshold in [0, t2]
    int t1 = 0;
    int t2 = -1;
};

/// Moves the frontier t2 down to the largest unknown in [t1, t2] whose
/// residual exceeds its threshold, freezes everything above it and sets
/// t1 = max(0, t2 - w + 1). `residuals` and `thresholds` are indexed by unknown.
WindowUpdate update_window(std::span<const double> residuals, std::span<const double> thresholds, int t1, int t2,
                           int window, std::vector<bool>& frozen);

/// Warm start from an existing trajectory: copies x and xi and freezes the
/// unknowns u >= init_steps.
TrajectoryState init_from_trajectory(const TrajectoryState& existing, int init_steps, const CoefficientTable& coeffs);

/// Parallel sampling with (triangular) Anderson acceleration and a sliding window.
SolveResult solve_parallel(const SolverConfig& cfg, const CoefficientTable& coeffs, const ScoreModel& model,
                           TrajectoryState init, const ThreadPool& pool, const ProgressCallback& progress = {});

} // namespace parataa

#endif
