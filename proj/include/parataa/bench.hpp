#ifndef PARATAA_BENCH_HPP
#define PARATAA_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parataa/engine.hpp"
#include "parataa/run_config.hpp"
#include "parataa/schedule.hpp"
#include "parataa/score.hpp"

namespace parataa {

/// Everything a solve needs besides the solver settings.
struct Problem {
    BetaSchedule schedule;
    CoefficientTable coeffs;
    std::shared_ptr<const ScoreModel> model;
    std::uint64_t fingerprint = 0;
};

Problem make_problem(BetaSchedule schedule, double eta, double tau, std::shared_ptr<const ScoreModel> model);

/// Schedule, coefficient table and (optionally guided) mixture model from a run config.
Problem build_problem(const RunConfig& cfg);

GaussianMixtureModel build_mixture(const MixtureSpec& spec, const BetaSchedule& sched, int dim);

struct RunOutcome {
    std::uint64_t seed = 0;
    SolveResult solve;
    TrajectoryState oracle;
    double l2 = 0.0;          // || x_0 - x_0^seq ||
    double relative_l2 = 0.0; // l2 / || x_0^seq ||
};

/// Sequential oracle plus one parallel solve sharing the same noise bank.
/// Cold starts draw noise and initial unknowns from `seed`; warm starts take
/// both from `warm` and freeze unknowns >= cfg.init_steps.
RunOutcome run_once(const Problem& problem, const SolverConfig& cfg, std::uint64_t seed, const ThreadPool& pool,
                    const TrajectoryState* warm = nullptr);

/// Hash of the bit patterns of x_0..x_T.
std::uint64_t trajectory_hash(const TrajectoryState& state);

/// Per-iteration CSV: iteration,t1,t2,sum_residual,max_residual,evals,wallclock_ms.
/// Floats use 17 significant digits; wallclock is the last column.
std::string iteration_csv(const SolveReport& report);

nlohmann::json outcome_json(const RunOutcome& outcome);

/// Executes the `run` subcommand; returns the process exit code.
int run_command(const RunConfig& cfg, const ThreadPool& pool, std::ostream& log);

struct CompareRow {
    std::string variant;
    std::uint64_t seed = 0;
    int order = 0;
    int history = 0;
    SolveStatus status = SolveStatus::MaxIters;
    int iterations = 0;
    long evals = 0;
    double relative_l2 = 0.0;
};

/// One row per (variant, seed). "FP" uses order k = w, "FP+" the order from
/// cfg.fp_plus_orders with the lowest mean iteration count, the Anderson
/// variants use the configured order and history.
std::vector<CompareRow> compare(const RunConfig& cfg, const std::vector<std::string>& variants,
                                const ThreadPool& pool);
std::string comparison_csv(const std::vector<CompareRow>& rows);

struct SweepCell {
    int order = 0;
    int history = 0;
    double mean_iterations = 0.0;
    double mean_evals = 0.0;
    int converged = 0;
    std::vector<int> iterations;               // per seed
    std::vector<std::uint64_t> trajectory_hashes; // per seed
};

/// Mean iterations-to-criterion over cfg.repetitions seeds for every (k, m).
std::vector<SweepCell> sweep(const RunConfig& cfg, const std::vector<int>& orders, const std::vector<int>& histories,
                             const ThreadPool& pool);
std::string sweep_csv(const std::vector<SweepCell>& cells);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);

} // namespace parataa

#endif
