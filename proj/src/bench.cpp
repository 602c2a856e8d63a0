#include "parataa/bench.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "parataa/errors.hpp"
#include "parataa/trajectory_file.hpp"

namespace parataa {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::uint64_t> seeds_of(const RunConfig& cfg) {
    std::vector<std::uint64_t> out(cfg.repetitions);
    std::iota(out.begin(), out.end(), cfg.base_seed);
    return out;
}

bool is_fp_plus(const std::string& name) {
    return name == "FP+" || name == "fp+";
}

} // namespace

Problem make_problem(BetaSchedule schedule, double eta, double tau, std::shared_ptr<const ScoreModel> model) {
    Problem p;
    p.coeffs = CoefficientTable::build(schedule, eta, tau, model->dim());
    p.fingerprint = schedule_fingerprint(schedule, eta);
    p.schedule = std::move(schedule);
    p.model = std::move(model);
    return p;
}

GaussianMixtureModel build_mixture(const MixtureSpec& spec, const BetaSchedule& sched, int dim) {
    if (spec.means.empty()) {
        auto g = GaussianMixtureModel::random(sched, dim, spec.components, spec.mean_scale, spec.s0_sq, spec.mean_seed);
        if (spec.weights.empty()) {
            return g;
        }
        return GaussianMixtureModel(sched, spec.weights, g.means(), spec.s0_sq);
    }
    return GaussianMixtureModel(sched, spec.weights, spec.means, spec.s0_sq);
}

Problem build_problem(const RunConfig& cfg) {
    BetaSchedule sched = build_beta_schedule(cfg.steps, cfg.beta_start, cfg.beta_end);
    std::shared_ptr<const ScoreModel> model =
        std::make_shared<GaussianMixtureModel>(build_mixture(cfg.model, sched, cfg.dim));
    if (cfg.cond_model) {
        auto cond = std::make_shared<GaussianMixtureModel>(build_mixture(*cfg.cond_model, sched, cfg.dim));
        model = std::make_shared<GuidedModel>(model, cond, cfg.guidance_scale);
    }
    return make_problem(std::move(sched), cfg.eta, cfg.solver.tau, std::move(model));
}

RunOutcome run_once(const Problem& problem, const SolverConfig& cfg, std::uint64_t seed, const ThreadPool& pool,
                    const TrajectoryState* warm) {
    const int T = problem.coeffs.steps();
    const int d = problem.coeffs.dim();
    TrajectoryState init;
    if (warm) {
        init = init_from_trajectory(*warm, cfg.resolved(T).init_steps, problem.coeffs);
    } else {
        init = TrajectoryState::random(T, d, seed);
    }
    RunOutcome out;
    out.seed = init.seed;
    out.oracle = sequential_solve(problem.coeffs, *problem.model, init.xi, init.seed);
    out.solve = solve_parallel(cfg, problem.coeffs, *problem.model, std::move(init), pool);
    const Vector& ref = out.oracle.x[0];
    out.l2 = (out.solve.state.x[0] - ref).norm();
    const double scale = ref.norm();
    out.relative_l2 = scale > 0.0 ? out.l2 / scale : out.l2;
    return out;
}

std::uint64_t trajectory_hash(const TrajectoryState& state) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& v : state.x) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const auto bits = std::bit_cast<std::uint64_t>(v[i]);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

std::string iteration_csv(const SolveReport& report) {
    std::string out = "iteration,t1,t2,sum_residual,max_residual,evals,wallclock_ms\n";
    for (const auto& r : report.iterations) {
        out += std::to_string(r.iteration) + "," + std::to_string(r.t1) + "," + std::to_string(r.t2) + "," +
               fmt17(r.sum_residual) + "," + fmt17(r.max_residual) + "," + std::to_string(r.evals) + "," +
               fmt17(static_cast<double>(r.wallclock_ns) / 1e6) + "\n";
    }
    return out;
}

nlohmann::json outcome_json(const RunOutcome& o) {
    const auto& rep = o.solve.report;
    return {
        {"seed", o.seed},
        {"status", std::string(to_string(rep.status))},
        {"iterations", rep.parallel_steps()},
        {"iteration_evals", rep.iteration_evals()},
        {"setup_evals", rep.setup_evals},
        {"final_check_evals", rep.final_check_evals},
        {"total_evals", rep.total_evals()},
        {"sequential_evals", o.oracle.steps},
        {"l2_to_oracle", o.l2},
        {"relative_l2_to_oracle", o.relative_l2},
    };
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw Error("cannot write " + path.string());
    }
    f << content;
}

int run_command(const RunConfig& cfg, const ThreadPool& pool, std::ostream& log) {
    const Problem problem = build_problem(cfg);
    std::optional<LoadedTrajectory> warm;
    if (!cfg.init_trajectory.empty()) {
        warm = load_trajectory(cfg.init_trajectory, problem.fingerprint);
        if (warm->state.dim != problem.coeffs.dim()) {
            throw ConfigError("init_trajectory has dimension " + std::to_string(warm->state.dim) +
                              ", config has dim=" + std::to_string(problem.coeffs.dim()));
        }
    }
    std::filesystem::create_directories(cfg.output_dir);
    nlohmann::json runs = nlohmann::json::array();
    bool all_converged = true;
    for (const auto seed : seeds_of(cfg)) {
        const RunOutcome o = run_once(problem, cfg.solver, seed, pool, warm ? &warm->state : nullptr);
        const std::string tag = std::to_string(o.seed);
        write_text(cfg.output_dir / ("report_seed" + tag + ".csv"), iteration_csv(o.solve.report));
        if (cfg.write_trajectory) {
            save_trajectory(o.solve.state, problem.fingerprint, cfg.output_dir / ("trajectory_seed" + tag + ".ptaa"));
        }
        all_converged = all_converged && o.solve.report.status == SolveStatus::Converged;
        log << "seed " << o.seed << ": " << to_string(o.solve.report.status) << " after "
            << o.solve.report.parallel_steps() << " iterations, " << o.solve.report.total_evals()
            << " evals, relative L2 to sequential " << o.relative_l2 << "\n";
        runs.push_back(outcome_json(o));
        if (warm) {
            break; // a warm start fixes the noise bank, so extra seeds would repeat the same run
        }
    }
    const auto& s = cfg.solver;
    nlohmann::json summary = {
        {"variant", std::string(to_string(s.variant))},
        {"order", s.order},
        {"history", s.history},
        {"tau", s.tau},
        {"lambda", s.lambda},
        {"window", s.resolved(cfg.steps).window},
        {"steps", cfg.steps},
        {"eta", cfg.eta},
        {"dim", cfg.dim},
        {"runs", runs},
    };
    write_text(cfg.output_dir / "summary.json", summary.dump(2) + "\n");
    if (cfg.require_convergence && !all_converged) {
        return 3;
    }
    return 0;
}

std::vector<CompareRow> compare(const RunConfig& cfg, const std::vector<std::string>& variants,
                                const ThreadPool& pool) {
    const Problem problem = build_problem(cfg);
    const auto seeds = seeds_of(cfg);
    const SolverConfig base = cfg.solver.resolved(cfg.steps);
    std::vector<CompareRow> rows;

    auto run_rows = [&](const std::string& name, const SolverConfig& sc) {
        std::vector<CompareRow> out;
        for (const auto seed : seeds) {
            const RunOutcome o = run_once(problem, sc, seed, pool);
            CompareRow row;
            row.variant = name;
            row.seed = seed;
            row.order = sc.order;
            row.history = sc.effective_variant() == Variant::FP ? 1 : sc.history;
            row.status = o.solve.report.status;
            row.iterations = o.solve.report.parallel_steps();
            row.evals = o.solve.report.total_evals();
            row.relative_l2 = o.relative_l2;
            out.push_back(row);
        }
        return out;
    };

    for (const auto& name : variants) {
        if (is_fp_plus(name)) {
            std::vector<CompareRow> best;
            double best_mean = std::numeric_limits<double>::infinity();
            for (int k : cfg.fp_plus_orders) {
                SolverConfig sc = base;
                sc.variant = Variant::FP;
                sc.order = k;
                auto candidate = run_rows("FP+", sc);
                double mean = 0.0;
                for (const auto& r : candidate) {
                    mean += r.iterations;
                }
                mean /= static_cast<double>(candidate.size());
                if (mean < best_mean) {
                    best_mean = mean;
                    best = std::move(candidate);
                }
            }
            rows.insert(rows.end(), best.begin(), best.end());
            continue;
        }
        SolverConfig sc = base;
        sc.variant = parse_variant(name);
        if (sc.variant == Variant::FP) {
            sc.order = sc.window;
        }
        auto r = run_rows(std::string(to_string(sc.variant)), sc);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

std::string comparison_csv(const std::vector<CompareRow>& rows) {
    std::string out = "variant,seed,order,history,status,iterations,evals,relative_l2_to_oracle\n";
    for (const auto& r : rows) {
        out += r.variant + "," + std::to_string(r.seed) + "," + std::to_string(r.order) + "," +
               std::to_string(r.history) + "," + std::string(to_string(r.status)) + "," +
               std::to_string(r.iterations) + "," + std::to_string(r.evals) + "," + fmt17(r.relative_l2) + "\n";
    }
    return out;
}

std::vector<SweepCell> sweep(const RunConfig& cfg, const std::vector<int>& orders, const std::vector<int>& histories,
                             const ThreadPool& pool) {
    if (orders.empty() || histories.empty()) {
        throw ConfigError("sweep grids must be non-empty");
    }
    const Problem problem = build_problem(cfg);
    const auto seeds = seeds_of(cfg);
    std::vector<SweepCell> cells;
    for (int k : orders) {
        for (int m : histories) {
            SolverConfig sc = cfg.solver;
            sc.order = k;
            sc.history = m;
            if (sc.variant == Variant::FP) {
                sc.variant = Variant::TAA;
            }
            sc.validate(cfg.steps, cfg.dim);
            SweepCell cell;
            cell.order = k;
            cell.history = m;
            for (const auto seed : seeds) {
                const RunOutcome o = run_once(problem, sc, seed, pool);
                cell.iterations.push_back(o.solve.report.parallel_steps());
                cell.trajectory_hashes.push_back(trajectory_hash(o.solve.state));
                cell.mean_evals += static_cast<double>(o.solve.report.total_evals());
                if (o.solve.report.status == SolveStatus::Converged) {
                    ++cell.converged;
                }
            }
            cell.mean_iterations =
                std::accumulate(cell.iterations.begin(), cell.iterations.end(), 0.0) / static_cast<double>(seeds.size());
            cell.mean_evals /= static_cast<double>(seeds.size());
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "order,history,mean_iterations,mean_evals,converged_runs,runs\n";
    for (const auto& c : cells) {
        out += std::to_string(c.order) + "," + std::to_string(c.history) + "," + fmt17(c.mean_iterations) + "," +
               fmt17(c.mean_evals) + "," + std::to_string(c.converged) + "," + std::to_string(c.iterations.size()) +
               "\n";
    }
    return out;
}

} // namespace parataa
