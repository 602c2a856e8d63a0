#ifndef PARATAA_RUN_CONFIG_HPP
#define PARATAA_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parataa/engine.hpp"
#include "parataa/score.hpp"

namespace parataa {

/// Gaussian mixture parameters. Either explicit weights/means or a seeded
/// random draw (components, mean_scale, mean_seed).
struct MixtureSpec {
    std::vector<double> weights;
    std::vector<Vector> means;
    int components = 3;
    double mean_scale = 1.0;
    std::uint64_t mean_seed = 0;
    double s0_sq = 0.1;
};

struct RunConfig {
    // [schedule]
    int steps = 100;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double eta = 0.0;

    // [model], optional [model.cond]
    int dim = 8;
    MixtureSpec model;
    std::optional<MixtureSpec> cond_model;
    double guidance_scale = 5.0;

    // [solver]
    SolverConfig solver;
    bool require_convergence = false;

    // [run]
    std::uint64_t base_seed = 0;
    int repetitions = 1;
    int threads = 0;
    std::filesystem::path output_dir = "out";
    bool write_trajectory = false;
    std::filesystem::path init_trajectory;

    // [compare]
    std::vector<std::string> compare_variants{"FP", "FP+", "TAA"};
    std::vector<int> fp_plus_orders{1, 2, 4, 8};

    // [sweep]
    std::vector<int> sweep_orders{1, 2, 4, 8};
    std::vector<int> sweep_histories{1, 2, 3};

    /// Checks every module precondition; throws ConfigError.
    void validate() const;
};

/// Parses the sectioned key = value format. `source` names the input in
/// diagnostics, which read "<source>:<line>: <message>".
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");

RunConfig load_run_config(const std::filesystem::path& path);

} // namespace parataa

#endif
