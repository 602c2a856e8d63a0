#ifndef PARATAA_TRAJECTORY_FILE_HPP
#define PARATAA_TRAJECTORY_FILE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>

#include "parataa/schedule.hpp"
#include "parataa/triangular_system.hpp"

namespace parataa {

/// Binary trajectory layout (all integers and floats little-endian):
///
///   "PTAA" | version u32 | T u32 | d u32 | fingerprint u64 | seed u64
///   | x_0..x_T as (T+1)*d f64 | xi_0..xi_T as (T+1)*d f64
inline constexpr std::uint32_t kTrajectoryFormatVersion = 1;

/// FNV-1a over T, the beta values and eta.
std::uint64_t schedule_fingerprint(const BetaSchedule& sched, double eta);

void save_trajectory(const TrajectoryState& state, std::uint64_t fingerprint, const std::filesystem::path& path);

struct LoadedTrajectory {
    TrajectoryState state;
    std::uint64_t fingerprint = 0;
};

/// Throws TrajectoryFileError naming the offending field (magic, version,
/// fingerprint, truncated payload). When `expected_fingerprint` is set it is
/// checked before anything else is trusted.
LoadedTrajectory load_trajectory(const std::filesystem::path& path,
                                 std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

} // namespace parataa

#endif
