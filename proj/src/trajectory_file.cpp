#include "parataa/trajectory_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "parataa/errors.hpp"

namespace parataa {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'T', 'A', 'A'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 4 + 8 + 8;

template <typename U>
void put(std::vector<unsigned char>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<unsigned char>(value >> (8 * i)));
    }
}

template <typename U>
U get(const std::vector<unsigned char>& in, std::size_t offset) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(in[offset + i]) << (8 * i);
    }
    return value;
}

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) {
            h ^= (v >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
};

} // namespace

std::uint64_t schedule_fingerprint(const BetaSchedule& sched, double eta) {
    Fnv1a f;
    f.add(static_cast<std::uint32_t>(sched.steps), 4);
    for (double b : sched.betas) {
        f.add(std::bit_cast<std::uint64_t>(b), 8);
    }
    f.add(std::bit_cast<std::uint64_t>(eta), 8);
    return f.h;
}

void save_trajectory(const TrajectoryState& state, std::uint64_t fingerprint, const std::filesystem::path& path) {
    const auto n = static_cast<std::size_t>(state.steps + 1) * state.dim;
    std::vector<unsigned char> out;
    out.reserve(kHeaderSize + 2 * n * 8);
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put<std::uint32_t>(out, kTrajectoryFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.steps));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.dim));
    put<std::uint64_t>(out, fingerprint);
    put<std::uint64_t>(out, state.seed);
    for (const auto* bank : {&state.x, &state.xi}) {
        for (const auto& v : *bank) {
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v[i]));
            }
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw TrajectoryFileError("cannot open " + path.string() + " for writing");
    }
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw TrajectoryFileError("write failed for " + path.string());
    }
}

LoadedTrajectory load_trajectory(const std::filesystem::path& path, std::optional<std::uint64_t> expected_fingerprint) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw TrajectoryFileError("cannot open " + path.string());
    }
    const std::vector<unsigned char> in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::string where = path.string() + ": ";
    if (in.size() >= 4 && std::memcmp(in.data(), kMagic.data(), 4) != 0) {
        throw TrajectoryFileError(where + "bad magic (expected \"PTAA\")");
    }
    if (in.size() < kHeaderSize) {
        throw TrajectoryFileError(where + "truncated header (" + std::to_string(in.size()) + " bytes)");
    }
    const auto version = get<std::uint32_t>(in, 4);
    if (version != kTrajectoryFormatVersion) {
        throw TrajectoryFileError(where + "unsupported version " + std::to_string(version));
    }
    const auto steps = get<std::uint32_t>(in, 8);
    const auto dim = get<std::uint32_t>(in, 12);
    const auto fingerprint = get<std::uint64_t>(in, 16);
    const auto seed = get<std::uint64_t>(in, 24);
    if (expected_fingerprint && *expected_fingerprint != fingerprint) {
        throw TrajectoryFileError(where + "schedule fingerprint mismatch (file T=" + std::to_string(steps) +
                                  ", eta/betas differ or T differs)");
    }
    if (steps < 1 || dim < 1) {
        throw TrajectoryFileError(where + "invalid shape T=" + std::to_string(steps) + ", d=" + std::to_string(dim));
    }
    const auto n = static_cast<std::uint64_t>(steps + 1) * dim;
    const auto expected = kHeaderSize + 2 * n * 8;
    if (in.size() != expected) {
        throw TrajectoryFileError(where + (in.size() < expected ? "truncated payload" : "trailing bytes after payload") +
                                  ": expected " + std::to_string(expected) + " bytes, found " +
                                  std::to_string(in.size()));
    }
    std::size_t offset = kHeaderSize;
    auto read_bank = [&] {
        std::vector<Vector> bank(steps + 1, Vector(dim));
        for (auto& v : bank) {
            for (std::uint32_t i = 0; i < dim; ++i) {
                v[i] = std::bit_cast<double>(get<std::uint64_t>(in, offset));
                offset += 8;
            }
        }
        return bank;
    };
    std::vector<Vector> x = read_bank();
    std::vector<Vector> xi = read_bank();
    LoadedTrajectory out;
    out.state = TrajectoryState::from_noise(std::move(xi), seed);
    for (std::uint32_t u = 0; u <= steps; ++u) {
        out.state.x[u] = x[u];
    }
    out.fingerprint = fingerprint;
    return out;
}

} // namespace parataa
