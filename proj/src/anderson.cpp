#include "parataa/anderson.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "parataa/errors.hpp"

namespace parataa {

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::FP:
        return "FP";
    case Variant::AA:
        return "AA";
    case Variant::AA_PLUS:
        return "AA_PLUS";
    case Variant::TAA:
        return "TAA";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    std::string up;
    for (char ch : name) {
        up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    if (up == "FP") {
        return Variant::FP;
    }
    if (up == "AA") {
        return Variant::AA;
    }
    if (up == "AA_PLUS" || up == "AA+") {
        return Variant::AA_PLUS;
    }
    if (up == "TAA") {
        return Variant::TAA;
    }
    throw ConfigError("unknown variant '" + std::string(name) + "'");
}

HistoryBuffer::HistoryBuffer(int steps, int dim, int capacity) : steps_(steps), dim_(dim), capacity_(capacity) {
    if (steps < 1 || dim < 1 || capacity < 0) {
        throw ShapeError("history buffer needs steps >= 1, dim >= 1, capacity >= 0");
    }
    dx_.assign(steps, Eigen::MatrixXd::Zero(dim, capacity));
    dr_.assign(steps, Eigen::MatrixXd::Zero(dim, capacity));
}

void HistoryBuffer::push(int first, std::span<const Vector> dx, std::span<const Vector> dr) {
    if (dx.size() != dr.size()) {
        throw ShapeError("history push: " + std::to_string(dx.size()) + " dx blocks vs " +
                         std::to_string(dr.size()) + " dr blocks");
    }
    const int n = static_cast<int>(dx.size());
    if (first < 0 || first + n > steps_) {
        throw ShapeError("history push: window [" + std::to_string(first) + ", " + std::to_string(first + n - 1) +
                         "] outside 0.." + std::to_string(steps_ - 1));
    }
    for (int i = 0; i < n; ++i) {
        if (dx[i].size() != dim_ || dr[i].size() != dim_) {
            throw ShapeError("history push: block " + std::to_string(i) + " has wrong dimension");
        }
    }
    ++pushes_;
    if (capacity_ == 0) {
        return;
    }
    int target;
    if (depth_ < capacity_) {
        target = slot(depth_);
        ++depth_;
    } else {
        target = head_;
        head_ = (head_ + 1) % capacity_;
    }
    for (int i = 0; i < n; ++i) {
        dx_[first + i].col(target) = dx[i];
        dr_[first + i].col(target) = dr[i];
    }
}

void HistoryBuffer::reset(int u) {
    dx_.at(u).setZero();
    dr_.at(u).setZero();
}

Eigen::MatrixXd HistoryBuffer::dx_block(int u) const {
    Eigen::MatrixXd out(dim_, depth_);
    for (int j = 0; j < depth_; ++j) {
        out.col(j) = dx_.at(u).col(slot(j));
    }
    return out;
}

Eigen::MatrixXd HistoryBuffer::dr_block(int u) const {
    Eigen::MatrixXd out(dim_, depth_);
    for (int j = 0; j < depth_; ++j) {
        out.col(j) = dr_.at(u).col(slot(j));
    }
    return out;
}

namespace {

/// Solves (gram + lambda * mean(diag) * I) gamma = rhs.
///
/// Columns with an all-zero diagonal entry carry no information and get
/// gamma_j = 0. With lambda = 0 a numerically singular system is an error.
class GramSolver {
public:
    GramSolver(const Eigen::MatrixXd& gram, double lambda, long iteration) : m_(static_cast<int>(gram.rows())) {
        for (int j = 0; j < m_; ++j) {
            if (gram(j, j) > 0.0) {
                active_.push_back(j);
            }
        }
        const int n = static_cast<int>(active_.size());
        if (n == 0) {
            return;
        }
        Eigen::MatrixXd a(n, n);
        double mean_diag = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                a(i, j) = gram(active_[i], active_[j]);
            }
            mean_diag += a(i, i);
        }
        mean_diag /= n;
        a.diagonal().array() += lambda * mean_diag;
        ldlt_.compute(a);
        const auto d = ldlt_.vectorD().cwiseAbs();
        if (ldlt_.info() != Eigen::Success || (lambda == 0.0 && d.minCoeff() <= 1e-12 * d.maxCoeff())) {
            throw RankDeficiencyError("Anderson normal equations are singular at iteration " +
                                      std::to_string(iteration) + " (set lambda > 0)");
        }
    }

    Vector solve(const Vector& rhs) const {
        Vector gamma = Vector::Zero(m_);
        if (active_.empty()) {
            return gamma;
        }
        Vector r(active_.size());
        for (std::size_t i = 0; i < active_.size(); ++i) {
            r[i] = rhs[active_[i]];
        }
        const Vector g = ldlt_.solve(r);
        for (std::size_t i = 0; i < active_.size(); ++i) {
            gamma[active_[i]] = g[i];
        }
        return gamma;
    }

private:
    int m_;
    std::vector<int> active_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

struct Blocks {
    std::vector<Eigen::MatrixXd> x_plus_f; // X_t + F_t
    std::vector<Eigen::MatrixXd> f;
};

Blocks gather(const HistoryBuffer& buf, std::span<const Vector> residual, int first) {
    const int n = static_cast<int>(residual.size());
    if (first < 0 || first + n > buf.steps()) {
        throw ShapeError("anderson: window [" + std::to_string(first) + ", " + std::to_string(first + n - 1) +
                         "] outside the history buffer");
    }
    Blocks b;
    b.x_plus_f.reserve(n);
    b.f.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (residual[i].size() != buf.dim()) {
            throw ShapeError("anderson: residual block " + std::to_string(i) + " has wrong dimension");
        }
        b.f.push_back(buf.dr_block(first + i));
        b.x_plus_f.push_back(buf.dx_block(first + i) + b.f.back());
    }
    return b;
}

std::vector<Vector> zeros(std::span<const Vector> residual) {
    std::vector<Vector> out;
    out.reserve(residual.size());
    for (const auto& r : residual) {
        out.push_back(Vector::Zero(r.size()));
    }
    return out;
}

std::vector<Vector> to_delta(std::vector<Vector> corrections, std::span<const Vector> residual) {
    for (std::size_t i = 0; i < corrections.size(); ++i) {
        corrections[i] -= residual[i];
    }
    return corrections;
}

} // namespace

std::vector<Vector> aa_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                   double lambda) {
    const int m = buf.depth();
    if (m == 0) {
        return zeros(residual);
    }
    const Blocks b = gather(buf, residual, first);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Vector rhs = Vector::Zero(m);
    for (std::size_t i = 0; i < residual.size(); ++i) {
        gram.noalias() += b.f[i].transpose() * b.f[i];
        rhs.noalias() += b.f[i].transpose() * residual[i];
    }
    const Vector gamma = GramSolver(gram, lambda, buf.pushes()).solve(rhs);
    std::vector<Vector> out(residual.size());
    for (std::size_t i = 0; i < residual.size(); ++i) {
        out[i] = b.x_plus_f[i] * gamma;
    }
    return out;
}

std::vector<Vector> taa_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                    double lambda) {
    const int m = buf.depth();
    if (m == 0) {
        return zeros(residual);
    }
    const Blocks b = gather(buf, residual, first);
    std::vector<Vector> out(residual.size());
    // Suffix sums over the window, accumulated from the top unknown down.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Vector rhs = Vector::Zero(m);
    for (std::size_t i = residual.size(); i-- > 0;) {
        gram.noalias() += b.f[i].transpose() * b.f[i];
        rhs.noalias() += b.f[i].transpose() * residual[i];
        const Vector gamma = GramSolver(gram, lambda, buf.pushes()).solve(rhs);
        out[i] = b.x_plus_f[i] * gamma;
    }
    return out;
}

std::vector<Vector> aa_plus_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                        double lambda) {
    const int m = buf.depth();
    if (m == 0) {
        return zeros(residual);
    }
    const Blocks b = gather(buf, residual, first);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < residual.size(); ++i) {
        gram.noalias() += b.f[i].transpose() * b.f[i];
    }
    const GramSolver solver(gram, lambda, buf.pushes());
    std::vector<Vector> out(residual.size());
    Vector rhs = Vector::Zero(m);
    for (std::size_t i = residual.size(); i-- > 0;) {
        rhs.noalias() += b.f[i].transpose() * residual[i];
        out[i] = b.x_plus_f[i] * solver.solve(rhs);
    }
    return out;
}

std::vector<Vector> anderson_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                         const AAConfig& cfg) {
    if (cfg.lambda < 0.0) {
        throw ConfigError("lambda must be non-negative");
    }
    switch (cfg.variant) {
    case Variant::FP:
        return zeros(residual);
    case Variant::AA:
        return aa_corrections(buf, residual, first, cfg.lambda);
    case Variant::AA_PLUS:
        return aa_plus_corrections(buf, residual, first, cfg.lambda);
    case Variant::TAA:
        return taa_corrections(buf, residual, first, cfg.lambda);
    }
    return zeros(residual);
}

std::vector<Vector> aa_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                             const AAConfig& cfg) {
    return to_delta(aa_corrections(buf, residual, first, cfg.lambda), residual);
}

std::vector<Vector> taa_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                              const AAConfig& cfg) {
    return to_delta(taa_corrections(buf, residual, first, cfg.lambda), residual);
}

std::vector<Vector> aa_plus_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                  const AAConfig& cfg) {
    return to_delta(aa_plus_corrections(buf, residual, first, cfg.lambda), residual);
}

void safeguard(std::span<Vector> delta, int first, int frontier, const Vector& frontier_residual) {
    const int i = frontier - first;
    if (i < 0 || i >= static_cast<int>(delta.size())) {
        throw IndexError("safeguard: frontier " + std::to_string(frontier) + " outside the update window");
    }
    delta[i] = -frontier_residual;
}

} // namespace parataa
