#ifndef PARATAA_ANDERSON_HPP
#define PARATAA_ANDERSON_HPP

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "parataa/score.hpp"

namespace parataa {

enum class Variant { FP, AA, AA_PLUS, TAA };

std::string_view to_string(Variant v);
/// Accepts "FP", "AA", "AA_PLUS" (or "AA+") and "TAA", case-insensitive.
Variant parse_variant(std::string_view name);

struct AAConfig {
    double lambda = 1e-8; // relative to the mean diagonal of the Gram matrix
    Variant variant = Variant::TAA;
    bool safeguard = true;
};

/// Per-unknown ring buffers of secant pairs (dx, dr) for unknowns 0..T-1.
///
/// Every push appends one column to each unknown in the pushed range, so all
/// unknowns share the same column count depth() = min(capacity, pushes).
/// Columns are ordered oldest first.
class HistoryBuffer {
public:
    HistoryBuffer(int steps, int dim, int capacity);

    int steps() const { return steps_; }
    int dim() const { return dim_; }
    int capacity() const { return capacity_; }
    int depth() const { return depth_; }
    long pushes() const { return pushes_; }

    /// Appends dx[i], dr[i] as the newest column of unknown first + i,
    /// evicting the oldest column once the buffer is full.
    void push(int first, std::span<const Vector> dx, std::span<const Vector> dr);

    /// Zeroes every stored column of unknown u.
    void reset(int u);

    /// d x depth() blocks, oldest column first.
    Eigen::MatrixXd dx_block(int u) const;
    Eigen::MatrixXd dr_block(int u) const;

private:
    int slot(int j) const { return (head_ + j) % capacity_; }

    int steps_;
    int dim_;
    int capacity_;
    int depth_ = 0;
    int head_ = 0;
    long pushes_ = 0;
    std::vector<Eigen::MatrixXd> dx_;
    std::vector<Eigen::MatrixXd> dr_;
};

/// Anderson corrections for the window of unknowns [first, first + R.size()).
///
/// Each routine returns c_t = (X_t + F_t) gamma_t so that the accelerated
/// update is x_t <- x_t - delta_t with delta_t = -R_t + c_t. They differ in
/// how gamma_t is obtained:
///   standard:   (F^T F + l I) gamma = F^T R over the whole window
///   triangular: (F_{t:}^T F_{t:} + l I) gamma_t = F_{t:}^T R_{t:}, suffix rows only
///   upper-cut:  (F^T F + l I) gamma_t = F_{t:}^T R_{t:}, global Gram, suffix right-hand side
/// With an empty history every correction is zero.
std::vector<Vector> aa_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                   double lambda);
std::vector<Vector> taa_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                    double lambda);
std::vector<Vector> aa_plus_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                        double lambda);

/// Dispatches on cfg.variant; FP yields zero corrections.
std::vector<Vector> anderson_corrections(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                         const AAConfig& cfg);

/// Update directions delta_t = -R_t + c_t for the respective rule.
std::vector<Vector> aa_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                             const AAConfig& cfg);
std::vector<Vector> taa_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                              const AAConfig& cfg);
std::vector<Vector> aa_plus_apply(const HistoryBuffer& buf, std::span<const Vector> residual, int first,
                                  const AAConfig& cfg);

/// Replaces the direction of the frontier unknown (all of whose successors
/// are frozen) by the plain fixed-point direction -frontier_residual.
void safeguard(std::span<Vector> delta, int first, int frontier, const Vector& frontier_residual);

} // namespace parataa

#endif
