#ifndef PARATAA_SCORE_HPP
#define PARATAA_SCORE_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "parataa/errors.hpp"
#include "parataa/schedule.hpp"
#include "parataa/thread_pool.hpp"

namespace parataa {

using Vector = Eigen::VectorXd;

/// Noise-prediction function eps(x, t) for steps t = 1..T.
///
/// Implementations must be pure: the same (x, t) always yields the same bits.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;

    virtual int dim() const = 0;
    virtual int steps() const = 0;

    /// Raw prediction. Arguments are already validated by eval_eps.
    virtual Vector predict(const Vector& x, int t) const = 0;
};

/// Validated single evaluation.
Vector eval_eps(const ScoreModel& model, const Vector& x, int t);

struct EvalPoint {
    const Vector* x;
    int t;
};

/// Raised by eval_batch; index() names the first failing point.
class BatchEvalError : public Error {
public:
    BatchEvalError(std::size_t index, const std::string& what);
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Evaluates every point, possibly concurrently. Output i is bitwise equal to
/// eval_eps(model, *points[i].x, points[i].t) for any pool size.
std::vector<Vector> eval_batch(const ScoreModel& model, std::span<const EvalPoint> points, const ThreadPool& pool);

/// eps_uncond + scale * (eps_cond - eps_uncond)
Vector apply_guidance(const Vector& eps_uncond, const Vector& eps_cond, double scale);

/// Exact noise predictor for data drawn from an isotropic Gaussian mixture
/// sum_k w_k N(mu_k, s0^2 I) pushed through the variance-preserving forward
/// process. At step t the marginal is sum_k w_k N(sqrt(abar_t) mu_k, v_t I)
/// with v_t = abar_t s0^2 + 1 - abar_t, and
///
///   eps(x, t) = sqrt(1 - abar_t) * sum_k gamma_k(x) (x - sqrt(abar_t) mu_k) / v_t.
class GaussianMixtureModel final : public ScoreModel {
public:
    /// Weights must be positive; they are normalized to sum to one.
    GaussianMixtureModel(const BetaSchedule& sched, std::vector<double> weights, std::vector<Vector> means,
                         double s0_sq);

    /// Means drawn from N(0, mean_scale^2 I), weights uniform on [0.5, 1.5] then normalized.
    static GaussianMixtureModel random(const BetaSchedule& sched, int dim, int components, double mean_scale,
                                       double s0_sq, std::uint64_t seed);

    int dim() const override { return dim_; }
    int steps() const override { return static_cast<int>(alpha_bars_.size()); }
    Vector predict(const Vector& x, int t) const override;

    /// Posterior component probabilities at (x, t), via log-sum-exp.
    std::vector<double> responsibilities(const Vector& x, int t) const;

    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vector>& means() const { return means_; }
    double s0_sq() const { return s0_sq_; }

private:
    int dim_;
    std::vector<double> alpha_bars_;
    std::vector<double> weights_;
    std::vector<double> log_weights_;
    std::vector<Vector> means_;
    double s0_sq_;
};

/// Classifier-free guidance as a model: uncond + scale * (cond - uncond).
class GuidedModel final : public ScoreModel {
public:
    GuidedModel(std::shared_ptr<const ScoreModel> uncond, std::shared_ptr<const ScoreModel> cond, double scale);

    int dim() const override { return uncond_->dim(); }
    int steps() const override { return uncond_->steps(); }
    Vector predict(const Vector& x, int t) const override;

private:
    std::shared_ptr<const ScoreModel> uncond_;
    std::shared_ptr<const ScoreModel> cond_;
    double scale_;
};

} // namespace parataa

#endif
