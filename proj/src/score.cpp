#include "parataa/score.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>

namespace parataa {

Vector eval_eps(const ScoreModel& model, const Vector& x, int t) {
    if (x.size() != model.dim()) {
        throw ShapeError("eval_eps: input has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.dim()));
    }
    if (t < 1 || t > model.steps()) {
        throw IndexError("eval_eps: step " + std::to_string(t) + " outside 1.." + std::to_string(model.steps()));
    }
    return model.predict(x, t);
}

BatchEvalError::BatchEvalError(std::size_t index, const std::string& what)
    : Error("eval_batch point " + std::to_string(index) + ": " + what), index_(index) {}

std::vector<Vector> eval_batch(const ScoreModel& model, std::span<const EvalPoint> points, const ThreadPool& pool) {
    std::vector<Vector> out(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    pool.parallel_for(points.size(), [&](std::size_t i) {
        try {
            out[i] = eval_eps(model, *points[i].x, points[i].t);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) {
            continue;
        }
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw BatchEvalError(i, e.what());
        } catch (...) {
            throw BatchEvalError(i, "unknown error");
        }
    }
    return out;
}

Vector apply_guidance(const Vector& eps_uncond, const Vector& eps_cond, double scale) {
    if (eps_uncond.size() != eps_cond.size()) {
        throw ShapeError("apply_guidance: dimensions " + std::to_string(eps_uncond.size()) + " and " +
                         std::to_string(eps_cond.size()) + " differ");
    }
    return eps_uncond + scale * (eps_cond - eps_uncond);
}

GaussianMixtureModel::GaussianMixtureModel(const BetaSchedule& sched, std::vector<double> weights,
                                           std::vector<Vector> means, double s0_sq)
    : dim_(0), alpha_bars_(sched.alpha_bars), means_(std::move(means)), s0_sq_(s0_sq) {
    if (weights.empty() || weights.size() != means_.size()) {
        throw ShapeError("gaussian mixture: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(means_.size()) + " means");
    }
    if (!(s0_sq > 0.0)) {
        throw ShapeError("gaussian mixture: component variance must be positive");
    }
    dim_ = static_cast<int>(means_.front().size());
    if (dim_ < 1) {
        throw ShapeError("gaussian mixture: zero-dimensional means");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) {
            throw ShapeError("gaussian mixture: weight " + std::to_string(k) + " is not positive");
        }
        if (means_[k].size() != dim_) {
            throw ShapeError("gaussian mixture: mean " + std::to_string(k) + " has dimension " +
                             std::to_string(means_[k].size()) + ", expected " + std::to_string(dim_));
        }
        total += weights[k];
    }
    weights_.resize(weights.size());
    log_weights_.resize(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        weights_[k] = weights[k] / total;
        log_weights_[k] = std::log(weights_[k]);
    }
}

GaussianMixtureModel GaussianMixtureModel::random(const BetaSchedule& sched, int dim, int components,
                                                  double mean_scale, double s0_sq, std::uint64_t seed) {
    if (dim < 1 || components < 1) {
        throw ShapeError("gaussian mixture: need dim >= 1 and at least one component");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.5, 1.5);
    std::vector<double> w(components);
    std::vector<Vector> mu(components, Vector(dim));
    for (int k = 0; k < components; ++k) {
        w[k] = uniform(rng);
        for (int i = 0; i < dim; ++i) {
            mu[k][i] = mean_scale * normal(rng);
        }
    }
    return GaussianMixtureModel(sched, std::move(w), std::move(mu), s0_sq);
}

std::vector<double> GaussianMixtureModel::responsibilities(const Vector& x, int t) const {
    const double ab = alpha_bars_[t - 1];
    const double sa = std::sqrt(ab);
    const double var = ab * s0_sq_ + (1.0 - ab);
    const std::size_t K = means_.size();
    std::vector<double> logits(K);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        logits[k] = log_weights_[k] - 0.5 * (x - sa * means_[k]).squaredNorm() / var;
        top = std::max(top, logits[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        logits[k] = std::exp(logits[k] - top);
        z += logits[k];
    }
    for (auto& g : logits) {
        g /= z;
    }
    return logits;
}

Vector GaussianMixtureModel::predict(const Vector& x, int t) const {
    const double ab = alpha_bars_[t - 1];
    const double sa = std::sqrt(ab);
    const double var = ab * s0_sq_ + (1.0 - ab);
    const auto gamma = responsibilities(x, t);
    Vector acc = Vector::Zero(dim_);
    for (std::size_t k = 0; k < means_.size(); ++k) {
        acc += gamma[k] * (x - sa * means_[k]);
    }
    return (std::sqrt(1.0 - ab) / var) * acc;
}

GuidedModel::GuidedModel(std::shared_ptr<const ScoreModel> uncond, std::shared_ptr<const ScoreModel> cond,
                         double scale)
    : uncond_(std::move(uncond)), cond_(std::move(cond)), scale_(scale) {
    if (!uncond_ || !cond_) {
        throw ShapeError("guided model: both component models are required");
    }
    if (uncond_->dim() != cond_->dim() || uncond_->steps() != cond_->steps()) {
        throw ShapeError("guided model: component models disagree on dimension or step count");
    }
}

Vector GuidedModel::predict(const Vector& x, int t) const {
    return apply_guidance(uncond_->predict(x, t), cond_->predict(x, t), scale_);
}

} // namespace parataa
