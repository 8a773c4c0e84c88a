#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wbeval/types.hpp"

namespace wbeval::losses {

using Box4 = std::array<double, 4>;

inline Box4 to_vector(const BoundingBox& b) noexcept { return {b.x, b.y, b.w, b.h}; }

// ---------------------------------------------------------------------------
// Detector objectives

/// Smoothed L1 summed over the four box coordinates. Per coordinate, with
/// d = pred - gt:
///
///     d^2 / (2 beta)      if |d| < beta
///     |d| - beta / 2      otherwise
///
/// The quadratic branch is the standard Fast R-CNN form. A variant that
/// divides the raw residual by 2 beta appears in some write-ups; it is
/// discontinuous at |d| = beta and can go negative, so it is not used.
double smooth_l1(const Box4& pred, const Box4& gt, double beta);

/// Gradient of smooth_l1 with respect to `pred`.
Box4 smooth_l1_grad(const Box4& pred, const Box4& gt, double beta);

struct ObjectnessSample {
    double o = 0.5;  // predicted object probability
    int o_hat = 0;   // 1 = object, 0 = background
};

/// -[o_hat ln o + (1 - o_hat) ln(1 - o)], with o clamped to [eps, 1 - eps].
double bce(const ObjectnessSample& s, double epsilon = 1e-7);

/// d bce / d o. Zero where the clamp is active.
double bce_grad(const ObjectnessSample& s, double epsilon = 1e-7);

/// Object-class probability from (background, object) logits.
double objectness_probability(double background_logit, double object_logit) noexcept;

/// BCE on a two-logit objectness head, via `objectness_probability`.
double bce_from_logits(double background_logit, double object_logit, int o_hat, double epsilon = 1e-7);

/// Unweighted sum of the three detector terms.
double detector_loss(double l1, double l_obj, double l_det) noexcept;

// ---------------------------------------------------------------------------
// Recognition objectives

/// -ln softmax(logits)[label], evaluated as logsumexp(logits) - logits[label]
/// with max subtraction. The class probability is floored at `epsilon`, so
/// the result never exceeds -ln(epsilon).
double cross_entropy(std::span<const double> logits, std::size_t label, double epsilon = 1e-7);

/// Gradient of cross_entropy with respect to the logits: softmax - onehot.
std::vector<double> cross_entropy_grad(std::span<const double> logits, std::size_t label, double epsilon = 1e-7);

/// B feature vectors of dimension d with their subject labels.
class LabeledBatch {
public:
    /// `features` is row-major B x dim. Requires B >= 2 and finite values.
    LabeledBatch(std::vector<double> features, std::size_t dim, std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> features() const noexcept { return features_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(features_).subspan(i * dim_, dim_);
    }
    const std::string& label(std::size_t i) const noexcept { return labels_[i]; }
    std::span<const std::string> labels() const noexcept { return labels_; }

private:
    std::vector<double> features_;
    std::size_t dim_;
    std::vector<std::string> labels_;
};

struct TripletResult {
    double loss = 0.0;
    std::vector<double> grad;      // B x d, d loss / d features
    std::vector<std::size_t> hardest_positive;
    std::vector<std::size_t> hardest_negative;
    std::size_t active_anchors = 0;
};

/// Batch-hard triplet loss with Euclidean distance:
///   mean over anchors a of max(0, max_p D(a,p) - min_n D(a,n) + margin).
/// Throws NoPositiveError if a subject has a single sample and
/// NoNegativeError if the batch holds one subject.
double batch_hard_triplet(const LabeledBatch& batch, double margin = 0.3);

/// Same loss plus its gradient and the mined indices.
TripletResult batch_hard_triplet_with_grad(const LabeledBatch& batch, double margin = 0.3);

double recognition_loss(double l_cls, double l_pair) noexcept;

// ---------------------------------------------------------------------------
// Gradient verification

/// A scalar function together with its closed-form gradient.
struct Differentiable {
    std::function<double(std::span<const double>)> value;
    std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_component = 0;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

/// Compares the analytic gradient with central differences
/// (f(x + h e_i) - f(x - h e_i)) / 2h. Per component the error is
/// |a - n| / max(|a|, |n|, scale_floor); the floor keeps round-off on
/// near-zero components from dominating.
GradCheckResult grad_check(const Differentiable& fn, std::span<const double> point, double step = 1e-5,
                           double scale_floor = 1e-4);

// ---------------------------------------------------------------------------
// Self-check suite

struct CheckOutcome {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct SelfCheckOptions {
    LossConfig config;
    std::uint64_t seed = 20230601;
    std::size_t points_per_loss = 100;
    /// Scales one analytic gradient by this factor; 1.0 is a healthy build.
    /// Used to confirm that the suite detects a broken derivative.
    double smooth_l1_gradient_fault = 1.0;
};

/// Worked-value identities, continuity, additivity and gradient checks for
/// every loss.
std::vector<CheckOutcome> run_self_checks(const SelfCheckOptions& opts = {});

}  // namespace wbeval::losses
