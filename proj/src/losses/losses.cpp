#include "wbeval/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wbeval/error.hpp"

namespace wbeval::losses {

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DomainError(std::string("non-finite ") + what);
    }
}

}  // namespace

double smooth_l1(const Box4& pred, const Box4& gt, double beta) {
    if (!(beta > 0.0)) throw DomainError("smooth_l1 requires beta > 0");
    require_finite(pred, "prediction");
    require_finite(gt, "ground truth");
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = pred[i] - gt[i];
        const double ad = std::abs(d);
        sum += ad < beta ? d * d / (2.0 * beta) : ad - beta / 2.0;
    }
    return sum;
}

Box4 smooth_l1_grad(const Box4& pred, const Box4& gt, double beta) {
    if (!(beta > 0.0)) throw DomainError("smooth_l1 requires beta > 0");
    require_finite(pred, "prediction");
    require_finite(gt, "ground truth");
    Box4 g{};
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = pred[i] - gt[i];
        g[i] = std::abs(d) < beta ? d / beta : (d > 0.0 ? 1.0 : -1.0);
    }
    return g;
}

namespace {

void check_sample(const ObjectnessSample& s) {
    if (!std::isfinite(s.o) || s.o < 0.0 || s.o > 1.0) throw DomainError("objectness probability outside [0, 1]");
    if (s.o_hat != 0 && s.o_hat != 1) throw DomainError("objectness label must be 0 or 1");
}

}  // namespace

double bce(const ObjectnessSample& s, double epsilon) {
    check_sample(s);
    const double o = std::clamp(s.o, epsilon, 1.0 - epsilon);
    return s.o_hat ? -std::log(o) : -std::log1p(-o);
}

double bce_grad(const ObjectnessSample& s, double epsilon) {
    check_sample(s);
    if (s.o < epsilon || s.o > 1.0 - epsilon) return 0.0;
    return s.o_hat ? -1.0 / s.o : 1.0 / (1.0 - s.o);
}

double objectness_probability(double background_logit, double object_logit) noexcept {
    // softmax over two logits reduces to a logistic of their difference.
    return 1.0 / (1.0 + std::exp(background_logit - object_logit));
}

double bce_from_logits(double background_logit, double object_logit, int o_hat, double epsilon) {
    return bce({objectness_probability(background_logit, object_logit), o_hat}, epsilon);
}

double detector_loss(double l1, double l_obj, double l_det) noexcept { return l1 + l_obj + l_det; }

namespace {

struct LogSoftmax {
    double max = 0.0;
    double log_sum = 0.0;  // ln sum exp(z - max)
};

LogSoftmax log_softmax_terms(std::span<const double> logits, std::size_t label) {
    if (logits.size() < 2) throw DomainError("cross_entropy needs at least two classes");
    if (label >= logits.size()) {
        throw DomainError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                          " classes");
    }
    require_finite(logits, "logit");
    LogSoftmax t;
    t.max = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - t.max);
    t.log_sum = std::log(sum);
    return t;
}

}  // namespace

double cross_entropy(std::span<const double> logits, std::size_t label, double epsilon) {
    const auto t = log_softmax_terms(logits, label);
    const double loss = t.log_sum - (logits[label] - t.max);
    return std::min(loss, -std::log(epsilon));
}

std::vector<double> cross_entropy_grad(std::span<const double> logits, std::size_t label, double epsilon) {
    const auto t = log_softmax_terms(logits, label);
    std::vector<double> g(logits.size(), 0.0);
    if (t.log_sum - (logits[label] - t.max) > -std::log(epsilon)) return g;  // floor active
    for (std::size_t c = 0; c < logits.size(); ++c) g[c] = std::exp(logits[c] - t.max - t.log_sum);
    g[label] -= 1.0;
    return g;
}

double recognition_loss(double l_cls, double l_pair) noexcept { return l_cls + l_pair; }

// ---------------------------------------------------------------------------

LabeledBatch::LabeledBatch(std::vector<double> features, std::size_t dim, std::vector<std::string> labels)
    : features_(std::move(features)), dim_(dim), labels_(std::move(labels)) {
    if (dim_ == 0) throw DomainError("feature dimension must be positive");
    if (labels_.size() < 2) throw DomainError("a batch needs at least two samples");
    if (features_.size() != labels_.size() * dim_) throw DomainError("features do not match B x d");
    require_finite(features_, "feature");
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void check_triplet_preconditions(const LabeledBatch& batch) {
    std::map<std::string_view, std::size_t> per_subject;
    for (const auto& l : batch.labels()) ++per_subject[l];
    if (per_subject.size() < 2) throw NoNegativeError("batch holds a single subject; no negatives to mine");
    for (const auto& [subject, count] : per_subject) {
        if (count < 2) throw NoPositiveError("subject '" + std::string(subject) + "' has one sample; no positive");
    }
}

}  // namespace

TripletResult batch_hard_triplet_with_grad(const LabeledBatch& batch, double margin) {
    if (!(margin >= 0.0) || !std::isfinite(margin)) throw DomainError("margin must be non-negative and finite");
    check_triplet_preconditions(batch);

    const std::size_t n = batch.size();
    const std::size_t d = batch.dim();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = euclidean(batch.row(i), batch.row(j));

    TripletResult r;
    r.grad.assign(n * d, 0.0);
    r.hardest_positive.resize(n);
    r.hardest_negative.resize(n);
    double total = 0.0;
    const double scale = 1.0 / static_cast<double>(n);

    // Adds sign * dD(a, b)/d(features) * scale.
    auto accumulate = [&](std::size_t a, std::size_t b, double sign) {
        const double dab = dist[a * n + b];
        if (dab == 0.0) return;  // subgradient 0 at coincident points
        auto fa = batch.row(a);
        auto fb = batch.row(b);
        for (std::size_t k = 0; k < d; ++k) {
            const double u = sign * scale * (fa[k] - fb[k]) / dab;
            r.grad[a * d + k] += u;
            r.grad[b * d + k] -= u;
        }
    };

    for (std::size_t a = 0; a < n; ++a) {
        double hardest_pos = -1.0;
        double hardest_neg = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            const double dj = dist[a * n + j];
            if (batch.label(j) == batch.label(a)) {
                if (dj > hardest_pos) {
                    hardest_pos = dj;
                    r.hardest_positive[a] = j;
                }
            } else if (dj < hardest_neg) {
                hardest_neg = dj;
                r.hardest_negative[a] = j;
            }
        }
        const double hinge = hardest_pos - hardest_neg + margin;
        if (hinge > 0.0) {
            total += hinge;
            ++r.active_anchors;
            accumulate(a, r.hardest_positive[a], 1.0);
            accumulate(a, r.hardest_negative[a], -1.0);
        }
    }
    r.loss = total / static_cast<double>(n);
    return r;
}

double batch_hard_triplet(const LabeledBatch& batch, double margin) {
    return batch_hard_triplet_with_grad(batch, margin).loss;
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const Differentiable& fn, std::span<const double> point, double step,
                           double scale_floor) {
    GradCheckResult r;
    r.analytic = fn.gradient(point);
    if (r.analytic.size() != point.size()) throw DomainError("gradient size does not match point");
    r.numeric.resize(point.size());
    std::vector<double> x(point.begin(), point.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = fn.value(x);
        x[i] = saved - step;
        const double fm = fn.value(x);
        x[i] = saved;
        r.numeric[i] = (fp - fm) / (2.0 * step);
        const double a = r.analytic[i];
        const double nmr = r.numeric[i];
        const double err = std::abs(a - nmr) / std::max({std::abs(a), std::abs(nmr), scale_floor});
        if (err > r.max_relative_error) {
            r.max_relative_error = err;
            r.worst_component = i;
        }
    }
    return r;
}

}  // namespace wbeval::losses
