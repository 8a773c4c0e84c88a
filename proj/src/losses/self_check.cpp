#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wbeval/losses.hpp"
#include "wbeval/rng.hpp"

namespace wbeval::losses {

namespace {

CheckOutcome outcome(std::string name, double err, double tol) {
    return {std::move(name), err, tol, err <= tol};
}

double worst_grad_error(std::size_t points, Rng& rng, const auto& make_case, double step) {
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        auto [fn, x] = make_case(rng);
        worst = std::max(worst, grad_check(fn, x, step).max_relative_error);
    }
    return worst;
}

/// Resamples until every anchor's hardest positive and negative are unique by
/// a clear gap and no hinge sits at its kink.
LabeledBatch well_separated_batch(Rng& rng, double margin) {
    constexpr double kGap = 1e-3;
    for (;;) {
        const std::size_t subjects = 2 + rng.uniform_index(3);
        const std::size_t per = 2 + rng.uniform_index(3);
        const std::size_t dim = 2 + rng.uniform_index(7);
        const std::size_t n = subjects * per;
        std::vector<double> f(n * dim);
        for (auto& v : f) v = rng.normal();
        std::vector<std::string> labels;
        for (std::size_t s = 0; s < subjects; ++s)
            for (std::size_t k = 0; k < per; ++k) labels.push_back("s" + std::to_string(s));
        LabeledBatch batch(std::move(f), dim, std::move(labels));

        bool ok = true;
        for (std::size_t a = 0; a < n && ok; ++a) {
            std::vector<double> pos, neg;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == a) continue;
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) s += std::pow(batch.row(a)[k] - batch.row(j)[k], 2);
                (batch.label(j) == batch.label(a) ? pos : neg).push_back(std::sqrt(s));
            }
            std::sort(pos.rbegin(), pos.rend());
            std::sort(neg.begin(), neg.end());
            if (pos.size() > 1 && pos[0] - pos[1] < kGap) ok = false;
            if (neg.size() > 1 && neg[1] - neg[0] < kGap) ok = false;
            if (neg[0] < kGap || std::abs(pos[0] - neg[0] + margin) < kGap) ok = false;
        }
        if (ok) return batch;
    }
}

}  // namespace

std::vector<CheckOutcome> run_self_checks(const SelfCheckOptions& opts) {
    opts.config.validate();
    const double beta = opts.config.beta;
    const double margin = opts.config.margin;
    const double eps = opts.config.epsilon;
    std::vector<CheckOutcome> out;

    // Worked values.
    out.push_back(outcome("smooth_l1 d=1 beta=1/9",
                          std::abs(smooth_l1({1, 0, 0, 0}, {0, 0, 0, 0}, 1.0 / 9.0) - (1.0 - 1.0 / 18.0)), 1e-12));
    {
        const double lo = smooth_l1({beta - 1e-9, 0, 0, 0}, {0, 0, 0, 0}, beta);
        const double hi = smooth_l1({beta + 1e-9, 0, 0, 0}, {0, 0, 0, 0}, beta);
        out.push_back(outcome("smooth_l1 continuity at beta", std::abs(hi - lo), 1e-8));
    }
    out.push_back(outcome("bce o=0.5", std::abs(bce({0.5, 1}, eps) - std::numbers::ln2), 1e-12));
    out.push_back(outcome("bce o=0.9 label=1", std::abs(bce({0.9, 1}, eps) + std::log(0.9)), 1e-12));
    {
        const std::vector<double> uniform(4, 0.7);
        out.push_back(outcome("cross_entropy uniform C=4", std::abs(cross_entropy(uniform, 2, eps) - std::log(4.0)),
                              1e-12));
        const std::vector<double> two{1.0, 0.0};
        out.push_back(outcome("cross_entropy logits (1,0)",
                              std::abs(cross_entropy(two, 0, eps) - std::log1p(std::exp(-1.0))), 1e-12));
    }
    {
        LabeledBatch separated({0.0, 1.0, 10.0, 10.5}, 1, {"A", "A", "B", "B"});
        LabeledBatch overlapping({0.0, 2.0, 1.0, 3.0}, 1, {"A", "A", "B", "B"});
        out.push_back(outcome("triplet separated batch", std::abs(batch_hard_triplet(separated, 0.3)), 1e-12));
        out.push_back(outcome("triplet overlapping batch", std::abs(batch_hard_triplet(overlapping, 0.3) - 1.3), 1e-12));
    }

    // Additivity against extended-precision re-summation.
    {
        Rng rng(derive_seed(opts.seed, 1));
        double worst = 0.0;
        for (std::size_t i = 0; i < opts.points_per_loss; ++i) {
            const double a = rng.uniform(0, 10), b = rng.uniform(0, 10), c = rng.uniform(0, 10);
            const long double ref3 = static_cast<long double>(a) + b + c;
            const long double ref2 = static_cast<long double>(a) + b;
            worst = std::max<double>(worst, std::abs((detector_loss(a, b, c) - ref3) / ref3));
            worst = std::max<double>(worst, std::abs((recognition_loss(a, b) - ref2) / ref2));
        }
        out.push_back(outcome("total losses additivity", worst, 1e-14));
    }

    // Gradient checks at random smooth points.
    const std::size_t points = opts.points_per_loss;
    const double fault = opts.smooth_l1_gradient_fault;
    {
        Rng rng(derive_seed(opts.seed, 2));
        auto make = [&](Rng& r) {
            Box4 gt, pred;
            for (std::size_t i = 0; i < 4; ++i) {
                gt[i] = r.uniform(-5, 5);
                // Half the residuals fall in the quadratic zone, half in the
                // linear one; both stay clear of 0 +- h and the joint at beta.
                double mag = r.uniform01() < 0.5 ? r.uniform(0.01, 0.99) * beta : beta + r.uniform(0.01, 3.0);
                pred[i] = gt[i] + (r.uniform01() < 0.5 ? -mag : mag);
            }
            Differentiable fn{
                [gt, beta](std::span<const double> x) { return smooth_l1({x[0], x[1], x[2], x[3]}, gt, beta); },
                [gt, beta, fault](std::span<const double> x) {
                    auto g = smooth_l1_grad({x[0], x[1], x[2], x[3]}, gt, beta);
                    std::vector<double> v(g.begin(), g.end());
                    for (auto& c : v) c *= fault;
                    return v;
                }};
            return std::pair{fn, std::vector<double>(pred.begin(), pred.end())};
        };
        out.push_back(outcome("grad smooth_l1", worst_grad_error(points, rng, make, 1e-6), 1e-5));
    }
    {
        Rng rng(derive_seed(opts.seed, 3));
        auto make = [&](Rng& r) {
            const int label = static_cast<int>(r.uniform_index(2));
            Differentiable fn{[label, eps](std::span<const double> x) { return bce({x[0], label}, eps); },
                              [label, eps](std::span<const double> x) {
                                  return std::vector<double>{bce_grad({x[0], label}, eps)};
                              }};
            return std::pair{fn, std::vector<double>{r.uniform(0.02, 0.98)}};
        };
        out.push_back(outcome("grad bce", worst_grad_error(points, rng, make, 1e-6), 1e-5));
    }
    {
        Rng rng(derive_seed(opts.seed, 4));
        auto make = [&](Rng& r) {
            const std::size_t classes = 2 + r.uniform_index(9);
            const std::size_t label = r.uniform_index(classes);
            std::vector<double> logits(classes);
            for (auto& z : logits) z = 2.0 * r.normal();
            Differentiable fn{[label, eps](std::span<const double> x) { return cross_entropy(x, label, eps); },
                              [label, eps](std::span<const double> x) { return cross_entropy_grad(x, label, eps); }};
            return std::pair{fn, logits};
        };
        out.push_back(outcome("grad cross_entropy", worst_grad_error(points, rng, make, 1e-5), 1e-5));
    }
    {
        Rng rng(derive_seed(opts.seed, 5));
        auto make = [&](Rng& r) {
            LabeledBatch batch = well_separated_batch(r, margin);
            const std::size_t dim = batch.dim();
            std::vector<std::string> labels(batch.labels().begin(), batch.labels().end());
            std::vector<double> x(batch.features().begin(), batch.features().end());
            Differentiable fn{[labels, dim, margin](std::span<const double> f) {
                                  return batch_hard_triplet(
                                      LabeledBatch(std::vector<double>(f.begin(), f.end()), dim, labels), margin);
                              },
                              [labels, dim, margin](std::span<const double> f) {
                                  return batch_hard_triplet_with_grad(
                                             LabeledBatch(std::vector<double>(f.begin(), f.end()), dim, labels), margin)
                                      .grad;
                              }};
            return std::pair{fn, x};
        };
        out.push_back(outcome("grad batch_hard_triplet", worst_grad_error(points, rng, make, 1e-6), 1e-5));
    }
    return out;
}

}  // namespace wbeval::losses
