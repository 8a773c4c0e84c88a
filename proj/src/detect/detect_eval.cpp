#include "wbeval/detect_eval.hpp"

#include <algorithm>
#include <numeric>

#include "wbeval/error.hpp"
#include "wbeval/parallel.hpp"

namespace wbeval {

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

/// Prediction visiting order: score desc, area asc, input order.
std::vector<std::size_t> prediction_order(std::span<const DetectionRecord> preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (preds[i].score != preds[j].score) return preds[i].score > preds[j].score;
        return preds[i].box.area() < preds[j].box.area();
    });
    return order;
}

}  // namespace

std::vector<MatchCounts> match_frame(std::span<const DetectionRecord> preds, std::span<const GroundTruthRecord> gts,
                                     std::span<const double> thresholds) {
    const std::size_t np = preds.size();
    const std::size_t ng = gts.size();
    std::vector<double> table(np * ng);
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < ng; ++j) table[i * ng + j] = iou(preds[i].box, gts[j].box);

    const auto order = prediction_order(preds);
    std::vector<MatchCounts> out;
    out.reserve(thresholds.size());
    std::vector<char> taken(ng);
    for (double threshold : thresholds) {
        std::fill(taken.begin(), taken.end(), 0);
        MatchCounts c;
        for (std::size_t i : order) {
            std::size_t best = ng;
            double best_iou = -1.0;
            for (std::size_t j = 0; j < ng; ++j) {
                if (!taken[j] && table[i * ng + j] > best_iou) {
                    best_iou = table[i * ng + j];
                    best = j;
                }
            }
            if (best < ng && best_iou >= threshold) {
                taken[best] = 1;
                ++c.tp;
            } else {
                ++c.fp;
            }
        }
        c.fn_ = static_cast<std::int64_t>(ng) - c.tp;
        out.push_back(c);
    }
    return out;
}

MatchCounts match_frame(std::span<const DetectionRecord> preds, std::span<const GroundTruthRecord> gts,
                        double threshold) {
    return match_frame(preds, gts, std::span<const double>(&threshold, 1)).front();
}

PrF1 prf1(const MatchCounts& c) noexcept {
    const bool empty = c.tp == 0 && c.fp == 0 && c.fn_ == 0;
    auto ratio = [empty](std::int64_t num, std::int64_t den) {
        if (den == 0) return empty ? 1.0 : 0.0;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    PrF1 out;
    out.precision = ratio(c.tp, c.tp + c.fp);
    out.recall = ratio(c.tp, c.tp + c.fn_);
    // 2PR/(P+R) written in counts: 2tp / (2tp + fp + fn).
    out.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    return out;
}

void validate_iou_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw DomainError("at least one IoU threshold is required");
    for (double t : thresholds) {
        if (!(t > 0.0 && t <= 1.0)) throw DomainError("IoU threshold " + std::to_string(t) + " outside (0, 1]");
    }
}

namespace {

struct FrameJob {
    std::span<const DetectionRecord> preds;
    std::span<const GroundTruthRecord> gts;
    const std::string* tag = nullptr;
};

const std::string& resolve_tag(const MediaIndex& index, const std::string& media_id,
                               const std::optional<std::string>& own_tag, bool is_ground_truth) {
    if (const auto* t = index.tag_of(media_id)) return *t;
    if (own_tag) return *own_tag;
    throw ValidationError(std::string(is_ground_truth ? "ground-truth" : "detection") + " media '" + media_id +
                          "' has no dataset_tag in the media index");
}

}  // namespace

DetectionReport evaluate_detections(const DetectionStore& dets, const GroundTruthStore& gts, const MediaIndex& index,
                                    const DetectionEvalOptions& opts) {
    validate_iou_thresholds(opts.thresholds);

    // Merge the two sorted group lists into one job per (media, frame).
    std::vector<FrameJob> jobs;
    auto dg = dets.groups();
    auto gg = gts.groups();
    std::size_t a = 0, b = 0;
    while (a < dg.size() || b < gg.size()) {
        int cmp;
        if (a == dg.size()) {
            cmp = 1;
        } else if (b == gg.size()) {
            cmp = -1;
        } else {
            const auto& ma = dets.media_id(dg[a]);
            const auto& mb = gts.media_id(gg[b]);
            cmp = ma < mb ? -1 : (mb < ma ? 1 : 0);
            if (cmp == 0) {
                auto fa = dets.frame(dg[a]);
                auto fb = gts.frame(gg[b]);
                cmp = fa < fb ? -1 : (fb < fa ? 1 : 0);
            }
        }
        FrameJob job;
        if (cmp <= 0) job.preds = dets.group(dg[a]);
        if (cmp >= 0) job.gts = gts.group(gg[b]);
        if (!job.gts.empty()) {
            job.tag = &resolve_tag(index, job.gts.front().media_id, job.gts.front().dataset_tag, true);
        } else {
            job.tag = &resolve_tag(index, job.preds.front().media_id, job.preds.front().dataset_tag, false);
        }
        jobs.push_back(job);
        if (cmp <= 0) ++a;
        if (cmp >= 0) ++b;
    }

    const std::size_t nt = opts.thresholds.size();
    std::vector<std::vector<MatchCounts>> frame_counts(jobs.size());
    parallel_for(jobs.size(), opts.threads, [&](std::size_t i) {
        frame_counts[i] = match_frame(jobs[i].preds, jobs[i].gts, opts.thresholds);
    });

    std::map<std::string, std::vector<MatchCounts>> group_counts;
    std::vector<MatchCounts> pooled_counts(nt);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto& g = group_counts[*jobs[i].tag];
        g.resize(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            g[t] += frame_counts[i][t];
            pooled_counts[t] += frame_counts[i][t];
        }
    }

    DetectionReport report;
    report.thresholds = opts.thresholds;
    for (auto& [tag, counts] : group_counts) {
        auto& out = report.per_group[tag];
        for (const auto& c : counts) out.push_back({prf1(c), c});
    }
    for (const auto& c : pooled_counts) report.pooled.push_back({prf1(c), c});
    return report;
}

DetectionReport evaluate_detections(const DetectionStore& dets, const GroundTruthStore& gts,
                                    const DetectionEvalOptions& opts) {
    return evaluate_detections(dets, gts, MediaIndex::from_ground_truth(gts), opts);
}

}  // namespace wbeval
