#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wbeval/io.hpp"
#include "wbeval/types.hpp"

namespace wbeval {

/// IoU thresholds reported for every detection run.
inline const std::vector<double> kDefaultIouThresholds = {0.35, 0.5, 0.7};

struct MatchCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn_ = 0;

    MatchCounts& operator+=(const MatchCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn_ += o.fn_;
        return *this;
    }
    friend MatchCounts operator+(MatchCounts a, const MatchCounts& b) noexcept { return a += b; }
    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct PrF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DetectionMetrics {
    PrF1 scores;
    MatchCounts counts;
};

/// Intersection over union in [0, 1].
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Greedy one-to-one matching inside a single frame. Predictions are visited
/// by descending score (ties: smaller area, then input order); each claims the
/// unmatched ground truth of highest IoU (ties: input order) when that IoU
/// reaches `threshold`.
MatchCounts match_frame(std::span<const DetectionRecord> preds, std::span<const GroundTruthRecord> gts,
                        double threshold);

/// Matches a frame at several thresholds at once, sharing the IoU table.
std::vector<MatchCounts> match_frame(std::span<const DetectionRecord> preds, std::span<const GroundTruthRecord> gts,
                                     std::span<const double> thresholds);

/// Precision, recall and F1. An empty frame (all counts zero) scores 1.0; any
/// other zero denominator scores 0.0.
PrF1 prf1(const MatchCounts& counts) noexcept;

struct DetectionReport {
    std::vector<double> thresholds;
    /// dataset tag -> one entry per threshold, in `thresholds` order.
    std::map<std::string, std::vector<DetectionMetrics>> per_group;
    /// Micro-pooled over all groups: counts are summed before scoring.
    std::vector<DetectionMetrics> pooled;
};

struct DetectionEvalOptions {
    std::vector<double> thresholds = kDefaultIouThresholds;
    unsigned threads = 1;
};

/// Scores every (media, frame) that appears in either store, grouped by the
/// media's dataset tag. Tags come from `index`, falling back to the record's
/// own `dataset_tag`; a media without any tag is a ValidationError.
DetectionReport evaluate_detections(const DetectionStore& dets, const GroundTruthStore& gts, const MediaIndex& index,
                                    const DetectionEvalOptions& opts = {});

/// Convenience overload that derives the media index from the ground truth.
DetectionReport evaluate_detections(const DetectionStore& dets, const GroundTruthStore& gts,
                                    const DetectionEvalOptions& opts = {});

/// Throws DomainError unless thresholds are non-empty and each lies in (0, 1].
void validate_iou_thresholds(std::span<const double> thresholds);

}  // namespace wbeval
