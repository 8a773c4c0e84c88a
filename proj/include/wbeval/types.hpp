#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wbeval {

/// Axis-aligned box in pixels, top-left origin. Positions are unbounded; only
/// the extent must be positive.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }

    /// Builds a box from corner coordinates (x1, y1, x2, y2).
    static BoundingBox from_corners(double x1, double y1, double x2, double y2) {
        return {x1, y1, x2 - x1, y2 - y1};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws ValidationError unless the box is finite with w > 0 and h > 0.
void validate_box(const BoundingBox& box, std::size_t line = 0);

enum class BoxFormat { xywh, xyxy };

struct DetectionRecord {
    std::string media_id;
    std::int64_t frame = 0;
    BoundingBox box;
    double score = 0.0;
    std::optional<std::string> dataset_tag;
};

struct GroundTruthRecord {
    std::string media_id;
    std::int64_t frame = 0;
    BoundingBox box;
    std::string subject_id;
    std::optional<std::string> dataset_tag;
};

enum class Modality { image, video };

struct MediaRecord {
    std::string media_id;
    std::string subject_id;
    std::string dataset_tag;
    Modality modality = Modality::video;
    std::int64_t frame_count = 1;
};

struct GalleryEntry {
    std::string subject_id;
    std::vector<std::string> media_ids;
    bool distractor = false;
};

struct ProbeEntry {
    std::string probe_id;
    std::string media_id;
    std::optional<std::string> true_subject_id;
};

/// Ground truth of an identification protocol. Construct through
/// `make_protocol` or `load_protocol` so the invariants are checked.
struct ProtocolManifest {
    std::vector<GalleryEntry> gallery;
    std::vector<ProbeEntry> probes;
};

/// Hyper-parameters shared by the loss functions.
struct LossConfig {
    double beta = 1.0 / 9.0;  // smooth-L1 transition point used by the detector
    double margin = 0.3;      // batch-hard triplet margin
    double epsilon = 1e-7;    // probability clamp before taking logarithms

    void validate() const;
};

}  // namespace wbeval
