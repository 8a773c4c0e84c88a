#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbeval/rng.hpp"

namespace wbeval::sampling {

/// Test-time frame stride for a dataset tag: one frame every 300 for the
/// indoor sets and close range, every 150 elsewhere.
std::int64_t default_test_stride(std::string_view dataset_tag);

inline constexpr std::size_t kDefaultSubjectsPerBatch = 4;
inline constexpr std::size_t kDefaultMediaPerSubject = 4;

struct WeightedItem {
    std::string media_id;
    std::string dataset_tag;
    double probability = 0.0;
};

/// Sampling distribution in which every dataset is equally likely regardless
/// of its size.
struct DatasetWeights {
    std::map<std::string, double> per_dataset;
    std::vector<WeightedItem> items;  // dataset-tag order, then input order

    std::map<std::string, double> per_item() const;
};

/// Each item of dataset d_i gets weight 1/|d_i|, normalized over all items.
/// Throws EmptyDatasetError for an empty dataset.
DatasetWeights dataset_balanced_weights(const std::map<std::string, std::vector<std::string>>& items_by_tag);

/// Same weighting from sizes alone; items are named "<tag>/<index>".
DatasetWeights dataset_balanced_weights(const std::map<std::string, std::size_t>& sizes);

/// `count` independent draws from the per-item distribution.
std::vector<std::string> sample_media(const DatasetWeights& weights, std::size_t count, std::uint64_t seed);

struct BatchPlan {
    std::size_t n = 0;  // subjects per batch
    std::size_t k = 0;  // media per subject
    /// Per batch, the n chosen subjects in draw order.
    std::vector<std::vector<std::string>> subjects;
    /// Per batch, n * k media ids; subject s occupies [s*k, (s+1)*k).
    std::vector<std::vector<std::string>> batches;
};

/// Identity-balanced batches: n distinct subjects drawn without replacement,
/// then k media per subject (without replacement when the subject has at
/// least k, with replacement otherwise). Subjects without media are ignored.
/// Throws InfeasibleError when fewer than n subjects are available and
/// DomainError when n < 2 or k < 2.
BatchPlan pk_batches(const std::map<std::string, std::vector<std::string>>& media_by_subject, std::size_t n,
                     std::size_t k, std::size_t num_batches, std::uint64_t seed);

enum class WindowMode { train, test };

struct FrameWindowOptions {
    std::int64_t stride = 1;
    std::size_t length = 1;  // T
    WindowMode mode = WindowMode::train;
    /// Train mode only: pick `length` strided frames uniformly without
    /// replacement (kept in temporal order) instead of a consecutive run.
    bool uniform_subset = false;
};

/// Selected frames of one media. Padding slots hold index -1 and mask 0, and
/// always follow the valid slots.
struct FrameWindow {
    std::vector<std::int64_t> indices;
    std::vector<std::uint8_t> mask;

    std::size_t length() const noexcept { return indices.size(); }
    std::size_t valid_count() const noexcept;
};

/// Strided frames S = (0, stride, 2*stride, ...) below frame_count.
/// Test mode returns all of S. Train mode returns a random consecutive run of
/// T elements of S when |S| > T, otherwise S padded to T.
FrameWindow frame_window(std::int64_t frame_count, const FrameWindowOptions& opts, std::uint64_t seed);

}  // namespace wbeval::sampling
