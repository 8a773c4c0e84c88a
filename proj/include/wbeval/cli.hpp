#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wbeval/detect_eval.hpp"
#include "wbeval/identify.hpp"
#include "wbeval/io.hpp"
#include "wbeval/losses.hpp"
#include "wbeval/sampling.hpp"

namespace wbeval::cli {

/// Settings for one command-line run. Each subcommand reads the fields it
/// needs; paths it needs must exist when the run starts.
struct RunConfig {
    std::filesystem::path detections;
    std::filesystem::path ground_truth;
    std::filesystem::path embeddings;
    std::filesystem::path protocol;
    std::filesystem::path media;
    std::filesystem::path output_dir = "out";

    std::vector<double> iou_thresholds = kDefaultIouThresholds;
    std::vector<double> far_targets = identify::kDefaultFarTargets;
    std::vector<std::size_t> ranks = identify::kDefaultRanks;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    BoxFormat box_format = BoxFormat::xywh;
    std::optional<EmbeddingFormat> embedding_format;  // unset: detect from magic
    identify::Aggregation aggregation = identify::Aggregation::mean;
    identify::Metric metric = identify::Metric::cosine;
    std::optional<std::size_t> rank_cap;

    // plan-batches
    std::size_t n = sampling::kDefaultSubjectsPerBatch;
    std::size_t k = sampling::kDefaultMediaPerSubject;
    std::size_t num_batches = 10;
    std::optional<std::int64_t> stride;  // unset: per-tag test stride
    std::size_t window_length = 8;
    sampling::WindowMode mode = sampling::WindowMode::train;
    bool uniform_subset = false;
    std::size_t draws = 0;  // dataset-balanced media draws to include
};

/// Detection F1 report, per dataset tag and pooled.
int eval_det(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Closed- and open-set identification metrics plus CMC, ROC and FNIR/FPIR
/// curves.
int eval_id(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Deterministic batch and frame-window plan.
int plan_batches(const RunConfig& config, std::ostream& out, std::ostream& err);

struct CheckLossesConfig {
    losses::SelfCheckOptions options;
    std::optional<std::filesystem::path> output_dir;
};

int check_losses(const CheckLossesConfig& config, std::ostream& out, std::ostream& err);

/// Converts between text and binary embedding files; the input format is
/// detected from its leading bytes.
int convert_emb(const std::filesystem::path& input, const std::filesystem::path& output, EmbeddingFormat format,
                std::ostream& out, std::ostream& err);

}  // namespace wbeval::cli
