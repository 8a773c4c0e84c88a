#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbeval/io.hpp"
#include "wbeval/types.hpp"

namespace wbeval::identify {

/// Ranks reported in every identification summary.
inline const std::vector<std::size_t> kDefaultRanks = {1, 5, 10, 20};
/// False-accept rates at which TAR is reported.
inline const std::vector<double> kDefaultFarTargets = {1e-4, 1e-3, 1e-2, 1e-1};

enum class Aggregation { mean, max_score };
enum class Metric { cosine, neg_euclidean };

/// Gallery representation of one subject. With `mean` aggregation there is a
/// single unit vector; with `max_score` every normalized media vector is kept
/// and scoring takes the best per-media similarity.
struct SubjectTemplate {
    std::string subject_id;
    std::vector<std::vector<double>> vectors;
    std::size_t media_count = 0;
    Aggregation method = Aggregation::mean;

    std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }
};

/// L2-normalizes each media vector; `mean` then averages and re-normalizes.
/// Throws DegenerateTemplateError on an empty list, a zero vector, or a zero
/// mean.
SubjectTemplate aggregate_gallery(std::string subject_id, const std::vector<std::vector<double>>& media_vectors,
                                  Aggregation method = Aggregation::mean);

/// Probe vectors in row-major order.
struct ProbeSet {
    std::vector<std::string> ids;
    std::size_t dim = 0;
    std::vector<double> data;

    std::size_t size() const noexcept { return ids.size(); }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data).subspan(i * dim, dim);
    }
};

/// Templates for every gallery subject, in manifest order.
std::vector<SubjectTemplate> build_gallery(const ProtocolManifest& manifest, const EmbeddingStore& embeddings,
                                           Aggregation method = Aggregation::mean);

/// One row per probe, in manifest order.
ProbeSet build_probes(const ProtocolManifest& manifest, const EmbeddingStore& embeddings);

/// P x G similarity matrix; higher is more similar.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::vector<std::string> probe_ids, std::vector<std::string> gallery_ids, std::vector<double> scores);

    std::size_t rows() const noexcept { return probe_ids_.size(); }
    std::size_t cols() const noexcept { return gallery_ids_.size(); }
    std::span<const std::string> probe_ids() const noexcept { return probe_ids_; }
    std::span<const std::string> gallery_ids() const noexcept { return gallery_ids_; }
    double at(std::size_t i, std::size_t j) const noexcept { return scores_[i * cols() + j]; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(scores_).subspan(i * cols(), cols());
    }
    std::span<const double> data() const noexcept { return scores_; }

    /// Sub-matrix with the given rows, in the given order.
    ScoreMatrix select_rows(std::span<const std::size_t> rows) const;
    /// Copy with one extra gallery column appended.
    ScoreMatrix with_column(std::string gallery_id, std::span<const double> column) const;

private:
    std::vector<std::string> probe_ids_;
    std::vector<std::string> gallery_ids_;
    std::vector<double> scores_;
};

struct ScoreOptions {
    Metric metric = Metric::cosine;
    unsigned threads = 1;
};

/// Cosine scores normalize each probe first. Negative Euclidean distance uses
/// the raw probe against the unit-norm template. Probes are processed in fixed
/// blocks, so the result is bitwise identical for any thread count. Throws
/// DomainError on a dimension mismatch.
ScoreMatrix score(const ProbeSet& probes, std::span<const SubjectTemplate> gallery, const ScoreOptions& opts = {});

/// Per-row ground truth: the mate column, if the row is a mate search.
struct SearchTruth {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> mate_column;

    std::size_t mates() const noexcept;
    std::size_t non_mates() const noexcept { return mate_column.size() - mates(); }
    bool is_mate(std::size_t row) const noexcept { return mate_column[row] != npos; }
};

/// Resolves each matrix row against the manifest. Throws ProtocolError for a
/// row that is not a manifest probe.
SearchTruth resolve_truth(const ScoreMatrix& matrix, const ProtocolManifest& manifest);

/// Rows of the matrix that are mate searches.
ScoreMatrix mate_rows(const ScoreMatrix& matrix, const ProtocolManifest& manifest);

/// 1 + number of other gallery entries scoring at least as high as the mate.
std::size_t pessimistic_rank(std::span<const double> row, std::size_t mate_column) noexcept;

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double threshold = std::numeric_limits<double>::quiet_NaN();
};

struct Curve {
    std::string x_label;
    std::string y_label;
    std::vector<CurvePoint> points;
};

/// CMC(r) for r = 1..max_rank. Every row must be a mate search; otherwise a
/// ProtocolError is thrown.
Curve cmc(const ScoreMatrix& matrix, const ProtocolManifest& manifest, std::size_t max_rank);

double rank_k_accuracy(const ScoreMatrix& matrix, const ProtocolManifest& manifest, std::size_t k);

struct TarAtFar {
    double far_target = 0.0;
    double threshold = 0.0;
    double tar = 0.0;
    double achieved_far = 0.0;
};

/// Genuine scores: each mate row against its mate column. Impostor scores:
/// every row against every non-mate column. For target f with N impostors,
/// m = floor(f N) and the threshold is the (m+1)-th largest impostor score;
/// a comparison is accepted when its score is strictly above the threshold.
/// Targets must lie in [0, 1).
std::vector<TarAtFar> tar_at_far(const ScoreMatrix& matrix, const ProtocolManifest& manifest,
                                 std::span<const double> far_targets = kDefaultFarTargets);

struct OpenSetOptions {
    /// Empty: sweep every distinct non-mate top score and mate score, plus +inf.
    std::vector<double> thresholds;
    /// Mate searches whose pessimistic rank exceeds the cap count as misses.
    std::optional<std::size_t> rank_cap;
};

/// FPIR(t): share of non-mate searches whose top score is >= t.
/// FNIR(t): share of mate searches whose mate scores < t or ranks past the cap.
/// Points are ordered by descending threshold, hence non-decreasing FPIR.
Curve fnir_fpir(const ScoreMatrix& matrix, const ProtocolManifest& manifest, const OpenSetOptions& opts = {});

}  // namespace wbeval::identify
