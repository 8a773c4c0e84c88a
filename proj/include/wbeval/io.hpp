#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wbeval/types.hpp"

namespace wbeval {

/// Contiguous run [begin, end) of records sharing one (media_id, frame) key.
struct FrameGroup {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Immutable store of per-frame records. Records are ordered by
/// (media_id, frame); within a frame the input order is kept, which the
/// detection matcher relies on for tie-breaking.
template <class Record>
class FrameStore {
public:
    FrameStore() = default;
    explicit FrameStore(std::vector<Record> records);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::span<const Record> records() const noexcept { return records_; }
    std::span<const FrameGroup> groups() const noexcept { return groups_; }
    std::span<const Record> group(const FrameGroup& g) const noexcept {
        return std::span<const Record>(records_).subspan(g.begin, g.end - g.begin);
    }
    const std::string& media_id(const FrameGroup& g) const noexcept { return records_[g.begin].media_id; }
    std::int64_t frame(const FrameGroup& g) const noexcept { return records_[g.begin].frame; }

private:
    std::vector<Record> records_;
    std::vector<FrameGroup> groups_;
};

using DetectionStore = FrameStore<DetectionRecord>;
using GroundTruthStore = FrameStore<GroundTruthRecord>;

extern template class FrameStore<DetectionRecord>;
extern template class FrameStore<GroundTruthRecord>;

struct LoadOptions {
    /// xyxy reads keys x1, y1, x2, y2 instead of x, y, w, h.
    BoxFormat box_format = BoxFormat::xywh;
};

DetectionStore parse_detections(std::istream& in, const LoadOptions& opts = {});
DetectionStore load_detections(const std::filesystem::path& path, const LoadOptions& opts = {});

/// Rejects two boxes for the same (media_id, frame, subject_id).
GroundTruthStore parse_ground_truth(std::istream& in, const LoadOptions& opts = {});
GroundTruthStore load_ground_truth(const std::filesystem::path& path, const LoadOptions& opts = {});

std::vector<MediaRecord> parse_media(std::istream& in);
std::vector<MediaRecord> load_media(const std::filesystem::path& path);

/// media_id -> dataset tag lookup used to group detection results.
class MediaIndex {
public:
    MediaIndex() = default;
    static MediaIndex from_ground_truth(const GroundTruthStore& gts);
    static MediaIndex from_media(std::span<const MediaRecord> media);

    /// Adds or confirms a tag; a conflicting tag for a known media is a
    /// ValidationError.
    void assign(const std::string& media_id, const std::string& tag);
    const std::string* tag_of(std::string_view media_id) const;
    std::size_t size() const noexcept { return tags_.size(); }

private:
    std::map<std::string, std::string, std::less<>> tags_;
};

// ---------------------------------------------------------------------------
// Embeddings

enum class EmbeddingFormat { text, binary };

/// Single embedding as read from a file.
struct EmbeddingRecord {
    std::string media_id;
    std::vector<float> vector;
};

/// Immutable, row-major store of equal-dimension vectors keyed by media_id.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    /// Validates finiteness, equal dimension and unique ids.
    explicit EmbeddingStore(std::vector<EmbeddingRecord> records);
    EmbeddingStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const std::string> ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t i) const noexcept {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }
    std::span<const float> data() const noexcept { return data_; }
    std::optional<std::size_t> find(std::string_view media_id) const;

    friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
        return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_ == b.data_;
    }

private:
    void build_index();

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr char kEmbeddingMagic[4] = {'B', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Binary layout, all integers little-endian:
///   "BEMB" | u32 version | u32 dim | u64 count |
///   count x ( u32 id_len | id bytes | dim x f32 )
void write_embeddings_binary(std::ostream& out, const EmbeddingStore& store);
EmbeddingStore read_embeddings_binary(std::istream& in);

/// JSON-lines: {"media_id": "...", "vector": [..]} per line.
void write_embeddings_text(std::ostream& out, const EmbeddingStore& store);
EmbeddingStore read_embeddings_text(std::istream& in);

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
/// Picks the format from the leading magic bytes.
EmbeddingStore load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store,
                     EmbeddingFormat format);

// ---------------------------------------------------------------------------
// Protocols

/// Checks gallery id uniqueness and that no probe names a distractor subject.
ProtocolManifest make_protocol(std::vector<GalleryEntry> gallery, std::vector<ProbeEntry> probes);
ProtocolManifest parse_protocol(std::istream& in);
ProtocolManifest load_protocol(const std::filesystem::path& path);

struct ProtocolReport {
    std::vector<std::string> missing_media;  // sorted, unique
    std::vector<std::string> mate_probes;    // probe ids, manifest order
    std::vector<std::string> non_mate_probes;
    std::size_t gallery_subjects = 0;
    std::size_t distractors = 0;

    bool complete() const noexcept { return missing_media.empty(); }
};

ProtocolReport validate_protocol(const ProtocolManifest& manifest, const EmbeddingStore& embeddings);

}  // namespace wbeval
