#include "wbeval/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "wbeval/error.hpp"

namespace wbeval {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

/// Calls fn(json, line_number) for each non-blank line.
template <class Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);
        fn(obj, lineno);
    }
}

const json& require(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing key '") + key + "'", line);
    return *it;
}

std::string get_string(const json& obj, const char* key, std::size_t line) {
    const json& v = require(obj, key, line);
    if (!v.is_string()) throw ParseError(std::string("key '") + key + "' must be a string", line);
    return v.get<std::string>();
}

std::optional<std::string> get_optional_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string", line);
    return it->get<std::string>();
}

double get_number(const json& obj, const char* key, std::size_t line) {
    const json& v = require(obj, key, line);
    if (!v.is_number()) throw ParseError(std::string("key '") + key + "' must be a number", line);
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(std::string("non-finite value for '") + key + "'", line);
    return d;
}

std::int64_t get_index(const json& obj, const char* key, std::size_t line) {
    const json& v = require(obj, key, line);
    if (!v.is_number_integer()) throw ParseError(std::string("key '") + key + "' must be an integer", line);
    auto i = v.get<std::int64_t>();
    if (i < 0) throw ValidationError(std::string("'") + key + "' must be non-negative", line);
    return i;
}

BoundingBox get_box(const json& obj, const LoadOptions& opts, std::size_t line) {
    BoundingBox box;
    if (opts.box_format == BoxFormat::xyxy) {
        box = BoundingBox::from_corners(get_number(obj, "x1", line), get_number(obj, "y1", line),
                                        get_number(obj, "x2", line), get_number(obj, "y2", line));
    } else {
        box = {get_number(obj, "x", line), get_number(obj, "y", line), get_number(obj, "w", line),
               get_number(obj, "h", line)};
    }
    validate_box(box, line);
    return box;
}

}  // namespace

template <class Record>
FrameStore<Record>::FrameStore(std::vector<Record> records) : records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(), [](const Record& a, const Record& b) {
        return std::tie(a.media_id, a.frame) < std::tie(b.media_id, b.frame);
    });
    for (std::size_t i = 0; i < records_.size();) {
        std::size_t j = i + 1;
        while (j < records_.size() && records_[j].media_id == records_[i].media_id &&
               records_[j].frame == records_[i].frame) {
            ++j;
        }
        groups_.push_back({i, j});
        i = j;
    }
}

template class FrameStore<DetectionRecord>;
template class FrameStore<GroundTruthRecord>;

DetectionStore parse_detections(std::istream& in, const LoadOptions& opts) {
    std::vector<DetectionRecord> out;
    for_each_json_line(in, [&](const json& obj, std::size_t line) {
        DetectionRecord r;
        r.media_id = get_string(obj, "media_id", line);
        r.frame = get_index(obj, "frame", line);
        r.box = get_box(obj, opts, line);
        r.score = get_number(obj, "score", line);
        if (r.score < 0.0 || r.score > 1.0) throw ValidationError("score must lie in [0, 1]", line);
        r.dataset_tag = get_optional_string(obj, "dataset_tag", line);
        out.push_back(std::move(r));
    });
    return DetectionStore(std::move(out));
}

DetectionStore load_detections(const std::filesystem::path& path, const LoadOptions& opts) {
    auto in = open_input(path);
    return parse_detections(in, opts);
}

GroundTruthStore parse_ground_truth(std::istream& in, const LoadOptions& opts) {
    std::vector<GroundTruthRecord> out;
    std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
    for_each_json_line(in, [&](const json& obj, std::size_t line) {
        GroundTruthRecord r;
        r.media_id = get_string(obj, "media_id", line);
        r.frame = get_index(obj, "frame", line);
        r.box = get_box(obj, opts, line);
        r.subject_id = get_string(obj, "subject_id", line);
        r.dataset_tag = get_optional_string(obj, "dataset_tag", line);
        if (!seen.emplace(r.media_id, r.frame, r.subject_id).second) {
            throw ValidationError("duplicate ground truth for subject '" + r.subject_id + "' in media '" +
                                      r.media_id + "' frame " + std::to_string(r.frame),
                                  line);
        }
        out.push_back(std::move(r));
    });
    return GroundTruthStore(std::move(out));
}

GroundTruthStore load_ground_truth(const std::filesystem::path& path, const LoadOptions& opts) {
    auto in = open_input(path);
    return parse_ground_truth(in, opts);
}

std::vector<MediaRecord> parse_media(std::istream& in) {
    std::vector<MediaRecord> out;
    std::set<std::string> seen;
    for_each_json_line(in, [&](const json& obj, std::size_t line) {
        MediaRecord r;
        r.media_id = get_string(obj, "media_id", line);
        r.subject_id = get_string(obj, "subject_id", line);
        r.dataset_tag = get_string(obj, "dataset_tag", line);
        auto modality = get_string(obj, "modality", line);
        if (modality == "image") {
            r.modality = Modality::image;
        } else if (modality == "video") {
            r.modality = Modality::video;
        } else {
            throw ValidationError("modality must be 'image' or 'video'", line);
        }
        r.frame_count = r.modality == Modality::image && !obj.contains("frame_count")
                            ? 1
                            : get_index(obj, "frame_count", line);
        if (r.frame_count < 1) throw ValidationError("frame_count must be positive", line);
        if (r.modality == Modality::image && r.frame_count != 1) {
            throw ValidationError("an image has exactly one frame", line);
        }
        if (!seen.insert(r.media_id).second) throw ValidationError("duplicate media_id '" + r.media_id + "'", line);
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<MediaRecord> load_media(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_media(in);
}

MediaIndex MediaIndex::from_ground_truth(const GroundTruthStore& gts) {
    MediaIndex index;
    for (const auto& r : gts.records()) {
        if (r.dataset_tag) index.assign(r.media_id, *r.dataset_tag);
    }
    return index;
}

MediaIndex MediaIndex::from_media(std::span<const MediaRecord> media) {
    MediaIndex index;
    for (const auto& m : media) index.assign(m.media_id, m.dataset_tag);
    return index;
}

void MediaIndex::assign(const std::string& media_id, const std::string& tag) {
    auto [it, inserted] = tags_.emplace(media_id, tag);
    if (!inserted && it->second != tag) {
        throw ValidationError("media '" + media_id + "' tagged both '" + it->second + "' and '" + tag + "'");
    }
}

const std::string* MediaIndex::tag_of(std::string_view media_id) const {
    auto it = tags_.find(media_id);
    return it == tags_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingStore::EmbeddingStore(std::vector<EmbeddingRecord> records) {
    if (!records.empty()) dim_ = records.front().vector.size();
    ids_.reserve(records.size());
    data_.reserve(records.size() * dim_);
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        if (r.vector.size() != dim_) {
            throw ValidationError("embedding '" + r.media_id + "' has dimension " + std::to_string(r.vector.size()) +
                                  ", expected " + std::to_string(dim_));
        }
        ids_.push_back(std::move(r.media_id));
        data_.insert(data_.end(), r.vector.begin(), r.vector.end());
    }
    build_index();
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (data_.size() != ids_.size() * dim_) throw ValidationError("embedding data size does not match count x dim");
    build_index();
}

void EmbeddingStore::build_index() {
    if (!ids_.empty() && dim_ == 0) throw ValidationError("embeddings must have positive dimension");
    for (float v : data_) {
        if (!std::isfinite(v)) throw ValidationError("non-finite embedding component");
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) throw ValidationError("duplicate embedding media_id '" + ids_[i] + "'");
    }
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view media_id) const {
    auto it = index_.find(std::string(media_id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

template <class UInt>
void put_le(std::ostream& out, UInt v) {
    std::array<char, sizeof(UInt)> bytes;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <class UInt>
UInt get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(UInt)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw FormatError(std::string("truncated embedding file while reading ") + what);
    }
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void write_embeddings_binary(std::ostream& out, const EmbeddingStore& store) {
    out.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
    put_le<std::uint32_t>(out, kEmbeddingVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
    put_le<std::uint64_t>(out, store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& id = store.ids()[i];
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (float v : store.row(i)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw Error("failed writing embeddings");
}

EmbeddingStore read_embeddings_binary(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
        throw FormatError("bad magic: not a BEMB embedding file");
    }
    auto version = get_le<std::uint32_t>(in, "version");
    if (version != kEmbeddingVersion) throw FormatError("unsupported BEMB version " + std::to_string(version));
    auto dim = get_le<std::uint32_t>(in, "dim");
    auto count = get_le<std::uint64_t>(in, "count");
    if (count > 0 && dim == 0) throw FormatError("zero dimension with non-empty record set");

    std::vector<std::string> ids;
    std::vector<float> data;
    // Cap the up-front reservation; a corrupt count must not trigger a huge allocation.
    ids.reserve(std::min<std::uint64_t>(count, 1u << 20));
    data.reserve(std::min<std::uint64_t>(count * dim, 1u << 24));
    for (std::uint64_t i = 0; i < count; ++i) {
        auto len = get_le<std::uint32_t>(in, "id length");
        std::string id(len, '\0');
        if (len && !in.read(id.data(), len)) throw FormatError("truncated embedding file while reading id");
        ids.push_back(std::move(id));
        for (std::uint32_t j = 0; j < dim; ++j) data.push_back(std::bit_cast<float>(get_le<std::uint32_t>(in, "vector")));
    }
    try {
        return EmbeddingStore(dim, std::move(ids), std::move(data));
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
}

void write_embeddings_text(std::ostream& out, const EmbeddingStore& store) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        json obj;
        obj["media_id"] = store.ids()[i];
        json vec = json::array();
        // Widened to double; the shortest round-trip repr of the double reads
        // back to the identical float.
        for (float v : store.row(i)) vec.push_back(static_cast<double>(v));
        obj["vector"] = std::move(vec);
        out << obj.dump() << '\n';
    }
}

EmbeddingStore read_embeddings_text(std::istream& in) {
    std::vector<EmbeddingRecord> records;
    std::optional<std::size_t> dim;
    for_each_json_line(in, [&](const json& obj, std::size_t line) {
        EmbeddingRecord r;
        r.media_id = get_string(obj, "media_id", line);
        const json& vec = require(obj, "vector", line);
        if (!vec.is_array()) throw ParseError("'vector' must be an array", line);
        r.vector.reserve(vec.size());
        for (const auto& v : vec) {
            if (!v.is_number()) throw ParseError("'vector' must contain numbers", line);
            double d = v.get<double>();
            auto f = static_cast<float>(d);
            if (!std::isfinite(d) || !std::isfinite(f)) throw ValidationError("non-finite embedding component", line);
            r.vector.push_back(f);
        }
        if (!dim) dim = r.vector.size();
        if (r.vector.size() != *dim) {
            throw ValidationError("dimension " + std::to_string(r.vector.size()) + " does not match store dimension " +
                                      std::to_string(*dim),
                                  line);
        }
        if (r.vector.empty()) throw ValidationError("empty embedding vector", line);
        records.push_back(std::move(r));
    });
    return EmbeddingStore(std::move(records));
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    if (format == EmbeddingFormat::binary) {
        auto in = open_input(path, std::ios::in | std::ios::binary);
        return read_embeddings_binary(in);
    }
    auto in = open_input(path);
    return read_embeddings_text(in);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    char magic[4] = {};
    {
        auto in = open_input(path, std::ios::in | std::ios::binary);
        in.read(magic, 4);
    }
    bool binary = std::memcmp(magic, kEmbeddingMagic, 4) == 0;
    return load_embeddings(path, binary ? EmbeddingFormat::binary : EmbeddingFormat::text);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store, EmbeddingFormat format) {
    std::ofstream out(path, format == EmbeddingFormat::binary ? std::ios::out | std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    if (format == EmbeddingFormat::binary) {
        write_embeddings_binary(out, store);
    } else {
        write_embeddings_text(out, store);
    }
}

// ---------------------------------------------------------------------------
// Protocols

ProtocolManifest make_protocol(std::vector<GalleryEntry> gallery, std::vector<ProbeEntry> probes) {
    std::map<std::string, bool> subjects;  // subject -> distractor
    for (const auto& g : gallery) {
        if (!subjects.emplace(g.subject_id, g.distractor).second) {
            throw ValidationError("duplicate gallery subject '" + g.subject_id + "'");
        }
    }
    std::set<std::string> probe_ids;
    for (const auto& p : probes) {
        if (!probe_ids.insert(p.probe_id).second) throw ValidationError("duplicate probe id '" + p.probe_id + "'");
        if (!p.true_subject_id) continue;
        auto it = subjects.find(*p.true_subject_id);
        if (it != subjects.end() && it->second) {
            throw ValidationError("probe '" + p.probe_id + "' is a mate of distractor subject '" + it->first + "'");
        }
    }
    return {std::move(gallery), std::move(probes)};
}

ProtocolManifest parse_protocol(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed protocol JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("protocol must be a JSON object");
    std::vector<GalleryEntry> gallery;
    std::vector<ProbeEntry> probes;
    try {
        for (const auto& g : doc.at("gallery")) {
            GalleryEntry e;
            e.subject_id = g.at("subject_id").get<std::string>();
            e.media_ids = g.at("media_ids").get<std::vector<std::string>>();
            e.distractor = g.value("distractor", false);
            gallery.push_back(std::move(e));
        }
        for (const auto& p : doc.at("probes")) {
            ProbeEntry e;
            e.probe_id = p.at("probe_id").get<std::string>();
            e.media_id = p.at("media_id").get<std::string>();
            if (auto it = p.find("true_subject_id"); it != p.end() && !it->is_null()) {
                e.true_subject_id = it->get<std::string>();
            }
            probes.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid protocol: ") + e.what());
    }
    return make_protocol(std::move(gallery), std::move(probes));
}

ProtocolManifest load_protocol(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_protocol(in);
}

ProtocolReport validate_protocol(const ProtocolManifest& manifest, const EmbeddingStore& embeddings) {
    ProtocolReport report;
    std::set<std::string, std::less<>> gallery_subjects;
    std::set<std::string> missing;
    for (const auto& g : manifest.gallery) {
        gallery_subjects.insert(g.subject_id);
        if (g.distractor) ++report.distractors;
        for (const auto& m : g.media_ids) {
            if (!embeddings.find(m)) missing.insert(m);
        }
    }
    report.gallery_subjects = manifest.gallery.size();
    for (const auto& p : manifest.probes) {
        if (!embeddings.find(p.media_id)) missing.insert(p.media_id);
        bool mate = p.true_subject_id && gallery_subjects.contains(*p.true_subject_id);
        (mate ? report.mate_probes : report.non_mate_probes).push_back(p.probe_id);
    }
    report.missing_media.assign(missing.begin(), missing.end());
    return report;
}

}  // namespace wbeval
