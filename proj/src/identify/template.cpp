#include <cmath>

#include "wbeval/error.hpp"
#include "wbeval/identify.hpp"

namespace wbeval::identify {

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> normalized(std::span<const double> v, const std::string& subject_id) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateTemplateError("subject '" + subject_id + "' has a zero or non-finite media vector");
    }
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out) x /= n;
    return out;
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

std::size_t lookup(const EmbeddingStore& store, const std::string& media_id) {
    auto row = store.find(media_id);
    if (!row) throw ProtocolError("no embedding for media '" + media_id + "'");
    return *row;
}

}  // namespace

SubjectTemplate aggregate_gallery(std::string subject_id, const std::vector<std::vector<double>>& media_vectors,
                                  Aggregation method) {
    if (media_vectors.empty()) throw DegenerateTemplateError("subject '" + subject_id + "' has no media");
    const std::size_t dim = media_vectors.front().size();
    for (const auto& v : media_vectors) {
        if (v.size() != dim) throw DomainError("subject '" + subject_id + "' mixes vector dimensions");
    }

    SubjectTemplate t;
    t.media_count = media_vectors.size();
    t.method = method;
    if (method == Aggregation::max_score) {
        for (const auto& v : media_vectors) t.vectors.push_back(normalized(v, subject_id));
    } else {
        std::vector<double> mean(dim, 0.0);
        for (const auto& v : media_vectors) {
            auto u = normalized(v, subject_id);
            for (std::size_t i = 0; i < dim; ++i) mean[i] += u[i];
        }
        for (auto& x : mean) x /= static_cast<double>(media_vectors.size());
        // Relative to unit inputs, anything this small is cancellation noise.
        if (norm(mean) < 1e-12) throw DegenerateTemplateError("subject '" + subject_id + "' has a zero mean vector");
        t.vectors.push_back(normalized(mean, subject_id));
    }
    t.subject_id = std::move(subject_id);
    return t;
}

std::vector<SubjectTemplate> build_gallery(const ProtocolManifest& manifest, const EmbeddingStore& embeddings,
                                           Aggregation method) {
    std::vector<SubjectTemplate> out;
    out.reserve(manifest.gallery.size());
    for (const auto& g : manifest.gallery) {
        std::vector<std::vector<double>> vectors;
        for (const auto& m : g.media_ids) vectors.push_back(widen(embeddings.row(lookup(embeddings, m))));
        out.push_back(aggregate_gallery(g.subject_id, vectors, method));
    }
    return out;
}

ProbeSet build_probes(const ProtocolManifest& manifest, const EmbeddingStore& embeddings) {
    ProbeSet p;
    p.dim = embeddings.dim();
    p.ids.reserve(manifest.probes.size());
    p.data.reserve(manifest.probes.size() * p.dim);
    for (const auto& probe : manifest.probes) {
        auto v = embeddings.row(lookup(embeddings, probe.media_id));
        p.ids.push_back(probe.probe_id);
        p.data.insert(p.data.end(), v.begin(), v.end());
    }
    return p;
}

}  // namespace wbeval::identify
