#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "wbeval/error.hpp"
#include "wbeval/identify.hpp"
#include "wbeval/parallel.hpp"

namespace wbeval::identify {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fixed probe block; the GEMM blocking inside a block depends only on its
// shape, which keeps every score independent of the worker count.
constexpr std::size_t kProbeBlock = 64;

}  // namespace

ScoreMatrix::ScoreMatrix(std::vector<std::string> probe_ids, std::vector<std::string> gallery_ids,
                         std::vector<double> scores)
    : probe_ids_(std::move(probe_ids)), gallery_ids_(std::move(gallery_ids)), scores_(std::move(scores)) {
    if (scores_.size() != probe_ids_.size() * gallery_ids_.size()) {
        throw DomainError("score matrix size does not match its labels");
    }
}

ScoreMatrix ScoreMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    std::vector<double> scores;
    ids.reserve(rows.size());
    scores.reserve(rows.size() * cols());
    for (auto r : rows) {
        ids.push_back(probe_ids_.at(r));
        auto v = row(r);
        scores.insert(scores.end(), v.begin(), v.end());
    }
    return {std::move(ids), gallery_ids_, std::move(scores)};
}

ScoreMatrix ScoreMatrix::with_column(std::string gallery_id, std::span<const double> column) const {
    if (column.size() != rows()) throw DomainError("column length does not match row count");
    auto ids = gallery_ids_;
    ids.push_back(std::move(gallery_id));
    std::vector<double> scores;
    scores.reserve(rows() * (cols() + 1));
    for (std::size_t i = 0; i < rows(); ++i) {
        auto v = row(i);
        scores.insert(scores.end(), v.begin(), v.end());
        scores.push_back(column[i]);
    }
    return {probe_ids_, std::move(ids), std::move(scores)};
}

ScoreMatrix score(const ProbeSet& probes, std::span<const SubjectTemplate> gallery, const ScoreOptions& opts) {
    const std::size_t dim = probes.dim;
    const std::size_t np = probes.size();
    const std::size_t ng = gallery.size();
    if (probes.data.size() != np * dim) throw DomainError("probe data does not match count x dim");

    // Stack every template vector; owner[r] is the subject of stacked row r.
    std::size_t stacked = 0;
    for (const auto& t : gallery) {
        if (t.vectors.empty()) throw DomainError("template '" + t.subject_id + "' has no vectors");
        for (const auto& v : t.vectors) {
            if (v.size() != dim) {
                throw DomainError("template '" + t.subject_id + "' has dimension " + std::to_string(v.size()) +
                                  ", probes have " + std::to_string(dim));
            }
        }
        stacked += t.vectors.size();
    }
    RowMatrix g(static_cast<Eigen::Index>(stacked), static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> owner(stacked);
    std::vector<double> g_sq(stacked);
    {
        std::size_t r = 0;
        for (std::size_t j = 0; j < ng; ++j) {
            for (const auto& v : gallery[j].vectors) {
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v[k];
                    s += v[k] * v[k];
                }
                g_sq[r] = s;
                owner[r++] = j;
            }
        }
    }
    const bool single_vector = stacked == ng;

    std::vector<double> out(np * ng);
    const std::size_t blocks = (np + kProbeBlock - 1) / kProbeBlock;
    parallel_for(blocks, opts.threads, [&](std::size_t b) {
        const std::size_t begin = b * kProbeBlock;
        const std::size_t rows = std::min(kProbeBlock, np - begin);
        RowMatrix p(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
        std::vector<double> p_sq(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            auto v = probes.row(begin + i);
            double s = 0.0;
            for (double x : v) s += x * x;
            p_sq[i] = s;
            if (opts.metric == Metric::cosine && !(s > 0.0)) {
                throw DomainError("probe '" + probes.ids[begin + i] + "' has a zero vector");
            }
            const double scale = opts.metric == Metric::cosine ? 1.0 / std::sqrt(s) : 1.0;
            for (std::size_t k = 0; k < dim; ++k) {
                p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k] * scale;
            }
        }
        RowMatrix dots = p * g.transpose();

        for (std::size_t i = 0; i < rows; ++i) {
            double* dst = out.data() + (begin + i) * ng;
            if (single_vector) std::fill(dst, dst + ng, 0.0);
            else std::fill(dst, dst + ng, -std::numeric_limits<double>::infinity());
            for (std::size_t r = 0; r < stacked; ++r) {
                const double d = dots(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r));
                double s;
                if (opts.metric == Metric::cosine) {
                    s = std::clamp(d, -1.0, 1.0);
                } else {
                    s = -std::sqrt(std::max(0.0, p_sq[i] + g_sq[r] - 2.0 * d));
                }
                double& cell = dst[owner[r]];
                cell = single_vector ? s : std::max(cell, s);
            }
        }
    });

    std::vector<std::string> gallery_ids;
    gallery_ids.reserve(ng);
    for (const auto& t : gallery) gallery_ids.push_back(t.subject_id);
    return {probes.ids, std::move(gallery_ids), std::move(out)};
}

}  // namespace wbeval::identify
