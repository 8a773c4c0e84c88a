#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wbeval/error.hpp"
#include "wbeval/identify.hpp"

namespace wbeval::identify {

std::size_t SearchTruth::mates() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(mate_column.begin(), mate_column.end(), [](std::size_t c) { return c != npos; }));
}

SearchTruth resolve_truth(const ScoreMatrix& matrix, const ProtocolManifest& manifest) {
    std::map<std::string_view, const ProbeEntry*> probes;
    for (const auto& p : manifest.probes) probes.emplace(p.probe_id, &p);
    std::map<std::string_view, std::size_t> columns;
    for (std::size_t j = 0; j < matrix.cols(); ++j) columns.emplace(matrix.gallery_ids()[j], j);

    SearchTruth truth;
    truth.mate_column.reserve(matrix.rows());
    for (const auto& id : matrix.probe_ids()) {
        auto it = probes.find(id);
        if (it == probes.end()) throw ProtocolError("score row '" + id + "' is not a probe of the protocol");
        std::size_t col = SearchTruth::npos;
        if (const auto& subject = it->second->true_subject_id) {
            if (auto c = columns.find(*subject); c != columns.end()) col = c->second;
        }
        truth.mate_column.push_back(col);
    }
    return truth;
}

ScoreMatrix mate_rows(const ScoreMatrix& matrix, const ProtocolManifest& manifest) {
    const auto truth = resolve_truth(matrix, manifest);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        if (truth.is_mate(i)) rows.push_back(i);
    }
    return matrix.select_rows(rows);
}

std::size_t pessimistic_rank(std::span<const double> row, std::size_t mate_column) noexcept {
    const double mate = row[mate_column];
    std::size_t rank = 1;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (j != mate_column && row[j] >= mate) ++rank;
    }
    return rank;
}

namespace {

/// Pessimistic mate rank for every row; all rows must be mate searches.
std::vector<std::size_t> closed_set_ranks(const ScoreMatrix& matrix, const ProtocolManifest& manifest) {
    const auto truth = resolve_truth(matrix, manifest);
    if (matrix.rows() == 0) throw ProtocolError("no probes to rank");
    std::vector<std::size_t> ranks(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        if (!truth.is_mate(i)) {
            throw ProtocolError("probe '" + matrix.probe_ids()[i] +
                                "' is a non-mate search; rank metrics need mate searches only");
        }
        ranks[i] = pessimistic_rank(matrix.row(i), truth.mate_column[i]);
    }
    return ranks;
}

}  // namespace

Curve cmc(const ScoreMatrix& matrix, const ProtocolManifest& manifest, std::size_t max_rank) {
    const auto ranks = closed_set_ranks(matrix, manifest);
    std::vector<std::size_t> hist(max_rank + 1, 0);
    for (auto r : ranks) {
        if (r <= max_rank) ++hist[r];
    }
    Curve c{"rank", "accuracy", {}};
    c.points.reserve(max_rank);
    std::size_t cumulative = 0;
    for (std::size_t r = 1; r <= max_rank; ++r) {
        cumulative += hist[r];
        c.points.push_back({static_cast<double>(r),
                            static_cast<double>(cumulative) / static_cast<double>(ranks.size())});
    }
    return c;
}

double rank_k_accuracy(const ScoreMatrix& matrix, const ProtocolManifest& manifest, std::size_t k) {
    const auto ranks = closed_set_ranks(matrix, manifest);
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<TarAtFar> tar_at_far(const ScoreMatrix& matrix, const ProtocolManifest& manifest,
                                 std::span<const double> far_targets) {
    for (double f : far_targets) {
        if (!(f >= 0.0 && f < 1.0)) throw DomainError("FAR target " + std::to_string(f) + " outside [0, 1)");
    }
    const auto truth = resolve_truth(matrix, manifest);
    if (far_targets.empty()) return {};
    std::vector<double> genuine;
    std::vector<double> impostor;
    impostor.reserve(matrix.rows() * (matrix.cols() > 0 ? matrix.cols() - 1 : 0));
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        auto row = matrix.row(i);
        const std::size_t mate = truth.mate_column[i];
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j == mate) {
                genuine.push_back(row[j]);
            } else {
                impostor.push_back(row[j]);
            }
        }
    }
    if (genuine.empty()) throw ProtocolError("no genuine comparisons: the protocol has no mate searches");
    if (impostor.empty()) throw ProtocolError("no impostor comparisons");
    std::sort(genuine.begin(), genuine.end());

    const auto n_imp = impostor.size();
    auto order_index = [n_imp](double f) {
        return static_cast<std::size_t>(std::floor(static_cast<long double>(f) * static_cast<long double>(n_imp)));
    };
    // Only the top (max m + 1) impostor scores are ever consulted.
    std::size_t top = 0;
    for (double f : far_targets) top = std::max(top, std::min(order_index(f) + 1, n_imp));
    std::nth_element(impostor.begin(), impostor.begin() + static_cast<std::ptrdiff_t>(top - 1), impostor.end(),
                     std::greater<>());
    std::sort(impostor.begin(), impostor.begin() + static_cast<std::ptrdiff_t>(top), std::greater<>());

    std::vector<TarAtFar> out;
    out.reserve(far_targets.size());
    for (double f : far_targets) {
        const std::size_t m = order_index(f);
        TarAtFar r;
        r.far_target = f;
        r.threshold = m + 1 > n_imp ? std::numeric_limits<double>::infinity() : impostor[m];
        const auto genuine_accepted =
            genuine.end() - std::upper_bound(genuine.begin(), genuine.end(), r.threshold);
        r.tar = static_cast<double>(genuine_accepted) / static_cast<double>(genuine.size());
        // Impostors strictly above the threshold all sit before position m.
        const auto impostor_accepted =
            std::partition_point(impostor.begin(), impostor.begin() + static_cast<std::ptrdiff_t>(std::min(m, top)),
                                 [&](double s) { return s > r.threshold; }) -
            impostor.begin();
        r.achieved_far = static_cast<double>(impostor_accepted) / static_cast<double>(n_imp);
        out.push_back(r);
    }
    return out;
}

Curve fnir_fpir(const ScoreMatrix& matrix, const ProtocolManifest& manifest, const OpenSetOptions& opts) {
    const auto truth = resolve_truth(matrix, manifest);
    std::vector<double> mate_scores;      // mates within the rank cap
    std::size_t rank_misses = 0;          // mates beyond the rank cap
    std::vector<double> non_mate_tops;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        auto row = matrix.row(i);
        if (truth.is_mate(i)) {
            const std::size_t col = truth.mate_column[i];
            if (opts.rank_cap && pessimistic_rank(row, col) > *opts.rank_cap) {
                ++rank_misses;
            } else {
                mate_scores.push_back(row[col]);
            }
        } else {
            if (row.empty()) throw ProtocolError("empty gallery");
            non_mate_tops.push_back(*std::max_element(row.begin(), row.end()));
        }
    }
    const std::size_t n_mate = mate_scores.size() + rank_misses;
    if (n_mate == 0) throw ProtocolError("no mate searches");
    if (non_mate_tops.empty()) throw ProtocolError("no non-mate searches; FPIR is undefined");

    std::vector<double> thresholds = opts.thresholds;
    if (thresholds.empty()) {
        thresholds.insert(thresholds.end(), non_mate_tops.begin(), non_mate_tops.end());
        thresholds.insert(thresholds.end(), mate_scores.begin(), mate_scores.end());
        thresholds.push_back(std::numeric_limits<double>::infinity());
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::sort(mate_scores.begin(), mate_scores.end());
    std::sort(non_mate_tops.begin(), non_mate_tops.end());
    Curve c{"fpir", "fnir", {}};
    c.points.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto alarms = non_mate_tops.end() - std::lower_bound(non_mate_tops.begin(), non_mate_tops.end(), t);
        const auto below = std::lower_bound(mate_scores.begin(), mate_scores.end(), t) - mate_scores.begin();
        CurvePoint p;
        p.x = static_cast<double>(alarms) / static_cast<double>(non_mate_tops.size());
        p.y = static_cast<double>(static_cast<std::size_t>(below) + rank_misses) / static_cast<double>(n_mate);
        p.threshold = t;
        c.points.push_back(p);
    }
    return c;
}

}  // namespace wbeval::identify
