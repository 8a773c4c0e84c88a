#pragma once

// Slow, independently written reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wbeval/detect_eval.hpp"
#include "wbeval/identify.hpp"
#include "wbeval/losses.hpp"
#include "wbeval/rng.hpp"

namespace oracle {

inline double box_iou(const wbeval::BoundingBox& a, const wbeval::BoundingBox& b) {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0 || iy <= 0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

/// Greedy matcher re-derived by repeated linear scans: at each step the
/// unvisited prediction with the highest score (then smallest area, then
/// lowest index) takes the free ground truth with the highest IoU (lowest
/// index on ties), if that IoU reaches the threshold.
inline wbeval::MatchCounts greedy_match(const std::vector<wbeval::DetectionRecord>& preds,
                                        const std::vector<wbeval::GroundTruthRecord>& gts, double threshold) {
    std::vector<bool> visited(preds.size(), false);
    std::vector<bool> taken(gts.size(), false);
    wbeval::MatchCounts c;
    for (std::size_t step = 0; step < preds.size(); ++step) {
        std::size_t best = preds.size();
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (visited[i]) continue;
            if (best == preds.size()) {
                best = i;
                continue;
            }
            const auto& p = preds[i];
            const auto& q = preds[best];
            const double pa = p.box.w * p.box.h;
            const double qa = q.box.w * q.box.h;
            if (p.score > q.score || (p.score == q.score && pa < qa)) best = i;
        }
        visited[best] = true;
        double best_iou = -1.0;
        std::size_t claim = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = box_iou(preds[best].box, gts[g].box);
            if (v > best_iou) {
                best_iou = v;
                claim = g;
            }
        }
        if (claim < gts.size() && best_iou >= threshold) {
            taken[claim] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    c.fn_ = static_cast<std::int64_t>(std::count(taken.begin(), taken.end(), false));
    return c;
}

/// Batch-hard triplet loss by enumerating every (anchor, positive, negative)
/// triple and keeping the largest hinge per anchor.
inline double all_triplets(const std::vector<std::vector<double>>& x, const std::vector<std::string>& labels,
                           double margin) {
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t k = 0; k < x[a].size(); ++k) {
            const double d = x[a][k] - x[b][k];
            s += d * d;
        }
        return std::sqrt(s);
    };
    double total = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        double worst = 0.0;
        for (std::size_t p = 0; p < x.size(); ++p) {
            if (p == a || labels[p] != labels[a]) continue;
            for (std::size_t n = 0; n < x.size(); ++n) {
                if (labels[n] == labels[a]) continue;
                worst = std::max(worst, dist(a, p) - dist(a, n) + margin);
            }
        }
        total += worst;
    }
    return total / static_cast<double>(x.size());
}

/// Random identification instance: probe and gallery score matrix plus the
/// protocol that labels it.
struct IdInstance {
    wbeval::ProtocolManifest manifest;
    wbeval::identify::ScoreMatrix matrix;
};

/// Scores are drawn from a small grid so that ties are common.
inline IdInstance random_instance(wbeval::Rng& rng, std::size_t max_probes = 50, std::size_t max_gallery = 100) {
    const std::size_t g = 2 + rng.uniform_index(max_gallery - 1);
    const std::size_t distractors = 1 + rng.uniform_index(g - 1);
    const std::size_t p = 1 + rng.uniform_index(max_probes);
    std::vector<wbeval::GalleryEntry> gallery;
    std::vector<std::string> gallery_ids;
    for (std::size_t j = 0; j < g; ++j) {
        const std::string id = "s" + std::to_string(j);
        gallery.push_back({id, {"g" + std::to_string(j)}, j >= g - distractors});
        gallery_ids.push_back(id);
    }
    const std::size_t mated = g - distractors;
    std::vector<wbeval::ProbeEntry> probes;
    std::vector<std::string> probe_ids;
    for (std::size_t i = 0; i < p; ++i) {
        const std::string id = "p" + std::to_string(i);
        // Roughly a third of the searches are non-mates; force one mate.
        std::optional<std::string> truth;
        if (i == 0 || rng.uniform_index(3) != 0) truth = "s" + std::to_string(rng.uniform_index(mated));
        else if (rng.uniform_index(2) == 0) truth = "unknown" + std::to_string(i);
        probes.push_back({id, "m" + std::to_string(i), truth});
        probe_ids.push_back(id);
    }
    const double levels = static_cast<double>(5 + rng.uniform_index(60));
    std::vector<double> scores(p * g);
    for (auto& s : scores) s = std::floor(rng.uniform01() * levels) / levels * 2.0 - 1.0;
    IdInstance inst{wbeval::make_protocol(std::move(gallery), std::move(probes)),
                    wbeval::identify::ScoreMatrix(probe_ids, gallery_ids, std::move(scores))};
    return inst;
}

/// Mate column of each row, or -1.
inline std::vector<long> mate_columns(const IdInstance& inst) {
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < inst.matrix.cols(); ++j) col[std::string(inst.matrix.gallery_ids()[j])] = j;
    std::vector<long> out;
    for (const auto& p : inst.manifest.probes) {
        long c = -1;
        if (p.true_subject_id) {
            if (auto it = col.find(*p.true_subject_id); it != col.end()) c = static_cast<long>(it->second);
        }
        out.push_back(c);
    }
    return out;
}

/// Pessimistic rank by sorting the row: the mate is placed after every entry
/// that ties it.
inline std::size_t sorted_rank(const std::vector<double>& row, std::size_t mate) {
    std::vector<std::pair<double, int>> order;
    for (std::size_t j = 0; j < row.size(); ++j) order.push_back({row[j], j == mate ? 0 : 1});
    std::sort(order.begin(), order.end(), [](auto a, auto b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (order[r].second == 0) return r + 1;
    }
    return 0;
}

inline std::vector<double> row_of(const wbeval::identify::ScoreMatrix& m, std::size_t i) {
    auto r = m.row(i);
    return {r.begin(), r.end()};
}

/// Rank-k accuracy over the mate rows.
inline double rank_k(const IdInstance& inst, std::size_t k) {
    const auto mates = mate_columns(inst);
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < mates.size(); ++i) {
        if (mates[i] < 0) continue;
        ++total;
        if (sorted_rank(row_of(inst.matrix, i), static_cast<std::size_t>(mates[i])) <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

struct TarPoint {
    double threshold;
    double tar;
    double far;
};

/// TAR at a FAR target from fully sorted genuine and impostor lists.
inline TarPoint tar_at(const IdInstance& inst, double target) {
    const auto mates = mate_columns(inst);
    std::vector<double> genuine;
    std::vector<double> impostor;
    for (std::size_t i = 0; i < mates.size(); ++i) {
        for (std::size_t j = 0; j < inst.matrix.cols(); ++j) {
            if (static_cast<long>(j) == mates[i]) genuine.push_back(inst.matrix.at(i, j));
            else impostor.push_back(inst.matrix.at(i, j));
        }
    }
    std::sort(impostor.begin(), impostor.end(), std::greater<>());
    const auto m = static_cast<std::size_t>(std::floor(static_cast<long double>(target) * impostor.size()));
    const double tau = m + 1 > impostor.size() ? std::numeric_limits<double>::infinity() : impostor[m];
    const auto above = [tau](const std::vector<double>& v) {
        return static_cast<double>(std::count_if(v.begin(), v.end(), [tau](double s) { return s > tau; })) /
               static_cast<double>(v.size());
    };
    return {tau, above(genuine), above(impostor)};
}

/// (FPIR, FNIR) at one threshold by direct counting.
inline std::pair<double, double> open_set_at(const IdInstance& inst, double tau, std::size_t rank_cap) {
    const auto mates = mate_columns(inst);
    std::size_t alarms = 0;
    std::size_t non_mates = 0;
    std::size_t misses = 0;
    std::size_t mate_count = 0;
    for (std::size_t i = 0; i < mates.size(); ++i) {
        const auto row = row_of(inst.matrix, i);
        if (mates[i] < 0) {
            ++non_mates;
            if (*std::max_element(row.begin(), row.end()) >= tau) ++alarms;
        } else {
            ++mate_count;
            const auto col = static_cast<std::size_t>(mates[i]);
            if (row[col] < tau || sorted_rank(row, col) > rank_cap) ++misses;
        }
    }
    return {static_cast<double>(alarms) / static_cast<double>(non_mates),
            static_cast<double>(misses) / static_cast<double>(mate_count)};
}

}  // namespace oracle
