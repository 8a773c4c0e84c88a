#include "wbeval/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "wbeval/error.hpp"

namespace wbeval::sampling {

std::int64_t default_test_stride(std::string_view dataset_tag) {
    if (dataset_tag == "struct" || dataset_tag == "rand" || dataset_tag == "close_range") return 300;
    return 150;
}

std::map<std::string, double> DatasetWeights::per_item() const {
    std::map<std::string, double> out;
    for (const auto& item : items) out[item.media_id] += item.probability;
    return out;
}

DatasetWeights dataset_balanced_weights(const std::map<std::string, std::vector<std::string>>& items_by_tag) {
    if (items_by_tag.empty()) throw EmptyDatasetError("no datasets given");
    double total = 0.0;
    for (const auto& [tag, items] : items_by_tag) {
        if (items.empty()) throw EmptyDatasetError("dataset '" + tag + "' is empty");
        // Sum of |d_i| copies of 1/|d_i|; each dataset contributes exactly 1.
        total += 1.0;
    }
    DatasetWeights w;
    for (const auto& [tag, items] : items_by_tag) {
        const double p = 1.0 / (static_cast<double>(items.size()) * total);
        for (const auto& id : items) w.items.push_back({id, tag, p});
        w.per_dataset[tag] = 1.0 / total;
    }
    return w;
}

DatasetWeights dataset_balanced_weights(const std::map<std::string, std::size_t>& sizes) {
    std::map<std::string, std::vector<std::string>> items;
    for (const auto& [tag, size] : sizes) {
        auto& v = items[tag];
        for (std::size_t i = 0; i < size; ++i) v.push_back(tag + "/" + std::to_string(i));
    }
    return dataset_balanced_weights(items);
}

std::vector<std::string> sample_media(const DatasetWeights& weights, std::size_t count, std::uint64_t seed) {
    if (weights.items.empty()) throw EmptyDatasetError("no items to sample");
    std::vector<double> cumulative(weights.items.size());
    double running = 0.0;
    for (std::size_t i = 0; i < weights.items.size(); ++i) {
        running += weights.items[i].probability;
        cumulative[i] = running;
    }
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = rng.uniform01() * running;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
        out.push_back(weights.items[idx].media_id);
    }
    return out;
}

BatchPlan pk_batches(const std::map<std::string, std::vector<std::string>>& media_by_subject, std::size_t n,
                     std::size_t k, std::size_t num_batches, std::uint64_t seed) {
    if (n < 2 || k < 2) throw DomainError("pk_batches needs n >= 2 and k >= 2");
    std::vector<const std::pair<const std::string, std::vector<std::string>>*> subjects;
    for (const auto& entry : media_by_subject) {
        if (!entry.second.empty()) subjects.push_back(&entry);
    }
    if (subjects.size() < n) {
        throw InfeasibleError("need " + std::to_string(n) + " subjects per batch but only " +
                              std::to_string(subjects.size()) + " have media");
    }

    Rng rng(seed);
    BatchPlan plan;
    plan.n = n;
    plan.k = k;
    std::vector<std::size_t> order(subjects.size());
    for (std::size_t b = 0; b < num_batches; ++b) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<std::string> chosen;
        std::vector<std::string> batch;
        batch.reserve(n * k);
        // Partial Fisher-Yates: the first n slots become the sample.
        for (std::size_t i = 0; i < n; ++i) {
            std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
            const auto& [subject, media] = *subjects[order[i]];
            chosen.push_back(subject);
            if (media.size() >= k) {
                std::vector<std::size_t> pick(media.size());
                std::iota(pick.begin(), pick.end(), std::size_t{0});
                for (std::size_t j = 0; j < k; ++j) {
                    std::swap(pick[j], pick[j + rng.uniform_index(pick.size() - j)]);
                    batch.push_back(media[pick[j]]);
                }
            } else {
                for (std::size_t j = 0; j < k; ++j) batch.push_back(media[rng.uniform_index(media.size())]);
            }
        }
        plan.subjects.push_back(std::move(chosen));
        plan.batches.push_back(std::move(batch));
    }
    return plan;
}

std::size_t FrameWindow::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

FrameWindow frame_window(std::int64_t frame_count, const FrameWindowOptions& opts, std::uint64_t seed) {
    if (frame_count < 1) throw DomainError("frame_count must be positive");
    if (opts.stride < 1) throw DomainError("stride must be positive");
    if (opts.length < 1) throw DomainError("window length must be positive");

    std::vector<std::int64_t> strided;
    for (std::int64_t f = 0; f < frame_count; f += opts.stride) strided.push_back(f);

    FrameWindow w;
    if (opts.mode == WindowMode::test) {
        w.indices = std::move(strided);
        w.mask.assign(w.indices.size(), 1);
        return w;
    }

    const std::size_t t = opts.length;
    if (strided.size() > t) {
        Rng rng(seed);
        if (opts.uniform_subset) {
            std::vector<std::size_t> pick(strided.size());
            std::iota(pick.begin(), pick.end(), std::size_t{0});
            for (std::size_t j = 0; j < t; ++j) std::swap(pick[j], pick[j + rng.uniform_index(pick.size() - j)]);
            pick.resize(t);
            std::sort(pick.begin(), pick.end());
            for (auto p : pick) w.indices.push_back(strided[p]);
        } else {
            const auto start = rng.uniform_index(strided.size() - t + 1);
            w.indices.assign(strided.begin() + static_cast<std::ptrdiff_t>(start),
                             strided.begin() + static_cast<std::ptrdiff_t>(start + t));
        }
        w.mask.assign(t, 1);
        return w;
    }
    w.indices = std::move(strided);
    w.mask.assign(w.indices.size(), 1);
    w.indices.resize(t, -1);
    w.mask.resize(t, 0);
    return w;
}

}  // namespace wbeval::sampling
