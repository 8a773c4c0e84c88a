#include <doctest.h>

#include <cmath>
#include <set>

#include "wbeval/error.hpp"
#include "wbeval/sampling.hpp"

using namespace wbeval;
using namespace wbeval::sampling;

TEST_CASE("rng sequence is the standard mt19937_64 sequence") {
    // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
    Rng rng(5489);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next();
    CHECK(v == 9981545732273789042ull);
    CHECK(Rng::kName == "mt19937_64");
}

TEST_CASE("uniform_index stays in range and covers it") {
    Rng rng(9);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.uniform_index(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("derived seeds differ per stream") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}

TEST_CASE("dataset-balanced weights worked examples") {
    const auto w = dataset_balanced_weights(std::map<std::string, std::size_t>{{"A", 1}, {"B", 3}});
    CHECK(w.per_dataset.at("A") == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.per_dataset.at("B") == doctest::Approx(0.5).epsilon(1e-15));
    const auto items = w.per_item();
    CHECK(items.at("A/0") == doctest::Approx(0.5).epsilon(1e-15));
    for (int i = 0; i < 3; ++i) CHECK(items.at("B/" + std::to_string(i)) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    const auto sym = dataset_balanced_weights(std::map<std::string, std::size_t>{{"A", 2}, {"B", 2}});
    for (const auto& it : sym.items) CHECK(it.probability == 0.25);

    CHECK_THROWS_AS(dataset_balanced_weights(std::map<std::string, std::size_t>{{"A", 0}, {"B", 3}}),
                    EmptyDatasetError);
}

TEST_CASE("dataset weights are equal per dataset and normalized") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, std::size_t> sizes;
        for (int d = 0, n = 1 + int(rng.uniform_index(8)); d < n; ++d) {
            sizes["d" + std::to_string(d)] = 1 + rng.uniform_index(1000);
        }
        const auto w = dataset_balanced_weights(sizes);
        double lo = 1.0;
        double hi = 0.0;
        double dsum = 0.0;
        for (const auto& [tag, p] : w.per_dataset) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
            dsum += p;
        }
        CHECK(hi - lo < 1e-12);
        CHECK(std::abs(dsum - 1.0) <= 1e-12);
        long double isum = 0.0L;
        for (const auto& it : w.items) isum += it.probability;
        CHECK(std::abs(static_cast<double>(isum) - 1.0) <= 1e-12);
    }
}

TEST_CASE("sample_media determinism and frequencies") {
    const auto w = dataset_balanced_weights(std::map<std::string, std::size_t>{{"A", 1}, {"B", 3}});
    const auto a = sample_media(w, 10000, 42);
    CHECK(a == sample_media(w, 10000, 42));
    CHECK(a != sample_media(w, 10000, 43));
    const double freq = static_cast<double>(std::count(a.begin(), a.end(), "A/0")) / 10000.0;
    CHECK(std::abs(freq - 0.5) <= 0.03);

    const auto single = dataset_balanced_weights(std::map<std::string, std::size_t>{{"only", 1}});
    for (const auto& m : sample_media(single, 20, 1)) CHECK(m == "only/0");
}

TEST_CASE("empirical dataset frequencies within four sigma") {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        std::map<std::string, std::size_t> sizes;
        const int n = 2 + int(rng.uniform_index(5));
        for (int d = 0; d < n; ++d) sizes["d" + std::to_string(d)] = 1 + rng.uniform_index(200);
        const auto w = dataset_balanced_weights(sizes);
        const std::size_t draws = 100000;
        std::map<std::string, std::size_t> hits;
        for (const auto& m : sample_media(w, draws, rng.next())) hits[m.substr(0, m.find('/'))]++;
        const double p = 1.0 / n;
        const double sigma = std::sqrt(p * (1 - p) / draws);
        for (const auto& [tag, c] : hits) CHECK(std::abs(double(c) / draws - p) <= 4 * sigma);
    }
}

namespace {

std::map<std::string, std::vector<std::string>> subjects(int count, int media_each) {
    std::map<std::string, std::vector<std::string>> out;
    for (int s = 0; s < count; ++s) {
        for (int m = 0; m < media_each; ++m) out["s" + std::to_string(s)].push_back("s" + std::to_string(s) + "m" + std::to_string(m));
    }
    return out;
}

}  // namespace

TEST_CASE("pk batches have n distinct subjects with k media each") {
    auto index = subjects(10, 6);
    index["short"] = {"short-0", "short-1"};
    const auto plan = pk_batches(index, 4, 4, 200, 99);
    REQUIRE(plan.batches.size() == 200);
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        const auto& batch = plan.batches[b];
        CHECK(batch.size() == 16);
        std::set<std::string> distinct(plan.subjects[b].begin(), plan.subjects[b].end());
        CHECK(distinct.size() == 4);
        for (std::size_t s = 0; s < 4; ++s) {
            const auto& owned = index.at(plan.subjects[b][s]);
            std::set<std::string> used;
            for (std::size_t j = s * 4; j < (s + 1) * 4; ++j) {
                CHECK(std::find(owned.begin(), owned.end(), batch[j]) != owned.end());
                used.insert(batch[j]);
            }
            if (owned.size() >= 4) CHECK(used.size() == 4);
        }
    }
    CHECK(plan.batches == pk_batches(index, 4, 4, 200, 99).batches);
}

TEST_CASE("subjects with fewer than k media repeat") {
    const auto index = subjects(2, 2);
    const auto plan = pk_batches(index, 2, 4, 1, 3);
    for (std::size_t s = 0; s < 2; ++s) {
        std::multiset<std::string> ms(plan.batches[0].begin() + s * 4, plan.batches[0].begin() + (s + 1) * 4);
        CHECK(ms.size() == 4);
        std::set<std::string> unique(ms.begin(), ms.end());
        CHECK(unique.size() <= 2);
    }
}

TEST_CASE("pk batch preconditions") {
    CHECK_THROWS_AS(pk_batches(subjects(3, 4), 5, 4, 1, 0), InfeasibleError);
    CHECK_THROWS_AS(pk_batches(subjects(3, 4), 1, 4, 1, 0), DomainError);
    CHECK_THROWS_AS(pk_batches(subjects(3, 4), 2, 1, 1, 0), DomainError);
}

TEST_CASE("test strides per dataset") {
    CHECK(default_test_stride("struct") == 300);
    CHECK(default_test_stride("rand") == 300);
    CHECK(default_test_stride("close_range") == 300);
    CHECK(default_test_stride("500m") == 150);
    CHECK(default_test_stride("uav") == 150);
}

TEST_CASE("frame window worked examples") {
    auto w = frame_window(900, {300, 5, WindowMode::test}, 0);
    CHECK(w.indices == std::vector<std::int64_t>{0, 300, 600});
    CHECK(w.mask == std::vector<std::uint8_t>{1, 1, 1});

    w = frame_window(7, {3, 5, WindowMode::train}, 0);
    CHECK(w.indices == std::vector<std::int64_t>{0, 3, 6, -1, -1});
    CHECK(w.mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0});

    w = frame_window(1, {150, 5, WindowMode::train}, 12);
    CHECK(w.indices == std::vector<std::int64_t>{0, -1, -1, -1, -1});
    CHECK(w.valid_count() == 1);
}

TEST_CASE("frame window properties") {
    Rng rng(61);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::int64_t frames = 1 + std::int64_t(rng.uniform_index(3000));
        const std::int64_t stride = 1 + std::int64_t(rng.uniform_index(400));
        const std::size_t t = 1 + rng.uniform_index(12);
        const auto mode = rng.uniform_index(2) ? WindowMode::train : WindowMode::test;
        const bool subset = rng.uniform_index(2) == 1;
        const std::uint64_t seed = rng.next();
        const auto w = frame_window(frames, {stride, t, mode, subset}, seed);
        const auto strided = static_cast<std::size_t>((frames - 1) / stride + 1);
        if (mode == WindowMode::test) {
            CHECK(w.length() == strided);
        } else {
            CHECK(w.length() == t);
        }
        CHECK(w.valid_count() == (mode == WindowMode::test ? strided : std::min(t, strided)));
        bool padding = false;
        for (std::size_t i = 0; i < w.length(); ++i) {
            CHECK((w.mask[i] == 1) == (w.indices[i] >= 0));
            if (w.mask[i] == 0) {
                padding = true;
                continue;
            }
            CHECK_FALSE(padding);
            CHECK(w.indices[i] % stride == 0);
            CHECK(w.indices[i] < frames);
            if (i > 0) CHECK(w.indices[i] > w.indices[i - 1]);
            if (i > 0 && mode == WindowMode::train && !subset) CHECK(w.indices[i] - w.indices[i - 1] == stride);
        }
        const auto again = frame_window(frames, {stride, t, mode, subset}, seed);
        CHECK(again.indices == w.indices);
    }
}

TEST_CASE("train windows start uniformly") {
    std::map<std::int64_t, int> starts;
    for (std::uint64_t s = 0; s < 4000; ++s) starts[frame_window(10, {1, 7, WindowMode::train}, s).indices[0]]++;
    CHECK(starts.size() == 4);
    for (const auto& [start, count] : starts) CHECK(std::abs(count - 1000) < 150);
}
