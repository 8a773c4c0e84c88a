#include "wbeval/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>

#include "wbeval/error.hpp"

namespace wbeval::report {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf;
    std::snprintf(buf.data(), buf.size(), "%.6g", v);
    return buf.data();
}

double round6(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_number(v).c_str(), nullptr);
}

json json_number(double v) {
    if (!std::isfinite(v)) return format_number(v);
    return round6(v);
}

namespace {

json metrics_json(const DetectionMetrics& m) {
    return {{"precision", json_number(m.scores.precision)},
            {"recall", json_number(m.scores.recall)},
            {"f1", json_number(m.scores.f1)},
            {"tp", m.counts.tp},
            {"fp", m.counts.fp},
            {"fn", m.counts.fn_}};
}

}  // namespace

json to_json(const DetectionReport& r) {
    json doc;
    doc["iou_thresholds"] = json::array();
    for (double t : r.thresholds) doc["iou_thresholds"].push_back(json_number(t));
    json groups = json::object();
    for (const auto& [tag, metrics] : r.per_group) {
        json g = json::object();
        for (std::size_t i = 0; i < r.thresholds.size(); ++i) g[format_number(r.thresholds[i])] = metrics_json(metrics[i]);
        groups[tag] = std::move(g);
    }
    doc["groups"] = std::move(groups);
    json pooled = json::object();
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) pooled[format_number(r.thresholds[i])] = metrics_json(r.pooled[i]);
    doc["pooled"] = std::move(pooled);
    return doc;
}

json to_json(const identify::TarAtFar& r) {
    return {{"far_target", json_number(r.far_target)},
            {"threshold", json_number(r.threshold)},
            {"tar", json_number(r.tar)},
            {"achieved_far", json_number(r.achieved_far)}};
}

void write_summary(std::ostream& out, const DetectionReport& r) {
    auto row = [&](const std::string& name, const std::vector<DetectionMetrics>& metrics) {
        for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
            const auto& m = metrics[i];
            out << name << "\tIoU=" << format_number(r.thresholds[i]) << "\tP=" << format_number(m.scores.precision)
                << "\tR=" << format_number(m.scores.recall) << "\tF1=" << format_number(m.scores.f1)
                << "\ttp=" << m.counts.tp << "\tfp=" << m.counts.fp << "\tfn=" << m.counts.fn_ << '\n';
        }
    };
    for (const auto& [tag, metrics] : r.per_group) row(tag, metrics);
    row("[pooled]", r.pooled);
}

void write_curve_csv(std::ostream& out, const identify::Curve& curve, CurveKind kind) {
    out << "# x=" << curve.x_label << " y=" << curve.y_label << '\n';
    switch (kind) {
        case CurveKind::cmc: out << "rank,accuracy\n"; break;
        case CurveKind::roc: out << "far,tar,threshold\n"; break;
        case CurveKind::open_set: out << "fpir,fnir,threshold\n"; break;
    }
    for (const auto& p : curve.points) {
        if (kind == CurveKind::cmc) {
            out << static_cast<long long>(p.x) << ',' << format_number(p.y) << '\n';
        } else {
            out << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(p.threshold) << '\n';
        }
    }
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned i = 0; i < len; ++i) {
        hex += kHex[md[i] >> 4];
        hex += kHex[md[i] & 0xF];
    }
    return hex;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

json run_manifest(std::string_view command, const json& config, const std::vector<std::filesystem::path>& inputs,
                  const std::vector<std::string>& outputs) {
    json doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    doc["command"] = command;
    doc["config"] = config;
    doc["inputs"] = json::array();
    for (const auto& p : inputs) {
        doc["inputs"].push_back({{"path", p.string()},
                                 {"bytes", std::filesystem::file_size(p)},
                                 {"sha256", sha256_file(p)}});
    }
    doc["outputs"] = outputs;
    return doc;
}

}  // namespace wbeval::report
