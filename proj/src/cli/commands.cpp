#include "wbeval/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "wbeval/error.hpp"
#include "wbeval/report.hpp"

namespace wbeval::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_input(const fs::path& path, const char* flag) {
    if (path.empty()) throw Error(std::string("missing required input ") + flag);
    if (!fs::exists(path)) throw Error(std::string("input ") + flag + " not found: " + path.string());
}

void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(report::json_number(x));
    return a;
}

const char* name(identify::Aggregation a) { return a == identify::Aggregation::mean ? "mean" : "max_score"; }
const char* name(identify::Metric m) { return m == identify::Metric::cosine ? "cosine" : "neg_euclidean"; }
const char* name(sampling::WindowMode m) { return m == sampling::WindowMode::train ? "train" : "test"; }
const char* name(BoxFormat f) { return f == BoxFormat::xywh ? "xywh" : "xyxy"; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

/// Points of the ROC curve: a log grid from 1e-6 to 1e-1 plus the requested
/// targets.
std::vector<double> roc_grid(const std::vector<double>& targets) {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(std::pow(10.0, -6.0 + 0.25 * i));
    grid.insert(grid.end(), targets.begin(), targets.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace

int eval_det(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(config.detections, "--det");
        require_input(config.ground_truth, "--gt");
        validate_iou_thresholds(config.iou_thresholds);
        prepare_output(config.output_dir);

        LoadOptions load{config.box_format};
        const auto dets = load_detections(config.detections, load);
        const auto gts = load_ground_truth(config.ground_truth, load);
        auto index = MediaIndex::from_ground_truth(gts);
        std::vector<fs::path> inputs{config.detections, config.ground_truth};
        if (!config.media.empty()) {
            require_input(config.media, "--media");
            for (const auto& m : load_media(config.media)) index.assign(m.media_id, m.dataset_tag);
            inputs.push_back(config.media);
        }
        const auto result = evaluate_detections(dets, gts, index, {config.iou_thresholds, config.threads});

        json doc = report::to_json(result);
        doc["detections"] = dets.size();
        doc["ground_truth"] = gts.size();
        report::write_json(config.output_dir / "detection_report.json", doc);
        std::ostringstream summary;
        report::write_summary(summary, result);
        write_text(config.output_dir / "detection_summary.txt", summary.str());

        json cfg{{"iou_thresholds", numbers(config.iou_thresholds)}, {"box_format", name(config.box_format)}};
        report::write_json(config.output_dir / "run_manifest.json",
                           report::run_manifest("eval-det", cfg, inputs,
                                                {"detection_report.json", "detection_summary.txt"}));
        out << summary.str();
        return 0;
    });
}

int eval_id(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(config.embeddings, "--emb");
        require_input(config.protocol, "--protocol");
        for (auto r : config.ranks) {
            if (r == 0) throw DomainError("ranks start at 1");
        }
        prepare_output(config.output_dir);

        const auto embeddings = config.embedding_format ? load_embeddings(config.embeddings, *config.embedding_format)
                                                        : load_embeddings(config.embeddings);
        const auto manifest = load_protocol(config.protocol);
        const auto check = validate_protocol(manifest, embeddings);
        if (!check.complete()) {
            err << "error: protocol references " << check.missing_media.size() << " media without embeddings:\n";
            for (const auto& m : check.missing_media) err << "  " << m << '\n';
            return 2;
        }
        if (manifest.probes.empty()) throw ProtocolError("protocol has an empty probe set");
        if (manifest.gallery.empty()) throw ProtocolError("protocol has an empty gallery");
        if (check.mate_probes.empty()) throw ProtocolError("protocol has no mate searches");

        const auto gallery = identify::build_gallery(manifest, embeddings, config.aggregation);
        const auto probes = identify::build_probes(manifest, embeddings);
        const auto matrix = identify::score(probes, gallery, {config.metric, config.threads});
        const auto mates = identify::mate_rows(matrix, manifest);

        json doc;
        doc["protocol"] = {{"gallery_subjects", check.gallery_subjects},
                           {"distractors", check.distractors},
                           {"mate_searches", check.mate_probes.size()},
                           {"non_mate_searches", check.non_mate_probes.size()}};
        doc["config"] = {{"metric", name(config.metric)},
                         {"aggregation", name(config.aggregation)},
                         {"ranks", config.ranks},
                         {"far_targets", numbers(config.far_targets)},
                         {"rank_cap", config.rank_cap ? json(*config.rank_cap) : json("unbounded")}};

        json ranks = json::object();
        for (auto r : config.ranks) {
            ranks[std::to_string(r)] = report::json_number(identify::rank_k_accuracy(mates, manifest, r));
        }
        doc["rank_accuracy"] = std::move(ranks);

        json tars = json::array();
        for (const auto& t : identify::tar_at_far(matrix, manifest, config.far_targets)) tars.push_back(report::to_json(t));
        doc["tar_at_far"] = std::move(tars);

        std::vector<std::string> outputs{"identification_metrics.json", "cmc.csv", "roc.csv"};
        {
            std::ofstream csv(config.output_dir / "cmc.csv");
            report::write_curve_csv(csv, identify::cmc(mates, manifest, matrix.cols()), report::CurveKind::cmc);
        }
        {
            identify::Curve roc{"far", "tar", {}};
            for (const auto& t : identify::tar_at_far(matrix, manifest, roc_grid(config.far_targets))) {
                roc.points.push_back({t.far_target, t.tar, t.threshold});
            }
            std::ofstream csv(config.output_dir / "roc.csv");
            report::write_curve_csv(csv, roc, report::CurveKind::roc);
        }
        if (!check.non_mate_probes.empty()) {
            const auto curve = identify::fnir_fpir(matrix, manifest, {{}, config.rank_cap});
            json fnir = json::array();
            for (double target : config.far_targets) {
                double best = 1.0;
                for (const auto& p : curve.points) {
                    if (p.x <= target) best = std::min(best, p.y);
                }
                fnir.push_back({{"fpir_target", report::json_number(target)}, {"fnir", report::json_number(best)}});
            }
            doc["open_set"] = {{"fnir_at_fpir", std::move(fnir)}, {"points", curve.points.size()}};
            std::ofstream csv(config.output_dir / "fnir_fpir.csv");
            report::write_curve_csv(csv, curve, report::CurveKind::open_set);
            outputs.push_back("fnir_fpir.csv");
        } else {
            doc["open_set"] = {{"skipped", "protocol has no non-mate searches"}};
            err << "warning: no non-mate searches; FNIR/FPIR curve not written\n";
        }
        report::write_json(config.output_dir / "identification_metrics.json", doc);

        json cfg = doc["config"];
        cfg["embedding_format"] = config.embedding_format
                                      ? (*config.embedding_format == EmbeddingFormat::text ? "text" : "binary")
                                      : "auto";
        report::write_json(config.output_dir / "run_manifest.json",
                           report::run_manifest("eval-id", cfg, {config.embeddings, config.protocol}, outputs));

        out << "rank accuracy:";
        for (auto r : config.ranks) {
            out << " R" << r << '=' << report::format_number(identify::rank_k_accuracy(mates, manifest, r));
        }
        out << "\nTAR@FAR:";
        for (const auto& t : identify::tar_at_far(matrix, manifest, config.far_targets)) {
            out << ' ' << report::format_number(t.far_target) << "->" << report::format_number(t.tar);
        }
        out << '\n';
        return 0;
    });
}

int plan_batches(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require_input(config.media, "--media");
        if (config.stride && *config.stride < 1) throw DomainError("stride must be positive");
        prepare_output(config.output_dir);

        const auto media = load_media(config.media);
        std::map<std::string, const MediaRecord*> by_id;
        std::map<std::string, std::vector<std::string>> by_subject;
        std::map<std::string, std::vector<std::string>> by_tag;
        for (const auto& m : media) {
            by_id[m.media_id] = &m;
            by_subject[m.subject_id].push_back(m.media_id);
            by_tag[m.dataset_tag].push_back(m.media_id);
        }

        const auto plan = sampling::pk_batches(by_subject, config.n, config.k, config.num_batches,
                                               derive_seed(config.seed, 0));
        json batches = json::array();
        for (std::size_t b = 0; b < plan.batches.size(); ++b) {
            json windows = json::array();
            for (std::size_t s = 0; s < plan.batches[b].size(); ++s) {
                const auto& m = *by_id.at(plan.batches[b][s]);
                sampling::FrameWindowOptions wopts;
                wopts.stride = config.stride.value_or(sampling::default_test_stride(m.dataset_tag));
                wopts.length = config.window_length;
                wopts.mode = config.mode;
                wopts.uniform_subset = config.uniform_subset;
                const auto w = sampling::frame_window(m.frame_count, wopts,
                                                      derive_seed(config.seed, 1 + b * plan.batches[b].size() + s));
                windows.push_back({{"media_id", m.media_id},
                                   {"subject_id", m.subject_id},
                                   {"stride", wopts.stride},
                                   {"indices", w.indices},
                                   {"mask", w.mask}});
            }
            batches.push_back({{"subjects", plan.subjects[b]}, {"media", plan.batches[b]}, {"windows", windows}});
        }

        json doc;
        doc["generator"] = Rng::kName;
        doc["seed"] = config.seed;
        doc["n"] = plan.n;
        doc["k"] = plan.k;
        doc["batch_size"] = plan.n * plan.k;
        doc["window"] = {{"mode", name(config.mode)},
                         {"T", config.window_length},
                         {"stride", config.stride ? json(*config.stride) : json("per-tag")},
                         {"uniform_subset", config.uniform_subset}};
        json strides = json::object();
        for (const auto& [tag, items] : by_tag) strides[tag] = sampling::default_test_stride(tag);
        doc["test_strides"] = std::move(strides);
        doc["batches"] = std::move(batches);
        if (config.draws > 0) {
            const auto weights = sampling::dataset_balanced_weights(by_tag);
            json per_dataset = json::object();
            for (const auto& [tag, p] : weights.per_dataset) per_dataset[tag] = report::json_number(p);
            doc["dataset_weights"] = std::move(per_dataset);
            doc["media_draws"] = sampling::sample_media(weights, config.draws, derive_seed(config.seed, 1ull << 40));
        }
        report::write_json(config.output_dir / "plan.json", doc);

        json cfg = doc["window"];
        cfg["n"] = plan.n;
        cfg["k"] = plan.k;
        cfg["num_batches"] = config.num_batches;
        cfg["seed"] = config.seed;
        cfg["draws"] = config.draws;
        report::write_json(config.output_dir / "run_manifest.json",
                           report::run_manifest("plan-batches", cfg, {config.media}, {"plan.json"}));
        out << "planned " << plan.batches.size() << " batches of " << plan.n * plan.k << " media (" << Rng::kName
            << ", seed " << config.seed << ")\n";
        return 0;
    });
}

int check_losses(const CheckLossesConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto& cfg = config.options.config;
        out << "beta = " << report::format_number(cfg.beta) << (cfg.beta == 1.0 / 9.0 ? " (default 1/9)\n" : "\n")
            << "margin = " << report::format_number(cfg.margin) << "\n"
            << "epsilon = " << report::format_number(cfg.epsilon) << "\n";
        const auto results = losses::run_self_checks(config.options);
        bool ok = true;
        double worst_grad = 0.0;
        json checks = json::array();
        for (const auto& r : results) {
            out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  max_error=" << report::format_number(r.max_error)
                << "  tolerance=" << report::format_number(r.tolerance) << '\n';
            if (!r.passed) {
                ok = false;
                err << "check failed: " << r.name << '\n';
            }
            if (r.name.starts_with("grad ")) worst_grad = std::max(worst_grad, r.max_error);
            checks.push_back({{"name", r.name},
                              {"max_error", report::json_number(r.max_error)},
                              {"tolerance", report::json_number(r.tolerance)},
                              {"passed", r.passed}});
        }
        out << "max gradient relative error = " << report::format_number(worst_grad) << '\n';
        if (config.output_dir) {
            prepare_output(*config.output_dir);
            json doc{{"beta", report::json_number(cfg.beta)},
                     {"margin", report::json_number(cfg.margin)},
                     {"epsilon", report::json_number(cfg.epsilon)},
                     {"checks", checks},
                     {"passed", ok}};
            report::write_json(*config.output_dir / "loss_checks.json", doc);
            json mcfg{{"seed", config.options.seed}, {"points_per_loss", config.options.points_per_loss}};
            report::write_json(*config.output_dir / "run_manifest.json",
                               report::run_manifest("check-losses", mcfg, {}, {"loss_checks.json"}));
        }
        return ok ? 0 : 1;
    });
}

int convert_emb(const fs::path& input, const fs::path& output, EmbeddingFormat format, std::ostream& out,
                std::ostream& err) {
    return guarded(err, [&] {
        require_input(input, "--emb");
        const auto store = load_embeddings(input);
        save_embeddings(output, store, format);
        const char* fmt = format == EmbeddingFormat::binary ? "binary" : "text";
        report::write_json(fs::path(output.string() + ".manifest.json"),
                           report::run_manifest("convert-emb", {{"format", fmt}}, {input}, {output.filename().string()}));
        out << "wrote " << store.size() << " embeddings (dim " << store.dim() << ") as " << fmt << " to "
            << output.string() << '\n';
        return 0;
    });
}

}  // namespace wbeval::cli
