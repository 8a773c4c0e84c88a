#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "wbeval/cli.hpp"

namespace {

using wbeval::cli::RunConfig;

const std::map<std::string, wbeval::EmbeddingFormat> kEmbeddingFormats{{"text", wbeval::EmbeddingFormat::text},
                                                                         {"binary", wbeval::EmbeddingFormat::binary}};

void add_common(CLI::App& cmd, RunConfig& cfg) {
    cmd.add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();
    cmd.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    cmd.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detection, recognition-loss and identification evaluation tools", "wbeval"};
    app.set_config("--config", "", "TOML/INI file with default option values");
    app.require_subcommand(1);
    app.set_version_flag("--version", "wbeval 0.1.0");

    RunConfig cfg;
    wbeval::cli::CheckLossesConfig loss_cfg;
    std::string loss_out;
    std::filesystem::path convert_in;
    std::filesystem::path convert_out;
    wbeval::EmbeddingFormat convert_format = wbeval::EmbeddingFormat::binary;
    wbeval::EmbeddingFormat emb_format = wbeval::EmbeddingFormat::binary;
    std::optional<std::size_t> rank_cap;
    std::optional<std::int64_t> stride;

    auto* det = app.add_subcommand("eval-det", "Detection precision, recall and F1 per dataset and pooled");
    det->add_option("--det", cfg.detections, "Detections (JSON lines)")->required();
    det->add_option("--gt", cfg.ground_truth, "Ground truth (JSON lines)")->required();
    det->add_option("--media", cfg.media, "Media records supplying dataset tags");
    det->add_option("--iou", cfg.iou_thresholds, "IoU threshold (repeatable)")->capture_default_str();
    det->add_option("--box-format", cfg.box_format, "Box encoding")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, wbeval::BoxFormat>{{"xywh", wbeval::BoxFormat::xywh}, {"xyxy", wbeval::BoxFormat::xyxy}}));
    add_common(*det, cfg);

    auto* id = app.add_subcommand("eval-id", "Closed- and open-set identification metrics");
    id->add_option("--emb", cfg.embeddings, "Embedding file (text or binary)")->required();
    id->add_option("--protocol", cfg.protocol, "Gallery/probe protocol (JSON)")->required();
    auto* id_format = id->add_option("--format", emb_format, "Embedding format; detected when omitted")
                          ->transform(CLI::CheckedTransformer(kEmbeddingFormats));
    id->add_option("--far", cfg.far_targets, "FAR target in [0,1) (repeatable)")->capture_default_str();
    id->add_option("--rank", cfg.ranks, "Rank for accuracy (repeatable)")->capture_default_str();
    id->add_option("--metric", cfg.metric, "Similarity")
        ->transform(CLI::CheckedTransformer(std::map<std::string, wbeval::identify::Metric>{
            {"cosine", wbeval::identify::Metric::cosine}, {"neg_euclidean", wbeval::identify::Metric::neg_euclidean}}));
    id->add_option("--aggregation", cfg.aggregation, "Gallery template aggregation")
        ->transform(CLI::CheckedTransformer(std::map<std::string, wbeval::identify::Aggregation>{
            {"mean", wbeval::identify::Aggregation::mean}, {"max", wbeval::identify::Aggregation::max_score}}));
    auto* id_cap = id->add_option("--rank-cap", rank_cap, "Open-set candidate list length")->check(CLI::PositiveNumber);
    add_common(*id, cfg);

    auto* plan = app.add_subcommand("plan-batches", "Identity-balanced batches and frame windows");
    plan->add_option("--media", cfg.media, "Media records (JSON lines)")->required();
    plan->add_option("--n", cfg.n, "Subjects per batch")->capture_default_str();
    plan->add_option("--k", cfg.k, "Media per subject")->capture_default_str();
    plan->add_option("--batches", cfg.num_batches, "Number of batches")->capture_default_str();
    auto* plan_stride = plan->add_option("--stride", stride, "Frame stride; per-dataset default when omitted");
    plan->add_option("--T", cfg.window_length, "Frames per window")->capture_default_str();
    plan->add_option("--mode", cfg.mode, "Window mode")
        ->transform(CLI::CheckedTransformer(std::map<std::string, wbeval::sampling::WindowMode>{
            {"train", wbeval::sampling::WindowMode::train}, {"test", wbeval::sampling::WindowMode::test}}));
    plan->add_flag("--uniform-subset", cfg.uniform_subset, "Pick T strided frames uniformly instead of a run");
    plan->add_option("--draws", cfg.draws, "Dataset-balanced media draws to list")->capture_default_str();
    add_common(*plan, cfg);

    auto* losses = app.add_subcommand("check-losses", "Worked values and gradient checks of the training losses");
    losses->add_option("--beta", loss_cfg.options.config.beta, "Smooth-L1 transition point")->capture_default_str();
    losses->add_option("--margin", loss_cfg.options.config.margin, "Triplet margin")->capture_default_str();
    losses->add_option("--epsilon", loss_cfg.options.config.epsilon, "Log clamp")->capture_default_str();
    losses->add_option("--seed", loss_cfg.options.seed, "Random seed")->capture_default_str();
    losses->add_option("--points", loss_cfg.options.points_per_loss, "Random points per gradient check")
        ->capture_default_str();
    losses->add_option("--out", loss_out, "Write loss_checks.json here");
    losses->add_option("--inject-fault", loss_cfg.options.smooth_l1_gradient_fault)->group("");

    auto* convert = app.add_subcommand("convert-emb", "Convert embeddings between text and binary");
    convert->add_option("--emb", convert_in, "Input embedding file")->required();
    convert->add_option("--out", convert_out, "Output file")->required();
    convert->add_option("--format", convert_format, "Output format")
        ->transform(CLI::CheckedTransformer(kEmbeddingFormats))
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (id_format->count() > 0) cfg.embedding_format = emb_format;
    if (id_cap->count() > 0) cfg.rank_cap = rank_cap;
    if (plan_stride->count() > 0) cfg.stride = stride;

    if (*det) return wbeval::cli::eval_det(cfg, std::cout, std::cerr);
    if (*id) return wbeval::cli::eval_id(cfg, std::cout, std::cerr);
    if (*plan) return wbeval::cli::plan_batches(cfg, std::cout, std::cerr);
    if (*losses) {
        if (!loss_out.empty()) loss_cfg.output_dir = loss_out;
        return wbeval::cli::check_losses(loss_cfg, std::cout, std::cerr);
    }
    return wbeval::cli::convert_emb(convert_in, convert_out, convert_format, std::cout, std::cerr);
}
