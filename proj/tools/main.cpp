// refseg: operator CLI for the referring-segmentation pipeline. Subcommands
// run pipelines, recompute metrics, drive ablations and weight sweeps,
// inspect prompts and the response cache, and emit visualization overlays.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "refseg/backends.hpp"
#include "refseg/dataset.hpp"
#include "refseg/errors.hpp"
#include "refseg/evaluation.hpp"
#include "refseg/pipeline.hpp"
#include "refseg/prompts.hpp"
#include "refseg/viz.hpp"

namespace {

using nlohmann::json;
using namespace refseg;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string piece = csv.substr(start, comma - start);
        if (piece.empty())
            throw UsageError(flag + ": empty element in list \"" + csv + "\"");
        try {
            std::size_t used = 0;
            double v = std::stod(piece, &used);
            if (used != piece.size()) throw std::invalid_argument(piece);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError(flag + ": cannot parse \"" + piece + "\" as a number");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw UsageError(flag + ": empty list");
    return out;
}

struct RunFlags {
    std::string manifest;
    std::string proposals;
    std::string config_path;
    std::string out_dir;
    bool lenient = false;
    std::optional<double> alpha, beta, tau;
    std::optional<int> workers;
    std::optional<std::string> cache_dir, dataset_tag;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--manifest", f.manifest, "manifest.jsonl path")->required();
    cmd->add_option("--proposals", f.proposals, "proposal directory")->required();
    cmd->add_option("--config", f.config_path, "pipeline config JSON");
    cmd->add_option("--out", f.out_dir, "output directory")->required();
    cmd->add_flag("--lenient", f.lenient, "skip bad records and failed samples");
    cmd->add_option("--alpha", [&f](const std::vector<std::string>& v) {
        f.alpha = std::stod(v[0]);
        return true;
    }, "override fusion alpha");
    cmd->add_option("--beta", [&f](const std::vector<std::string>& v) {
        f.beta = std::stod(v[0]);
        return true;
    }, "override fusion beta");
    cmd->add_option("--tau", [&f](const std::vector<std::string>& v) {
        f.tau = std::stod(v[0]);
        return true;
    }, "override negative-filter threshold");
    cmd->add_option("--workers", [&f](const std::vector<std::string>& v) {
        f.workers = std::stoi(v[0]);
        return true;
    }, "override worker limit");
    cmd->add_option("--cache-dir", [&f](const std::vector<std::string>& v) {
        f.cache_dir = v[0];
        return true;
    }, "override cache directory");
    cmd->add_option("--dataset-tag", [&f](const std::vector<std::string>& v) {
        f.dataset_tag = v[0];
        return true;
    }, "dataset tag selecting the default alpha");
}

// Precedence: CLI flag > REFSEG_CACHE_DIR > config file > default.
PipelineConfig effective_config(const RunFlags& f) {
    PipelineConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) raise(Errc::not_found, "config not found: " + f.config_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            raise(Errc::schema_error, f.config_path + ": " + e.what());
        }
        if (f.dataset_tag) j["dataset_tag"] = *f.dataset_tag;
        cfg = config_from_json(j);
    } else {
        if (f.dataset_tag) cfg.dataset_tag = *f.dataset_tag;
        cfg.weights.alpha = default_alpha(cfg.dataset_tag);
    }
    if (const char* env = std::getenv("REFSEG_CACHE_DIR")) cfg.cache_dir = env;
    if (f.alpha) cfg.weights.alpha = *f.alpha;
    if (f.beta) cfg.weights.beta = *f.beta;
    if (f.tau) cfg.tau = *f.tau;
    if (f.workers) cfg.worker_limit = *f.workers;
    if (f.cache_dir) cfg.cache_dir = *f.cache_dir;
    cfg.lenient = f.lenient;
    cfg.validate();
    return cfg;
}

RunOutput execute_run(const RunFlags& f, PipelineConfig& cfg) {
    cfg = effective_config(f);
    BackendSet backends =
        make_backends(cfg.backend_ids, cfg.cache_dir, cfg.render.encoder_resolution);
    return run_split(f.manifest, f.proposals, cfg, f.out_dir, backends);
}

json metrics_json(const Metrics& m) {
    return json{{"oIoU", m.oiou}, {"mIoU", m.miou}};
}

int cmd_run(const RunFlags& f) {
    PipelineConfig cfg;
    RunOutput out = execute_run(f, cfg);
    std::cout << metrics_json(out.metrics).dump() << "\n";
    return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& manifest) {
    std::vector<RefSample> samples = load_dataset(manifest, false);
    MetricAccumulator acc;
    for (const RefSample& sample : samples) {
        std::filesystem::path file =
            std::filesystem::path(run_dir) / "samples" / (sample.sample_id + ".json");
        std::ifstream in(file);
        if (!in) raise(Errc::not_found, "no stored result for sample " + sample.sample_id);
        json stored = json::parse(in);
        RleCounts sel;
        sel.width = stored.at("selected_proposal").at("width").get<int>();
        sel.height = stored.at("selected_proposal").at("height").get<int>();
        sel.counts =
            stored.at("selected_proposal").at("counts").get<std::vector<std::uint32_t>>();
        accumulate(acc, rle_decode(sel), rle_decode(sample.gt_mask));
    }
    std::cout << metrics_json(finalize(acc)).dump() << "\n";
    return 0;
}

int cmd_ablate(const RunFlags& f) {
    PipelineConfig cfg;
    RunOutput out = execute_run(f, cfg);
    std::vector<AblationRow> rows = run_ablation(out.tables, cfg.weights);

    std::ofstream csv(std::filesystem::path(f.out_dir) / "ablation.csv");
    csv << ablation_csv(rows);

    json rows_json = json::array();
    for (const AblationRow& row : rows)
        rows_json.push_back({{"use_att", row.config.use_att},
                             {"use_sur", row.config.use_sur},
                             {"oIoU", row.metrics.oiou},
                             {"mIoU", row.metrics.miou}});
    std::cout << json{{"weights", {{"alpha", cfg.weights.alpha}, {"beta", cfg.weights.beta}}},
                      {"rows", rows_json}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_sweep(const RunFlags& f, const std::string& alphas_csv, const std::string& betas_csv) {
    std::vector<double> alphas, betas;
    if (alphas_csv.empty()) {
        for (int i = 0; i <= 10; ++i) alphas.push_back(i / 10.0);
    } else {
        alphas = parse_double_list(alphas_csv, "--alphas");
    }
    if (betas_csv.empty()) {
        for (int i = 0; i <= 8; ++i) betas.push_back(i * 0.25);
    } else {
        betas = parse_double_list(betas_csv, "--betas");
    }

    PipelineConfig cfg;
    RunOutput out = execute_run(f, cfg);
    SweepGrid grid = run_sweep(out.tables, alphas, betas);

    std::ofstream csv(std::filesystem::path(f.out_dir) / "sweep.csv");
    csv << sweep_csv(grid);

    SweepBest by_o = best_by_oiou(grid), by_m = best_by_miou(grid);
    std::cout << json{{"best_oIoU",
                       {{"alpha", by_o.alpha}, {"beta", by_o.beta}, {"oIoU", by_o.metrics.oiou},
                        {"mIoU", by_o.metrics.miou}}},
                      {"best_mIoU",
                       {{"alpha", by_m.alpha}, {"beta", by_m.beta}, {"oIoU", by_m.metrics.oiou},
                        {"mIoU", by_m.metrics.miou}}}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_prompts_show(const std::string& expression) {
    std::cout << "attribute prompt template:\n" << kAttributePromptTemplate << "\n\n";
    std::cout << "surrounding prompt template:\n" << kSurroundingPromptTemplate << "\n";
    if (!expression.empty()) {
        std::cout << "\nattribute prompt for \"" << expression << "\":\n"
                  << build_prompt(PromptKind::attribute, expression) << "\n\n";
        std::cout << "surrounding prompt for \"" << expression << "\":\n"
                  << build_prompt(PromptKind::surrounding, expression) << "\n";
    }
    return 0;
}

std::string resolve_cache_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("REFSEG_CACHE_DIR")) return env;
    throw UsageError("no cache directory: pass --cache-dir or set REFSEG_CACHE_DIR");
}

int cmd_cache_stats(const std::string& cache_dir_flag) {
    ResponseCache cache(resolve_cache_dir(cache_dir_flag));
    json out = json::object();
    for (const auto& [kind, s] : cache.stats())
        out[kind] = {{"entries", s.entries}, {"bytes", s.bytes}};
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_cache_gc(const std::string& cache_dir_flag, const std::string& kind) {
    ResponseCache cache(resolve_cache_dir(cache_dir_flag));
    std::optional<BackendKind> k;
    if (!kind.empty()) k = backend_kind_from_name(kind);
    std::uint64_t removed = cache.gc(k);
    std::cout << json{{"removed", removed}}.dump() << "\n";
    return 0;
}

int cmd_visualize(const std::string& run_dir, const std::string& sample_id,
                  const std::string& manifest, const std::string& out_path) {
    std::vector<RefSample> samples = load_dataset(manifest, false);
    const RefSample* sample = nullptr;
    for (const RefSample& s : samples)
        if (s.sample_id == sample_id) sample = &s;
    if (!sample) raise(Errc::not_found, "sample " + sample_id + " not in manifest");

    std::filesystem::path file =
        std::filesystem::path(run_dir) / "samples" / (sample_id + ".json");
    std::ifstream in(file);
    if (!in) raise(Errc::not_found, "no stored result for sample " + sample_id);
    json stored = json::parse(in);

    RleCounts sel;
    sel.width = stored.at("selected_proposal").at("width").get<int>();
    sel.height = stored.at("selected_proposal").at("height").get<int>();
    sel.counts = stored.at("selected_proposal").at("counts").get<std::vector<std::uint32_t>>();

    DescriptionBundle bundle;
    const json& desc = stored.at("descriptions");
    bundle.t_van = desc.value("t_van", "");
    bundle.t_att = desc.value("t_att", "");
    bundle.t_sur = desc.value("t_sur", "");

    Image source = load_image(sample->image_path);
    Image overlay =
        render_overlay(source, rle_decode(sel), rle_decode(sample->gt_mask), bundle);
    save_png(overlay, out_path);
    return 0;
}

int cmd_convert_dataset(const std::string& input, const std::string& out_manifest,
                        const std::string& images_root) {
    std::ifstream in(input);
    if (!in) raise(Errc::not_found, "input not found: " + input);
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, input + ": " + e.what());
    }
    if (raw.value("v", 0) != kSchemaVersion)
        raise(Errc::schema_error, input + ": unsupported raw export version");

    std::map<std::string, json> images;
    for (const json& img : raw.at("images"))
        images[img.at("image_id").get<std::string>()] = img;

    std::ofstream out(out_manifest);
    if (!out) raise(Errc::io_error, "cannot write " + out_manifest);
    std::size_t count = 0;
    for (const json& ann : raw.at("annotations")) {
        const std::string image_id = ann.at("image_id").get<std::string>();
        auto it = images.find(image_id);
        if (it == images.end())
            raise(Errc::schema_error, "annotation references unknown image " + image_id);
        const json& img = it->second;

        std::filesystem::path image_path = img.at("file_name").get<std::string>();
        if (!images_root.empty()) image_path = std::filesystem::path(images_root) / image_path;

        json record{{"v", kSchemaVersion},
                    {"sample_id", ann.at("sample_id").get<std::string>()},
                    {"image_path", image_path.string()},
                    {"image_id", image_id},
                    {"expression", ann.at("expression").get<std::string>()},
                    {"split", ann.at("split").get<std::string>()},
                    {"gt_mask",
                     {{"width", img.at("width").get<int>()},
                      {"height", img.at("height").get<int>()},
                      {"counts", ann.at("gt_counts").get<std::vector<std::uint32_t>>()}}}};
        out << record.dump() << "\n";
        ++count;
    }
    std::cout << json{{"converted", count}}.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot referring image segmentation pipeline"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run the pipeline over a split and print metrics");
    add_run_flags(run, run_flags);

    std::string eval_run_dir, eval_manifest;
    auto* eval = app.add_subcommand("eval", "recompute metrics from stored results");
    eval->add_option("--run", eval_run_dir, "run directory")->required();
    eval->add_option("--manifest", eval_manifest, "manifest.jsonl path")->required();

    RunFlags ablate_flags;
    auto* ablate = app.add_subcommand("ablate", "run the four score-configuration rows");
    add_run_flags(ablate, ablate_flags);

    RunFlags sweep_flags;
    std::string alphas_csv, betas_csv;
    auto* sweep = app.add_subcommand("sweep", "sweep fusion weights over a grid");
    add_run_flags(sweep, sweep_flags);
    sweep->add_option("--alphas", alphas_csv, "comma-separated alphas (default 0,0.1,...,1.0)");
    sweep->add_option("--betas", betas_csv, "comma-separated betas (default 0,0.25,...,2.0)");

    std::string prompts_expression;
    auto* prompts = app.add_subcommand("prompts-show", "print the two prompt templates");
    prompts->add_option("--expression", prompts_expression,
                        "also print the prompts built for this expression");

    std::string cache_dir_flag, gc_kind;
    auto* cache_stats = app.add_subcommand("cache-stats", "per-kind cache entry counts and bytes");
    cache_stats->add_option("--cache-dir", cache_dir_flag, "cache directory");
    auto* cache_gc = app.add_subcommand("cache-gc", "delete cache entries");
    cache_gc->add_option("--cache-dir", cache_dir_flag, "cache directory");
    cache_gc->add_option("--kind", gc_kind, "restrict to one backend kind");

    std::string viz_run, viz_sample, viz_manifest, viz_out;
    auto* visualize = app.add_subcommand("visualize", "overlay a stored result onto its image");
    visualize->add_option("--run", viz_run, "run directory")->required();
    visualize->add_option("--sample", viz_sample, "sample id")->required();
    visualize->add_option("--manifest", viz_manifest, "manifest.jsonl path")->required();
    visualize->add_option("--out", viz_out, "output PNG path")->required();

    std::string conv_input, conv_out, conv_images_root;
    auto* convert = app.add_subcommand("convert-dataset",
                                       "convert a raw JSON export to manifest.jsonl");
    convert->add_option("--input", conv_input, "raw export JSON")->required();
    convert->add_option("--out-manifest", conv_out, "manifest.jsonl to write")->required();
    convert->add_option("--images-root", conv_images_root,
                        "prefix for image paths in the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (eval->parsed()) return cmd_eval(eval_run_dir, eval_manifest);
        if (ablate->parsed()) return cmd_ablate(ablate_flags);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, alphas_csv, betas_csv);
        if (prompts->parsed()) return cmd_prompts_show(prompts_expression);
        if (cache_stats->parsed()) return cmd_cache_stats(cache_dir_flag);
        if (cache_gc->parsed()) return cmd_cache_gc(cache_dir_flag, gc_kind);
        if (visualize->parsed())
            return cmd_visualize(viz_run, viz_sample, viz_manifest, viz_out);
        if (convert->parsed())
            return cmd_convert_dataset(conv_input, conv_out, conv_images_root);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
