#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "refseg/errors.hpp"
#include "refseg/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace refseg;
using nlohmann::json;

namespace {

BackendSet backends_for(const PipelineConfig& cfg) {
    return make_backends(cfg.backend_ids, cfg.cache_dir, cfg.render.encoder_resolution);
}

// Copies the first n lines of a manifest.
void truncate_manifest(const std::filesystem::path& src, const std::filesystem::path& dst,
                       std::size_t n) {
    std::ifstream in(src);
    std::ofstream out(dst);
    std::string line;
    for (std::size_t i = 0; i < n && std::getline(in, line); ++i) out << line << "\n";
}

} // namespace

TEST_CASE("config json roundtrip and dataset-tag defaults") {
    PipelineConfig cfg;
    cfg.weights = {0.7, 1.2};
    cfg.tau = 0.6;
    cfg.normalize_first = false;
    cfg.worker_limit = 4;
    cfg.dataset_tag = "refcocog";
    cfg.render.encoder_resolution = 96;
    cfg.backend_ids[BackendKind::text_encoder] = {BackendKind::text_encoder, BackendImpl::stub,
                                                  "", "tag", 64, 7};

    PipelineConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.weights.alpha == cfg.weights.alpha);
    CHECK(back.weights.beta == cfg.weights.beta);
    CHECK(back.tau == cfg.tau);
    CHECK(back.normalize_first == cfg.normalize_first);
    CHECK(back.render.encoder_resolution == 96);
    CHECK(back.backend_ids.at(BackendKind::text_encoder).dim == 64);
    CHECK(config_digest(back) == config_digest(cfg));

    // alpha defaults by tag when unset
    PipelineConfig g = config_from_json(json{{"dataset_tag", "refcocog"}});
    CHECK(g.weights.alpha == 0.3);
    CHECK(g.weights.beta == 1.0);
    PipelineConfig c = config_from_json(json{{"dataset_tag", "refcoco"}});
    CHECK(c.weights.alpha == 0.5);

    // digest covers score-relevant fields only
    PipelineConfig same = cfg;
    same.worker_limit = 1;
    same.lenient = true;
    same.cache_dir = "elsewhere";
    CHECK(config_digest(same) == config_digest(cfg));
    PipelineConfig different = cfg;
    different.tau = 0.5;
    CHECK(config_digest(different) != config_digest(cfg));
}

TEST_CASE("run_sample with a single proposal selects it") {
    fixtures::ScratchDir dir("pipeline_single");
    Image img(16, 16, {50, 60, 70});
    save_ppm(img, dir.path() / "img.ppm");
    BinaryMask m = fixtures::rect_mask(16, 16, 4, 4, 11, 11);

    RefSample sample;
    sample.sample_id = "only";
    sample.image_path = dir.path() / "img.ppm";
    sample.image_id = "img";
    sample.expression = "the thing";
    sample.gt_mask = rle_encode(m);
    sample.split = "val";

    ProposalSet proposals;
    proposals.image_id = "img";
    proposals.source_tag = "sam";
    proposals.proposals = {rle_encode(m)};
    proposals.proposal_ids = {"p0"};

    PipelineConfig cfg;
    cfg.render.encoder_resolution = 32;
    cfg.render.blur_sigma = 2.0;
    BackendSet backends = backends_for(cfg);

    SampleResult result = run_sample(sample, proposals, cfg, backends);
    CHECK(result.selected_index == 0);
    CHECK(result.selected_proposal == proposals.proposals[0]);
    CHECK(result.breakdowns.size() == 1);
    CHECK(result.bundle.t_van == "the thing");
}

TEST_CASE("run_sample is pure given frozen backends") {
    fixtures::ScratchDir dir("pipeline_pure");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 2);
    auto samples = load_dataset(corpus.manifest, false);
    ProposalSet proposals = load_proposals(corpus.proposals_dir, samples[0].image_id);

    BackendSet b1 = backends_for(corpus.config);
    BackendSet b2 = backends_for(corpus.config);
    SampleResult r1 = run_sample(samples[0], proposals, corpus.config, b1);
    SampleResult r2 = run_sample(samples[0], proposals, corpus.config, b2);

    CHECK(r1.selected_index == r2.selected_index);
    REQUIRE(r1.breakdowns.size() == r2.breakdowns.size());
    for (std::size_t i = 0; i < r1.breakdowns.size(); ++i) {
        CHECK(r1.breakdowns[i].s_total == r2.breakdowns[i].s_total);
        CHECK(r1.breakdowns[i].s_van == r2.breakdowns[i].s_van);
        CHECK(r1.breakdowns[i].s_att == r2.breakdowns[i].s_att);
        CHECK(r1.breakdowns[i].s_sur == r2.breakdowns[i].s_sur);
    }
    CHECK(r1.bundle.t_att == r2.bundle.t_att);
    CHECK(r1.negative_phrases == r2.negative_phrases);
}

TEST_CASE("planted corpus: the engineered proposal wins every sample") {
    fixtures::ScratchDir dir("pipeline_planted");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 10);

    BackendSet backends = backends_for(corpus.config);
    RunOutput out = run_split(corpus.manifest, corpus.proposals_dir, corpus.config,
                              dir.path() / "run", backends);

    CHECK(out.sample_count == 10);
    CHECK(out.metrics.oiou == 1.0);
    CHECK(out.metrics.miou == 1.0);

    // stored files carry the winning index and the negatives
    for (const std::string& id : corpus.sample_ids) {
        std::ifstream in(dir.path() / "run" / "samples" / (id + ".json"));
        REQUIRE(in.good());
        json stored = json::parse(in);
        CHECK(stored.at("selected").get<int>() == corpus.winning_proposal);
        CHECK(stored.at("negatives").get<std::vector<std::string>>() ==
              std::vector<std::string>{"red box", "blue box"});
        CHECK(stored.at("descriptions").at("att_fallback").get<bool>() == false);
    }
}

TEST_CASE("vanilla-only weights pick the misleading proposal on the first half") {
    fixtures::ScratchDir dir("pipeline_vanilla");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 6);
    PipelineConfig cfg = corpus.config;
    cfg.weights = {0.0, 0.0};

    BackendSet backends = backends_for(cfg);
    RunOutput out =
        run_split(corpus.manifest, corpus.proposals_dir, cfg, dir.path() / "run", backends);
    CHECK(out.metrics.miou == 0.5); // half the samples go to proposal A
}

TEST_CASE("resume: interrupted run equals an uninterrupted one") {
    fixtures::ScratchDir dir("pipeline_resume");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 8);

    // "interrupt" after 3 samples by running a truncated manifest
    std::filesystem::path partial_manifest = dir.path() / "partial.jsonl";
    truncate_manifest(corpus.manifest, partial_manifest, 3);
    // the truncated manifest lives outside the corpus dir, so image paths
    // must be re-anchored; rewrite them as absolute
    {
        std::ifstream in(partial_manifest);
        std::string content, line;
        while (std::getline(in, line)) {
            json j = json::parse(line);
            j["image_path"] =
                (corpus.root / j.at("image_path").get<std::string>()).string();
            content += j.dump() + "\n";
        }
        std::ofstream out(partial_manifest);
        out << content;
    }

    std::filesystem::path resumed_dir = dir.path() / "resumed";
    {
        BackendSet backends = backends_for(corpus.config);
        RunOutput partial = run_split(partial_manifest, corpus.proposals_dir, corpus.config,
                                      resumed_dir, backends);
        CHECK(partial.sample_count == 3);
    }
    BackendSet backends_resume = backends_for(corpus.config);
    RunOutput resumed = run_split(corpus.manifest, corpus.proposals_dir, corpus.config,
                                  resumed_dir, backends_resume);
    CHECK(resumed.resumed == 3);

    BackendSet backends_fresh = backends_for(corpus.config);
    RunOutput fresh = run_split(corpus.manifest, corpus.proposals_dir, corpus.config,
                                dir.path() / "fresh", backends_fresh);

    CHECK(resumed.metrics.oiou == fresh.metrics.oiou);
    CHECK(resumed.metrics.miou == fresh.metrics.miou);
    REQUIRE(resumed.tables.size() == fresh.tables.size());
    for (std::size_t i = 0; i < resumed.tables.size(); ++i) {
        REQUIRE(resumed.tables[i].proposals.size() == fresh.tables[i].proposals.size());
        for (std::size_t p = 0; p < resumed.tables[i].proposals.size(); ++p) {
            CHECK(resumed.tables[i].proposals[p].s_van == fresh.tables[i].proposals[p].s_van);
            CHECK(resumed.tables[i].proposals[p].s_att == fresh.tables[i].proposals[p].s_att);
            CHECK(resumed.tables[i].proposals[p].s_sur == fresh.tables[i].proposals[p].s_sur);
        }
    }
}

TEST_CASE("rerun over complete results touches no backend") {
    fixtures::ScratchDir dir("pipeline_rerun");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 4);

    Metrics first;
    {
        BackendSet backends = backends_for(corpus.config);
        first = run_split(corpus.manifest, corpus.proposals_dir, corpus.config,
                          dir.path() / "run", backends)
                    .metrics;
        CHECK(backends.backend_calls() > 0);
    }
    BackendSet fresh_backends = backends_for(corpus.config);
    RunOutput again = run_split(corpus.manifest, corpus.proposals_dir, corpus.config,
                                dir.path() / "run", fresh_backends);
    CHECK(again.resumed == 4);
    CHECK(fresh_backends.backend_calls() == 0);
    CHECK(again.metrics.oiou == first.oiou);
    CHECK(again.metrics.miou == first.miou);
}

TEST_CASE("mixing configs in one results directory is refused") {
    fixtures::ScratchDir dir("pipeline_mix");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 2);
    {
        BackendSet backends = backends_for(corpus.config);
        run_split(corpus.manifest, corpus.proposals_dir, corpus.config, dir.path() / "run",
                  backends);
    }
    PipelineConfig changed = corpus.config;
    changed.weights.alpha = 0.9;
    BackendSet backends = backends_for(changed);
    try {
        run_split(corpus.manifest, corpus.proposals_dir, changed, dir.path() / "run", backends);
        FAIL("expected ConfigMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_mismatch);
    }
}

TEST_CASE("worker_limit does not change results") {
    fixtures::ScratchDir dir("pipeline_workers");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 8);

    PipelineConfig serial = corpus.config;
    serial.worker_limit = 1;
    BackendSet b1 = backends_for(serial);
    RunOutput out1 =
        run_split(corpus.manifest, corpus.proposals_dir, serial, dir.path() / "w1", b1);

    PipelineConfig parallel = corpus.config;
    parallel.worker_limit = 8;
    BackendSet b8 = backends_for(parallel);
    RunOutput out8 =
        run_split(corpus.manifest, corpus.proposals_dir, parallel, dir.path() / "w8", b8);

    CHECK(out1.metrics.oiou == out8.metrics.oiou);
    CHECK(out1.metrics.miou == out8.metrics.miou);
    CHECK(config_digest(serial) == config_digest(parallel));
    REQUIRE(out1.tables.size() == out8.tables.size());
    for (std::size_t i = 0; i < out1.tables.size(); ++i) {
        CHECK(out1.tables[i].sample_id == out8.tables[i].sample_id);
        CHECK(select_by_weights(out1.tables[i], serial.weights) ==
              select_by_weights(out8.tables[i], parallel.weights));
    }
}

TEST_CASE("duplicate sample ids are refused") {
    fixtures::ScratchDir dir("pipeline_dupes");
    save_ppm(Image(4, 4, {1, 1, 1}), dir.path() / "img.ppm");
    BinaryMask m(4, 4);
    m.set(0, 0, true);
    {
        std::ofstream out(dir.path() / "manifest.jsonl");
        fixtures::write_manifest_line(out, "dup", "img.ppm", "img", "e", "val", rle_encode(m));
        fixtures::write_manifest_line(out, "dup", "img.ppm", "img", "e", "val", rle_encode(m));
    }
    fixtures::write_proposal_file(dir.path() / "proposals", "img", "sam", {rle_encode(m)});
    PipelineConfig cfg;
    cfg.render.encoder_resolution = 16;
    BackendSet backends = backends_for(cfg);
    try {
        run_split(dir.path() / "manifest.jsonl", dir.path() / "proposals", cfg,
                  dir.path() / "run", backends);
        FAIL("expected SchemaError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::schema_error);
    }
}

TEST_CASE("empty split raises EmptyAccumulator") {
    fixtures::ScratchDir dir("pipeline_empty");
    std::ofstream(dir.path() / "manifest.jsonl").close();
    PipelineConfig cfg;
    BackendSet backends = backends_for(cfg);
    try {
        run_split(dir.path() / "manifest.jsonl", dir.path(), cfg, dir.path() / "run", backends);
        FAIL("expected EmptyAccumulator");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_accumulator);
    }
}

TEST_CASE("backend failure is tagged with the stage and sample") {
    fixtures::ScratchDir dir("pipeline_down");
    auto corpus = fixtures::build_planted_corpus(dir.path() / "corpus", 1);
    PipelineConfig cfg = corpus.config;
    cfg.backend_ids[BackendKind::mllm] = {BackendKind::mllm, BackendImpl::http,
                                          "http://127.0.0.1:1", "down", 8, 1};
    cfg.cache_dir.clear();

    HttpOptions fast;
    fast.retries = 1;
    fast.backoff_ms = 1;
    fast.timeout_ms = 200;
    BackendSet backends = make_backends(cfg.backend_ids, "", cfg.render.encoder_resolution, fast);

    try {
        run_split(corpus.manifest, corpus.proposals_dir, cfg, dir.path() / "run", backends);
        FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::backend_unavailable);
        std::string what = e.what();
        CHECK(what.find("[describe]") != std::string::npos);
        CHECK(what.find("s0") != std::string::npos);
    }

    // lenient mode reports rather than aborts, but an all-failed split has
    // no metrics to finalize
    cfg.lenient = true;
    BackendSet backends2 = make_backends(cfg.backend_ids, "", cfg.render.encoder_resolution, fast);
    try {
        run_split(corpus.manifest, corpus.proposals_dir, cfg, dir.path() / "run2", backends2);
        FAIL("expected EmptyAccumulator");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_accumulator);
    }
}
