#include "refseg/backends.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <thread>

#include "refseg/base64.hpp"
#include "refseg/errors.hpp"
#include "refseg/prompts.hpp"
#include "refseg/sha256.hpp"

namespace refseg {

using nlohmann::json;

// --- embedding ------------------------------------------------------------------

void validate_embedding(const Embedding& e, std::size_t expected_dim) {
    if (e.values.empty()) raise(Errc::bad_response, "empty embedding");
    if (expected_dim != 0 && e.dim() != expected_dim)
        raise(Errc::bad_response, "embedding dim " + std::to_string(e.dim()) + " != expected " +
                                      std::to_string(expected_dim));
    bool all_zero = true;
    for (double v : e.values) {
        if (!std::isfinite(v)) raise(Errc::bad_response, "non-finite embedding entry");
        if (v != 0.0) all_zero = false;
    }
    if (all_zero) raise(Errc::bad_response, "all-zero embedding");
}

// --- identities -------------------------------------------------------------------

const char* backend_kind_name(BackendKind k) {
    switch (k) {
        case BackendKind::mllm: return "mllm";
        case BackendKind::text_encoder: return "text_encoder";
        case BackendKind::image_encoder: return "image_encoder";
        case BackendKind::np_extractor: return "np_extractor";
    }
    return "unknown";
}

BackendKind backend_kind_from_name(const std::string& name) {
    if (name == "mllm") return BackendKind::mllm;
    if (name == "text_encoder") return BackendKind::text_encoder;
    if (name == "image_encoder") return BackendKind::image_encoder;
    if (name == "np_extractor") return BackendKind::np_extractor;
    raise(Errc::schema_error, "unknown backend kind: " + name);
}

const char* backend_impl_name(BackendImpl i) {
    switch (i) {
        case BackendImpl::http: return "http";
        case BackendImpl::file: return "file";
        case BackendImpl::stub: return "stub";
    }
    return "unknown";
}

BackendImpl backend_impl_from_name(const std::string& name) {
    if (name == "http") return BackendImpl::http;
    if (name == "file") return BackendImpl::file;
    if (name == "stub") return BackendImpl::stub;
    raise(Errc::schema_error, "unknown backend impl: " + name);
}

void BackendId::validate() const {
    if (impl == BackendImpl::http && endpoint_or_path.empty())
        raise(Errc::schema_error, std::string(backend_kind_name(kind)) +
                                      ": http backend requires an endpoint");
    if (impl == BackendImpl::file && endpoint_or_path.empty())
        raise(Errc::schema_error,
              std::string(backend_kind_name(kind)) + ": file backend requires a fixture path");
}

// --- canonical requests --------------------------------------------------------------

std::string image_content_digest(const Image& img) {
    Sha256 h;
    std::string header = std::to_string(img.width) + "x" + std::to_string(img.height) + ":";
    h.update(header);
    h.update(img.pixels.data(), img.pixels.size());
    auto d = h.digest();
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : d) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

std::string prompt_digest(const std::string& prompt) {
    return sha256_hex(prompt);
}

json canonical_text_request(const std::string& model_tag, const std::string& text) {
    return json{{"kind", "text_encoder"}, {"model", model_tag}, {"text", text}};
}

json canonical_image_request(const std::string& model_tag, const InstanceImage& img) {
    return json{{"kind", "image_encoder"},
                {"model", model_tag},
                {"image_sha256", image_content_digest(img.pixels)},
                {"strategy", strategy_tag(img.strategy)},
                {"width", img.pixels.width},
                {"height", img.pixels.height}};
}

json canonical_mllm_request(const std::string& model_tag, const Image& image,
                            const std::string& prompt) {
    return json{{"kind", "mllm"},
                {"model", model_tag},
                {"prompt", prompt},
                {"image_sha256", image_content_digest(image)},
                {"width", image.width},
                {"height", image.height}};
}

std::string request_digest(const json& canonical) {
    return sha256_hex(canonical.dump());
}

// --- stub transport --------------------------------------------------------------------

namespace {

// Expands sha256(seed || payload || counter) into `dim` values in [-1, 1).
Embedding seeded_embedding(std::uint64_t seed, const std::string& payload, int dim) {
    Embedding e;
    e.values.reserve(std::size_t(dim));
    std::uint32_t counter = 0;
    while (e.values.size() < std::size_t(dim)) {
        Sha256 h;
        std::uint8_t seed_le[8];
        for (int i = 0; i < 8; ++i) seed_le[i] = std::uint8_t(seed >> (8 * i));
        h.update(seed_le, 8);
        h.update(payload);
        std::uint8_t ctr_le[4];
        for (int i = 0; i < 4; ++i) ctr_le[i] = std::uint8_t(counter >> (8 * i));
        h.update(ctr_le, 4);
        auto d = h.digest();
        for (std::size_t i = 0; i + 3 < d.size() && e.values.size() < std::size_t(dim); i += 4) {
            std::uint32_t u = (std::uint32_t(d[i]) << 24) | (std::uint32_t(d[i + 1]) << 16) |
                              (std::uint32_t(d[i + 2]) << 8) | std::uint32_t(d[i + 3]);
            e.values.push_back(double(u) / 2147483648.0 - 1.0);
        }
        ++counter;
    }
    return e;
}

class StubTransport : public Transport {
public:
    StubTransport(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {}

    json invoke(const TransportRequest& req) override {
        ++calls_;
        const json& c = req.canonical;
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "mllm") {
            return json{{"text", canned_reply(c.at("prompt").get<std::string>())}};
        }
        Embedding e = seeded_embedding(seed_, c.dump(), dim_);
        return json{{"embedding", e.values}};
    }

private:
    std::string canned_reply(const std::string& prompt) const {
        std::string h = prompt_digest(prompt).substr(0, 8);
        if (prompt.find("surrounded by") != std::string::npos) {
            return "A photo of object-" + h + " surrounded by (a widget-" + h.substr(0, 4) +
                   " and a gadget-" + h.substr(4, 4) + ")";
        }
        return "A photo of object-" + h + " (colored in shade " + h + ")";
    }

    std::uint64_t seed_;
    int dim_;
};

// --- file transport -----------------------------------------------------------------

class FileTransport : public Transport {
public:
    explicit FileTransport(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) raise(Errc::not_found, "fixture file not found: " + path.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            raise(Errc::schema_error, path.string() + ": " + e.what());
        }
        if (j.value("v", 0) != 1)
            raise(Errc::schema_error, path.string() + ": unsupported fixture version");
        text_ = j.value("text", json::object());
        image_ = j.value("image", json::object());
        mllm_ = j.value("mllm", json::object());
        if (j.value("fallback_to_stub", false))
            stub_ = std::make_shared<StubTransport>(j.value("seed", std::uint64_t(1)),
                                                    j.value("dim", 512));
        origin_ = path.string();
    }

    json invoke(const TransportRequest& req) override {
        ++calls_;
        const json& c = req.canonical;
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "text_encoder") {
            const std::string text = c.at("text").get<std::string>();
            if (auto it = text_.find(text); it != text_.end())
                return json{{"embedding", *it}};
            return miss(req, "text \"" + text + "\"");
        }
        if (kind == "image_encoder") {
            const std::string digest = request_digest(c);
            if (auto it = image_.find(digest); it != image_.end())
                return json{{"embedding", *it}};
            return miss(req, "image request " + digest);
        }
        if (kind == "mllm") {
            const std::string digest = prompt_digest(c.at("prompt").get<std::string>());
            if (auto it = mllm_.find(digest); it != mllm_.end())
                return json{{"text", *it}};
            return miss(req, "prompt digest " + digest);
        }
        raise(Errc::schema_error, "fixture transport cannot serve kind " + kind);
    }

private:
    json miss(const TransportRequest& req, const std::string& what) {
        if (stub_) return stub_->invoke(req);
        raise(Errc::not_found, origin_ + " has no entry for " + what);
    }

    json text_, image_, mllm_;
    std::shared_ptr<StubTransport> stub_;
    std::string origin_;
};

// --- http transport -----------------------------------------------------------------

class HttpTransport : public Transport {
public:
    HttpTransport(std::string endpoint, HttpOptions opts)
        : endpoint_(std::move(endpoint)), opts_(opts) {}

    json invoke(const TransportRequest& req) override {
        ++calls_;
        const json& c = req.canonical;
        const std::string kind = c.at("kind").get<std::string>();
        std::string path, body;
        if (kind == "mllm") {
            path = "/v1/chat/completions";
            body = chat_body(c, req.image_png);
        } else {
            path = "/v1/embeddings";
            body = embeddings_body(c, req.image_png);
        }

        int backoff = opts_.backoff_ms;
        std::optional<Error> last;
        for (int attempt = 0; attempt < std::max(1, opts_.retries); ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
                backoff *= 2;
            }
            try {
                return post(path, body, kind);
            } catch (const Error& e) {
                // BadResponse is a server answering nonsense; retrying will
                // not change the payload.
                if (e.code() == Errc::bad_response) throw;
                last = e;
            }
        }
        throw *last;
    }

private:
    std::string chat_body(const json& c, const std::string& image_png) const {
        json content = json::array();
        content.push_back({{"type", "text"}, {"text", c.at("prompt").get<std::string>()}});
        content.push_back(
            {{"type", "image_url"},
             {"image_url", {{"url", "data:image/png;base64," + base64_encode(image_png)}}}});
        return json{{"model", c.at("model").get<std::string>()},
                    {"temperature", 0},
                    {"messages", json::array({{{"role", "user"}, {"content", content}}})}}
            .dump();
    }

    std::string embeddings_body(const json& c, const std::string& image_png) const {
        json body{{"model", c.at("model").get<std::string>()}};
        if (c.at("kind").get<std::string>() == "text_encoder") {
            body["input"] = c.at("text").get<std::string>();
            body["modality"] = "text";
        } else {
            body["input"] = base64_encode(image_png);
            body["modality"] = "image";
        }
        return body.dump();
    }

    json post(const std::string& path, const std::string& body, const std::string& kind) {
        std::lock_guard<std::mutex> lock(mutex_);
        httplib::Client client(endpoint_);
        client.set_connection_timeout(0, opts_.timeout_ms * 1000LL);
        client.set_read_timeout(opts_.timeout_ms / 1000, (opts_.timeout_ms % 1000) * 1000);

        auto res = client.Post(path, body, "application/json");
        if (!res) {
            auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write)
                raise(Errc::timeout, endpoint_ + path + ": " + httplib::to_string(err));
            raise(Errc::backend_unavailable, endpoint_ + path + ": " + httplib::to_string(err));
        }
        if (res->status >= 500)
            raise(Errc::backend_unavailable,
                  endpoint_ + path + ": HTTP " + std::to_string(res->status));
        if (res->status != 200)
            raise(Errc::bad_response, endpoint_ + path + ": HTTP " + std::to_string(res->status));

        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            raise(Errc::bad_response, endpoint_ + path + ": " + e.what());
        }
        if (kind == "mllm") {
            if (!reply.contains("choices") || reply["choices"].empty() ||
                !reply["choices"][0].contains("message"))
                raise(Errc::bad_response, endpoint_ + path + ": missing choices[0].message");
            return json{
                {"text", reply["choices"][0]["message"].value("content", std::string())}};
        }
        if (!reply.contains("embedding") || !reply["embedding"].is_array())
            raise(Errc::bad_response, endpoint_ + path + ": missing embedding array");
        return json{{"embedding", reply["embedding"]}};
    }

    std::string endpoint_;
    HttpOptions opts_;
    std::mutex mutex_;
};

} // namespace

std::shared_ptr<Transport> make_stub_transport(std::uint64_t seed, int embedding_dim) {
    return std::make_shared<StubTransport>(seed, embedding_dim);
}

std::shared_ptr<Transport> make_file_transport(const std::filesystem::path& fixture_path) {
    return std::make_shared<FileTransport>(fixture_path);
}

std::shared_ptr<Transport> make_http_transport(const std::string& endpoint, HttpOptions opts) {
    return std::make_shared<HttpTransport>(endpoint, opts);
}

// --- cache -------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path ResponseCache::entry_path(BackendKind kind,
                                                const std::string& digest) const {
    return root_ / backend_kind_name(kind) / digest.substr(0, 2) / (digest + ".json");
}

std::optional<json> ResponseCache::lookup(BackendKind kind, const std::string& digest) const {
    std::ifstream in(entry_path(kind, digest));
    if (!in) return std::nullopt;
    try {
        json entry = json::parse(in);
        return entry.at("response");
    } catch (const json::exception&) {
        return std::nullopt; // unreadable entry behaves as a miss
    }
}

void ResponseCache::store(BackendKind kind, const std::string& digest, const json& response) {
    std::filesystem::path target = entry_path(kind, digest);
    json entry{{"request_digest", digest}, {"response", response}, {"created_at", [] {
                   std::time_t t = std::time(nullptr);
                   char buf[32];
                   std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
                   return std::string(buf);
               }()}};

    std::lock_guard<std::mutex> lock(write_mutex_);
    std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) raise(Errc::io_error, "cannot write cache entry " + tmp.string());
        out << entry.dump();
    }
    std::filesystem::rename(tmp, target);
}

std::map<std::string, ResponseCache::KindStats> ResponseCache::stats() const {
    std::map<std::string, KindStats> out;
    if (!std::filesystem::exists(root_)) return out;
    for (const auto& kind_dir : std::filesystem::directory_iterator(root_)) {
        if (!kind_dir.is_directory()) continue;
        KindStats s;
        for (const auto& entry :
             std::filesystem::recursive_directory_iterator(kind_dir.path())) {
            if (entry.is_regular_file()) {
                ++s.entries;
                s.bytes += entry.file_size();
            }
        }
        out[kind_dir.path().filename().string()] = s;
    }
    return out;
}

std::uint64_t ResponseCache::gc(std::optional<BackendKind> kind) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    std::uint64_t removed = 0;
    auto purge = [&removed](const std::filesystem::path& dir) {
        if (!std::filesystem::exists(dir)) return;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) ++removed;
        std::filesystem::remove_all(dir);
    };
    if (kind) {
        purge(root_ / backend_kind_name(*kind));
    } else {
        for (const auto* name : {"mllm", "text_encoder", "image_encoder"})
            purge(root_ / name);
    }
    return removed;
}

namespace {

class CachedTransport : public Transport {
public:
    CachedTransport(std::shared_ptr<Transport> inner, std::shared_ptr<ResponseCache> cache,
                    BackendKind kind)
        : inner_(std::move(inner)), cache_(std::move(cache)), kind_(kind) {}

    json invoke(const TransportRequest& req) override {
        ++calls_; // counts requests seen, not backend calls
        const std::string digest = request_digest(req.canonical);
        if (auto hit = cache_->lookup(kind_, digest)) return *hit;
        json response = inner_->invoke(req);
        cache_->store(kind_, digest, response);
        return response;
    }

private:
    std::shared_ptr<Transport> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendKind kind_;
};

} // namespace

std::shared_ptr<Transport> with_cache(std::shared_ptr<Transport> inner,
                                      std::shared_ptr<ResponseCache> cache, BackendKind kind) {
    if (!cache) return inner;
    return std::make_shared<CachedTransport>(std::move(inner), std::move(cache), kind);
}

// --- typed clients -----------------------------------------------------------------

MllmClient::MllmClient(std::shared_ptr<Transport> transport, std::string model_tag)
    : transport_(std::move(transport)), model_tag_(std::move(model_tag)) {}

std::string MllmClient::generate(const Image& image, const std::string& prompt) {
    if (prompt.empty()) raise(Errc::empty_text, "empty prompt");
    TransportRequest req{canonical_mllm_request(model_tag_, image, prompt), encode_png(image)};
    json response = transport_->invoke(req);
    if (!response.contains("text") || !response["text"].is_string())
        raise(Errc::bad_response, "mllm reply missing text");
    return response["text"].get<std::string>();
}

TextEncoderClient::TextEncoderClient(std::shared_ptr<Transport> transport, std::string model_tag,
                                     std::size_t expected_dim)
    : transport_(std::move(transport)),
      model_tag_(std::move(model_tag)),
      expected_dim_(expected_dim) {}

Embedding TextEncoderClient::encode(const std::string& text) {
    if (text.empty()) raise(Errc::empty_text, "cannot encode empty text");
    TransportRequest req{canonical_text_request(model_tag_, text), {}};
    json response = transport_->invoke(req);
    if (!response.contains("embedding") || !response["embedding"].is_array())
        raise(Errc::bad_response, "encoder reply missing embedding");
    Embedding e{response["embedding"].get<std::vector<double>>()};
    validate_embedding(e, expected_dim_);
    return e;
}

ImageEncoderClient::ImageEncoderClient(std::shared_ptr<Transport> transport,
                                       std::string model_tag, std::size_t expected_dim,
                                       int expected_resolution)
    : transport_(std::move(transport)),
      model_tag_(std::move(model_tag)),
      expected_dim_(expected_dim),
      expected_resolution_(expected_resolution) {}

Embedding ImageEncoderClient::encode(const InstanceImage& img) {
    if (img.pixels.width != expected_resolution_ || img.pixels.height != expected_resolution_)
        raise(Errc::bad_resolution, "instance image is " + std::to_string(img.pixels.width) +
                                        "x" + std::to_string(img.pixels.height) +
                                        ", expected " + std::to_string(expected_resolution_));
    TransportRequest req{canonical_image_request(model_tag_, img), encode_png(img.pixels)};
    json response = transport_->invoke(req);
    if (!response.contains("embedding") || !response["embedding"].is_array())
        raise(Errc::bad_response, "encoder reply missing embedding");
    Embedding e{response["embedding"].get<std::vector<double>>()};
    validate_embedding(e, expected_dim_);
    return e;
}

// --- noun phrases -------------------------------------------------------------------

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower_copy(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

std::string strip_leading_article(const std::string& phrase) {
    const std::string lower = lower_copy(phrase);
    for (const char* article : {"a ", "an ", "the "}) {
        std::size_t n = std::strlen(article);
        if (lower.size() > n && lower.compare(0, n, article) == 0)
            return trim_copy(phrase.substr(n));
    }
    return phrase;
}

std::vector<std::string> split_on_separators(const std::string& text) {
    // separators: "," ";" " and "
    std::vector<std::string> pieces{text};
    for (const std::string sep : {",", ";"}) {
        std::vector<std::string> next;
        for (const auto& piece : pieces) {
            std::size_t start = 0;
            while (true) {
                std::size_t pos = piece.find(sep, start);
                next.push_back(piece.substr(start, pos - start));
                if (pos == std::string::npos) break;
                start = pos + sep.size();
            }
        }
        pieces = std::move(next);
    }
    std::vector<std::string> out;
    for (const auto& piece : pieces) {
        const std::string lower = lower_copy(piece);
        std::size_t start = 0;
        while (true) {
            std::size_t pos = lower.find(" and ", start);
            out.push_back(piece.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 5;
        }
    }
    return out;
}

class BaselineNounPhraseExtractor : public NounPhraseExtractor {
public:
    std::vector<std::string> extract(const std::string& text) override {
        if (trim_copy(text).empty()) return {};
        std::vector<std::string> candidates;
        SurroundingParse parsed = parse_surrounding_description(text);
        if (!parsed.fallback) {
            candidates = parsed.entity_phrases;
        } else {
            candidates = split_on_separators(text);
        }

        std::vector<std::string> out;
        std::set<std::string> seen;
        for (const auto& raw : candidates) {
            std::string phrase = strip_leading_article(trim_copy(raw));
            if (phrase.empty()) continue;
            std::string key = lower_copy(phrase);
            if (seen.insert(key).second) out.push_back(phrase);
        }
        return out;
    }
};

class FileNounPhraseExtractor : public NounPhraseExtractor {
public:
    explicit FileNounPhraseExtractor(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) raise(Errc::not_found, "fixture file not found: " + path.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            raise(Errc::schema_error, path.string() + ": " + e.what());
        }
        table_ = j.value("np", json::object());
    }

    std::vector<std::string> extract(const std::string& text) override {
        if (auto it = table_.find(text); it != table_.end())
            return it->get<std::vector<std::string>>();
        return baseline_.extract(text);
    }

private:
    json table_;
    BaselineNounPhraseExtractor baseline_;
};

} // namespace

std::unique_ptr<NounPhraseExtractor> make_baseline_np_extractor() {
    return std::make_unique<BaselineNounPhraseExtractor>();
}

std::unique_ptr<NounPhraseExtractor> make_file_np_extractor(const std::filesystem::path& path) {
    return std::make_unique<FileNounPhraseExtractor>(path);
}

// --- wiring ----------------------------------------------------------------------------

std::uint64_t BackendSet::backend_calls() const {
    std::uint64_t total = 0;
    for (const auto& t : transports_) total += t->calls();
    return total;
}

BackendSet make_backends(const std::map<BackendKind, BackendId>& ids,
                         const std::filesystem::path& cache_dir, int encoder_resolution,
                         HttpOptions http_opts) {
    BackendSet set;
    if (!cache_dir.empty()) set.cache = std::make_shared<ResponseCache>(cache_dir);

    auto transport_for = [&](const BackendId& id) -> std::shared_ptr<Transport> {
        id.validate();
        std::shared_ptr<Transport> inner;
        switch (id.impl) {
            case BackendImpl::stub: inner = make_stub_transport(id.seed, id.dim); break;
            case BackendImpl::file: inner = make_file_transport(id.endpoint_or_path); break;
            case BackendImpl::http: inner = make_http_transport(id.endpoint_or_path, http_opts); break;
        }
        set.transports_.push_back(inner);
        return with_cache(inner, set.cache, id.kind);
    };

    auto id_for = [&ids](BackendKind kind) -> BackendId {
        auto it = ids.find(kind);
        if (it == ids.end()) {
            BackendId id;
            id.kind = kind;
            id.model_tag = std::string("stub-") + backend_kind_name(kind);
            return id;
        }
        BackendId id = it->second;
        id.kind = kind;
        return id;
    };

    {
        BackendId id = id_for(BackendKind::mllm);
        set.mllm = std::make_unique<MllmClient>(transport_for(id), id.model_tag);
    }
    {
        BackendId id = id_for(BackendKind::text_encoder);
        set.text_encoder = std::make_unique<TextEncoderClient>(transport_for(id), id.model_tag,
                                                               std::size_t(id.dim));
    }
    {
        BackendId id = id_for(BackendKind::image_encoder);
        set.image_encoder = std::make_unique<ImageEncoderClient>(
            transport_for(id), id.model_tag, std::size_t(id.dim), encoder_resolution);
    }
    {
        BackendId id = id_for(BackendKind::np_extractor);
        id.validate();
        if (id.impl == BackendImpl::file)
            set.np_extractor = make_file_np_extractor(id.endpoint_or_path);
        else if (id.impl == BackendImpl::stub)
            set.np_extractor = make_baseline_np_extractor();
        else
            raise(Errc::schema_error, "np_extractor has no http implementation");
    }
    return set;
}

} // namespace refseg
