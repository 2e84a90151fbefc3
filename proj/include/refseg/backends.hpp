// Pluggable model backends: the MLLM generator, the text/image encoders, and
// the noun-phrase extractor. Three transport implementations (http, file
// fixture, deterministic stub) sit behind a content-addressed response cache;
// requests are keyed by a canonical JSON payload so identical work is never
// repeated against a remote model.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refseg/image.hpp"
#include "refseg/masks.hpp"

namespace refseg {

// --- embedding ---------------------------------------------------------------

struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

// Boundary check: finite entries, nonempty, not all-zero, optional expected
// dimension. Violations raise BadResponse.
void validate_embedding(const Embedding& e, std::size_t expected_dim = 0);

// --- identities ---------------------------------------------------------------

enum class BackendKind { mllm, text_encoder, image_encoder, np_extractor };
enum class BackendImpl { http, file, stub };

const char* backend_kind_name(BackendKind k);
BackendKind backend_kind_from_name(const std::string& name);
const char* backend_impl_name(BackendImpl i);
BackendImpl backend_impl_from_name(const std::string& name);

struct BackendId {
    BackendKind kind = BackendKind::mllm;
    BackendImpl impl = BackendImpl::stub;
    std::string endpoint_or_path; // required for http (endpoint) and file (path)
    std::string model_tag;        // free text; part of every cache key
    int dim = 512;                // encoder output dimension
    std::uint64_t seed = 1;       // stub determinism seed

    void validate() const; // SchemaError on impl/locator mismatch
};

// --- canonical requests --------------------------------------------------------

// Canonicalized request payloads: nlohmann::json orders object keys, so
// dump() is a stable byte representation. The digest of that dump is the
// cache key; any byte difference changes it.
nlohmann::json canonical_text_request(const std::string& model_tag, const std::string& text);
nlohmann::json canonical_image_request(const std::string& model_tag, const InstanceImage& img);
nlohmann::json canonical_mllm_request(const std::string& model_tag, const Image& image,
                                      const std::string& prompt);

std::string request_digest(const nlohmann::json& canonical);
std::string image_content_digest(const Image& img);
std::string prompt_digest(const std::string& prompt);

// --- transport -----------------------------------------------------------------

// Side-band payload for transports that need raw bytes (HTTP sends the PNG;
// stub and file key on the canonical request alone).
struct TransportRequest {
    nlohmann::json canonical;
    std::string image_png;
};

class Transport {
public:
    virtual ~Transport() = default;

    // Returns {"text": ...} for mllm requests, {"embedding": [...]} for
    // encoder requests.
    virtual nlohmann::json invoke(const TransportRequest& req) = 0;

    std::uint64_t calls() const { return calls_.load(); }

protected:
    std::atomic<std::uint64_t> calls_{0};
};

struct HttpOptions {
    int timeout_ms = 30000;
    int retries = 3;        // total attempts
    int backoff_ms = 1000;  // doubles per attempt
};

std::shared_ptr<Transport> make_stub_transport(std::uint64_t seed, int embedding_dim);
std::shared_ptr<Transport> make_file_transport(const std::filesystem::path& fixture_path);
std::shared_ptr<Transport> make_http_transport(const std::string& endpoint, HttpOptions opts = {});

// --- cache ----------------------------------------------------------------------

// On-disk, append-only: <root>/<kind>/<first 2 hex>/<digest>.json holding
// {request_digest, response, created_at}. Writes are atomic (temp + rename);
// reads take no lock.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    std::optional<nlohmann::json> lookup(BackendKind kind, const std::string& digest) const;
    void store(BackendKind kind, const std::string& digest, const nlohmann::json& response);

    struct KindStats {
        std::uint64_t entries = 0;
        std::uint64_t bytes = 0;
    };
    std::map<std::string, KindStats> stats() const;
    std::uint64_t gc(std::optional<BackendKind> kind = std::nullopt); // returns entries removed

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path entry_path(BackendKind kind, const std::string& digest) const;

    std::filesystem::path root_;
    mutable std::mutex write_mutex_;
};

// Wraps a transport with the cache: (miss then hit) returns byte-identical
// responses and a hit issues no backend call.
std::shared_ptr<Transport> with_cache(std::shared_ptr<Transport> inner,
                                      std::shared_ptr<ResponseCache> cache, BackendKind kind);

// --- typed clients ----------------------------------------------------------------

class MllmClient {
public:
    MllmClient(std::shared_ptr<Transport> transport, std::string model_tag);

    std::string generate(const Image& image, const std::string& prompt);

    std::uint64_t backend_calls() const { return transport_->calls(); }

private:
    std::shared_ptr<Transport> transport_;
    std::string model_tag_;
};

class TextEncoderClient {
public:
    TextEncoderClient(std::shared_ptr<Transport> transport, std::string model_tag,
                      std::size_t expected_dim);

    Embedding encode(const std::string& text); // EmptyText on ""

    std::uint64_t backend_calls() const { return transport_->calls(); }

private:
    std::shared_ptr<Transport> transport_;
    std::string model_tag_;
    std::size_t expected_dim_;
};

class ImageEncoderClient {
public:
    ImageEncoderClient(std::shared_ptr<Transport> transport, std::string model_tag,
                       std::size_t expected_dim, int expected_resolution);

    Embedding encode(const InstanceImage& img); // BadResolution on size mismatch

    std::uint64_t backend_calls() const { return transport_->calls(); }

private:
    std::shared_ptr<Transport> transport_;
    std::string model_tag_;
    std::size_t expected_dim_;
    int expected_resolution_;
};

// --- noun phrases -----------------------------------------------------------------

class NounPhraseExtractor {
public:
    virtual ~NounPhraseExtractor() = default;

    // Ordered, case-insensitively deduplicated noun-phrase candidates.
    virtual std::vector<std::string> extract(const std::string& text) = 0;
};

// Deterministic baseline: entities of a well-formed surrounding description,
// otherwise a {",", ";", " and "} split; leading articles stripped.
std::unique_ptr<NounPhraseExtractor> make_baseline_np_extractor();
// Planted table from a fixture file ("np" map), baseline for missing keys.
std::unique_ptr<NounPhraseExtractor> make_file_np_extractor(const std::filesystem::path& path);

// --- wiring ------------------------------------------------------------------------

struct BackendSet {
    std::shared_ptr<ResponseCache> cache; // null when caching disabled
    std::unique_ptr<MllmClient> mllm;
    std::unique_ptr<TextEncoderClient> text_encoder;
    std::unique_ptr<ImageEncoderClient> image_encoder;
    std::unique_ptr<NounPhraseExtractor> np_extractor;

    // Calls that actually reached a transport (cache hits excluded).
    std::uint64_t backend_calls() const;

private:
    friend BackendSet make_backends(const std::map<BackendKind, BackendId>&,
                                    const std::filesystem::path&, int, HttpOptions);
    std::vector<std::shared_ptr<Transport>> transports_;
};

// Builds the typed clients from per-kind backend ids. `cache_dir` empty
// disables caching. `encoder_resolution` is the render target the image
// encoder validates against.
BackendSet make_backends(const std::map<BackendKind, BackendId>& ids,
                         const std::filesystem::path& cache_dir, int encoder_resolution,
                         HttpOptions http_opts = {});

} // namespace refseg
