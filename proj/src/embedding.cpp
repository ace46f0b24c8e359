#include "toolmem/embedding.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "toolmem/errors.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

using nlohmann::json;

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::InvalidArgument,
             "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                 std::to_string(b.size()));
    }
    if (a.empty()) fail(ErrorKind::InvalidArgument, "empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
            fail(ErrorKind::InvalidArgument, "non-finite vector component");
        }
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        fail(ErrorKind::DegenerateInput, "cosine distance of zero vector");
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// --- HashEmbedder ------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) fail(ErrorKind::InvalidArgument, "embedder dimension must be positive");
    name_ = "hash-" + std::to_string(dim_);
}

EmbeddingVector HashEmbedder::embed(const std::string& text) {
    EmbeddingVector vec(dim_, 0.0);
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        vec[0] = 1.0;
        return vec;
    }
    for (const auto& token : tokens) {
        vec[fnv1a64(token) % dim_] += 1.0;
    }
    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : vec) v /= norm;
    return vec;
}

// --- RemoteEmbedder ----------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(std::string base_url, std::string model,
                               std::string api_key_env)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_env_(std::move(api_key_env)) {
    name_ = "remote-" + model_;
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (!key || !*key) {
        fail(ErrorKind::Embedding, "credential not set: $" + api_key_env_);
    }
    httplib::Client client(base_url_);
    client.set_read_timeout(60, 0);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    json body{{"model", model_}, {"input", text}};
    auto res = client.Post("/v1/embeddings", headers, body.dump(), "application/json");
    if (!res) {
        fail(ErrorKind::Transport, "embedding request failed: " + base_url_);
    }
    if (res->status != 200) {
        fail(ErrorKind::Embedding,
             "embedding backend returned status " + std::to_string(res->status) + ": " + res->body);
    }
    json parsed;
    try {
        parsed = json::parse(res->body);
        auto values = parsed.at("data").at(0).at("embedding").get<EmbeddingVector>();
        if (values.empty()) fail(ErrorKind::Embedding, "backend returned empty embedding");
        if (dim_ == 0) dim_ = values.size();
        if (values.size() != dim_) {
            fail(ErrorKind::Embedding, "embedding dimension changed mid-run");
        }
        return values;
    } catch (const json::exception& e) {
        fail(ErrorKind::Embedding, std::string("malformed embedding response: ") + e.what());
    }
}

// --- EmbeddingCache ----------------------------------------------------------

std::size_t EmbeddingCache::KeyHash::operator()(const Key& k) const {
    return fnv1a64(k.entry_id + "\x1f" + k.digest);
}

std::string EmbeddingCache::digest(const Embedder& embedder, const std::string& text) {
    return fnv1a64_hex(embedder.name() + "\x1f" + std::to_string(embedder.dim()) + "\x1f" + text);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& entry_id,
                                                   const std::string& digest) const {
    auto it = records_.find(Key{entry_id, digest});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::put(const std::string& entry_id, const std::string& digest,
                         EmbeddingVector vec) {
    records_[Key{entry_id, digest}] = std::move(vec);
}

EmbeddingVector EmbeddingCache::embed_cached(Embedder& embedder, const std::string& entry_id,
                                             const std::string& text) {
    const std::string d = digest(embedder, text);
    if (auto hit = get(entry_id, d)) return *hit;
    EmbeddingVector vec = embedder.embed(text);
    put(entry_id, d, vec);
    return vec;
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
    for (const auto& [key, vec] : records_) {
        json record{{"entry_id", key.entry_id}, {"digest", key.digest}, {"values", vec}};
        out << record.dump() << '\n';
    }
}

EmbeddingCache EmbeddingCache::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
    EmbeddingCache cache;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json record = json::parse(line);
            cache.put(record.at("entry_id").get<std::string>(),
                      record.at("digest").get<std::string>(),
                      record.at("values").get<EmbeddingVector>());
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cache;
}

} // namespace toolmem
