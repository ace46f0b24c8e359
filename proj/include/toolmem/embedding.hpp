#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace toolmem {

using EmbeddingVector = std::vector<double>;

/// Cosine distance 1 - a.b/(|a||b|), in [0, 2].
/// Dimension mismatch is invalid-argument; a zero vector is degenerate-input.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

/// Text-to-vector contract. Implementations must be deterministic within one
/// process configuration: identical input text, identical vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const std::string& name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

/// Built-in deterministic embedder: token-hash bag of words projected onto a
/// fixed dimension, L2-normalized. Token-free text maps to a reserved unit
/// direction so no input ever embeds to the zero vector.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256);
    const std::string& name() const override { return name_; }
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;

private:
    std::size_t dim_;
    std::string name_;
};

/// Embedding client for an OpenAI-style HTTP endpoint. The credential is read
/// from the TOOLMEM_API_KEY environment variable.
class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(std::string base_url, std::string model,
                   std::string api_key_env = "TOOLMEM_API_KEY");
    const std::string& name() const override { return name_; }
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_env_;
    std::string name_;
    std::size_t dim_ = 0; // learned from the first response
};

/// Persistent map (entry_id, text digest) -> vector, stored as JSONL next to
/// the memory file. The digest covers embedder name, dimension, and text, so
/// a text edit or embedder switch invalidates the cached vector.
class EmbeddingCache {
public:
    static std::string digest(const Embedder& embedder, const std::string& text);

    std::optional<EmbeddingVector> get(const std::string& entry_id,
                                       const std::string& digest) const;
    void put(const std::string& entry_id, const std::string& digest, EmbeddingVector vec);

    /// Cache-aware embed: hit returns the stored vector, miss calls the
    /// embedder and stores the result.
    EmbeddingVector embed_cached(Embedder& embedder, const std::string& entry_id,
                                 const std::string& text);

    std::size_t size() const { return records_.size(); }

    void save(const std::filesystem::path& path) const;
    static EmbeddingCache load(const std::filesystem::path& path);

private:
    struct Key {
        std::string entry_id;
        std::string digest;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    std::unordered_map<Key, EmbeddingVector, KeyHash> records_;
};

} // namespace toolmem
