#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "toolmem/embedding.hpp"
#include "toolmem/memory.hpp"

namespace toolmem {

struct RetrievalHit {
    MemoryEntry entry;
    double distance = 0.0; // cosine distance, in [0, 2]
};

using CategoryHits = std::array<std::vector<RetrievalHit>, 4>;

/// Exact-scan vector index over memory entries, bucketed per
/// (tool_id, category). Buckets are small (at most a few hundred entries), so
/// a full scan per query is both correct and fast enough.
class VectorIndex {
public:
    explicit VectorIndex(EmbeddingCache* cache = nullptr) : cache_(cache) {}

    /// Add or replace entries. Re-indexing an existing entry_id with new text
    /// replaces its vector.
    void index_entries(const std::string& tool_id, const std::vector<MemoryEntry>& entries,
                       Embedder& embedder);

    void remove_entries(const std::string& tool_id, const std::vector<std::string>& entry_ids);

    /// Drop the tool's buckets and index the memory from scratch.
    void rebuild(const ToolMemory& memory, Embedder& embedder);

    /// Hits sorted by ascending distance, ties by ascending entry_id;
    /// at most min(k, bucket size). An empty bucket yields an empty list.
    std::vector<RetrievalHit> retrieve_top_k(const std::string& query, const std::string& tool_id,
                                             ProficiencyCategory category, std::size_t k,
                                             Embedder& embedder) const;

    /// Per-category top-k for one query.
    CategoryHits retrieve_all_categories(const std::string& query, const std::string& tool_id,
                                         std::size_t k, Embedder& embedder) const;

    std::size_t bucket_size(const std::string& tool_id, ProficiencyCategory category) const;

private:
    struct Item {
        MemoryEntry entry;
        EmbeddingVector vec;
    };
    using Buckets = std::array<std::vector<Item>, 4>;

    std::map<std::string, Buckets> tools_;
    EmbeddingCache* cache_;
};

} // namespace toolmem
