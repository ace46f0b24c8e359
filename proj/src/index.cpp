#include "toolmem/index.hpp"

#include <algorithm>

#include "toolmem/errors.hpp"

namespace toolmem {

void VectorIndex::index_entries(const std::string& tool_id,
                                const std::vector<MemoryEntry>& entries, Embedder& embedder) {
    for (const auto& entry : entries) {
        if (entry.tool_id != tool_id) {
            fail(ErrorKind::InvalidArgument,
                 "entry " + entry.entry_id + " belongs to tool \"" + entry.tool_id +
                     "\", not \"" + tool_id + "\"");
        }
    }
    auto& buckets = tools_[tool_id];
    for (const auto& entry : entries) {
        EmbeddingVector vec;
        try {
            vec = cache_ ? cache_->embed_cached(embedder, entry.entry_id, entry.text)
                         : embedder.embed(entry.text);
        } catch (const Error& e) {
            fail(ErrorKind::Embedding,
                 "embedding entry " + entry.entry_id + " failed: " + e.what());
        }
        // same id may have moved category on re-index; purge everywhere first
        for (auto& bucket : buckets) {
            std::erase_if(bucket,
                          [&](const Item& item) { return item.entry.entry_id == entry.entry_id; });
        }
        buckets[category_index(entry.category)].push_back(Item{entry, std::move(vec)});
    }
}

void VectorIndex::remove_entries(const std::string& tool_id,
                                 const std::vector<std::string>& entry_ids) {
    auto it = tools_.find(tool_id);
    if (it == tools_.end()) return;
    for (auto& bucket : it->second) {
        std::erase_if(bucket, [&](const Item& item) {
            return std::find(entry_ids.begin(), entry_ids.end(), item.entry.entry_id) !=
                   entry_ids.end();
        });
    }
}

void VectorIndex::rebuild(const ToolMemory& memory, Embedder& embedder) {
    tools_.erase(memory.tool_id);
    for (auto category : kAllCategories) {
        index_entries(memory.tool_id, memory.entries(category), embedder);
    }
}

std::vector<RetrievalHit> VectorIndex::retrieve_top_k(const std::string& query,
                                                      const std::string& tool_id,
                                                      ProficiencyCategory category, std::size_t k,
                                                      Embedder& embedder) const {
    if (k == 0) fail(ErrorKind::InvalidArgument, "k must be >= 1");
    auto it = tools_.find(tool_id);
    if (it == tools_.end()) return {};
    const auto& bucket = it->second[category_index(category)];
    if (bucket.empty()) return {};

    EmbeddingVector query_vec = embedder.embed(query);
    std::vector<RetrievalHit> hits;
    hits.reserve(bucket.size());
    for (const auto& item : bucket) {
        hits.push_back(RetrievalHit{item.entry, cosine_distance(query_vec, item.vec)});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.entry.entry_id < b.entry.entry_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

CategoryHits VectorIndex::retrieve_all_categories(const std::string& query,
                                                  const std::string& tool_id, std::size_t k,
                                                  Embedder& embedder) const {
    CategoryHits result;
    for (auto category : kAllCategories) {
        result[category_index(category)] = retrieve_top_k(query, tool_id, category, k, embedder);
    }
    return result;
}

std::size_t VectorIndex::bucket_size(const std::string& tool_id,
                                     ProficiencyCategory category) const {
    auto it = tools_.find(tool_id);
    if (it == tools_.end()) return 0;
    return it->second[category_index(category)].size();
}

} // namespace toolmem
