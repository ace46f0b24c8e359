#include "toolmem/memory.hpp"

#include <unordered_set>

#include "toolmem/errors.hpp"

namespace toolmem {

std::size_t ToolMemory::total_entries() const {
    std::size_t n = 0;
    for (const auto& bucket : entries_by_category) n += bucket.size();
    return n;
}

bool ToolMemory::contains(const std::string& entry_id) const {
    return find(entry_id) != nullptr;
}

const MemoryEntry* ToolMemory::find(const std::string& entry_id) const {
    for (const auto& bucket : entries_by_category) {
        for (const auto& entry : bucket) {
            if (entry.entry_id == entry_id) return &entry;
        }
    }
    return nullptr;
}

ToolMemory create_tool_memory(const std::string& tool_id, const std::string& overview) {
    if (tool_id.empty()) fail(ErrorKind::InvalidArgument, "tool_id must be non-empty");
    ToolMemory memory;
    memory.tool_id = tool_id;
    memory.overview = overview;
    memory.version = 0;
    return memory;
}

ToolMemory replace_entries(const ToolMemory& memory,
                           const std::set<std::string>& removed_ids,
                           const std::vector<MemoryEntry>& added) {
    for (const auto& id : removed_ids) {
        if (!memory.contains(id)) {
            fail(ErrorKind::NotFound, "removed entry_id not in memory: " + id);
        }
    }
    for (const auto& entry : added) {
        if (entry.tool_id != memory.tool_id) {
            fail(ErrorKind::InvalidArgument,
                 "entry " + entry.entry_id + " targets tool \"" + entry.tool_id +
                     "\", memory is for \"" + memory.tool_id + "\"");
        }
        if (entry.entry_id.empty()) {
            fail(ErrorKind::InvalidArgument, "added entry has empty entry_id");
        }
        if (entry.text.empty()) {
            fail(ErrorKind::InvalidArgument, "added entry " + entry.entry_id + " has empty text");
        }
    }

    // ids must stay unique across surviving plus added entries
    std::unordered_set<std::string> ids;
    for (const auto& bucket : memory.entries_by_category) {
        for (const auto& entry : bucket) {
            if (!removed_ids.count(entry.entry_id)) ids.insert(entry.entry_id);
        }
    }
    for (const auto& entry : added) {
        if (!ids.insert(entry.entry_id).second) {
            fail(ErrorKind::InvalidArgument, "duplicate entry_id: " + entry.entry_id);
        }
    }

    ToolMemory updated;
    updated.tool_id = memory.tool_id;
    updated.overview = memory.overview;
    updated.version = memory.version + 1;
    for (std::size_t i = 0; i < memory.entries_by_category.size(); ++i) {
        for (const auto& entry : memory.entries_by_category[i]) {
            if (!removed_ids.count(entry.entry_id)) {
                updated.entries_by_category[i].push_back(entry);
            }
        }
    }
    for (const auto& entry : added) {
        updated.entries(entry.category).push_back(entry);
    }
    return updated;
}

} // namespace toolmem
