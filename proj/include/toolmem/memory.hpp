#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "toolmem/proficiency.hpp"

namespace toolmem {

/// One natural-language capability statement about a tool.
struct MemoryEntry {
    std::string entry_id;
    std::string tool_id;
    ProficiencyCategory category = ProficiencyCategory::Good;
    std::string text;
    std::vector<std::string> source_experience_ids;
    int revision = 0;
    std::string created_at; // RFC-3339

    bool operator==(const MemoryEntry&) const = default;
};

/// Per-tool capability memory, partitioned by proficiency category.
/// Entry order within a category is insertion order.
struct ToolMemory {
    std::string tool_id;
    std::string overview;
    int version = 0;
    std::array<std::vector<MemoryEntry>, 4> entries_by_category;

    const std::vector<MemoryEntry>& entries(ProficiencyCategory c) const {
        return entries_by_category[category_index(c)];
    }
    std::vector<MemoryEntry>& entries(ProficiencyCategory c) {
        return entries_by_category[category_index(c)];
    }

    std::size_t total_entries() const;
    bool contains(const std::string& entry_id) const;
    const MemoryEntry* find(const std::string& entry_id) const;

    bool operator==(const ToolMemory&) const = default;
};

/// Empty memory with all four category lists present, version 0.
ToolMemory create_tool_memory(const std::string& tool_id, const std::string& overview);

/// One update transaction: drop `removed_ids`, append `added` under their
/// declared categories, bump version by exactly one. Everything else is
/// left byte-identical.
ToolMemory replace_entries(const ToolMemory& memory,
                           const std::set<std::string>& removed_ids,
                           const std::vector<MemoryEntry>& added);

} // namespace toolmem
