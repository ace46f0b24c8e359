#pragma once

#include <filesystem>
#include <iosfwd>

#include "toolmem/memory.hpp"

namespace toolmem {

// Memory file format: line-delimited JSON. First record is the header
//   {"record":"header","tool_id":...,"overview":...,"version":N}
// followed by one record per entry, in category order then insertion order:
//   {"record":"entry","entry_id":...,"category":"good","text":...,
//    "source_experience_ids":[...],"revision":N,"created_at":"...","weight":N}

void save_memory(const ToolMemory& memory, std::ostream& out);
void save_memory(const ToolMemory& memory, const std::filesystem::path& destination);

ToolMemory load_memory(std::istream& in);
ToolMemory load_memory(const std::filesystem::path& source);

} // namespace toolmem
