#include "toolmem/memory_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "toolmem/errors.hpp"

namespace toolmem {

using nlohmann::json;

namespace {

json entry_to_json(const MemoryEntry& entry) {
    return json{
        {"record", "entry"},
        {"entry_id", entry.entry_id},
        {"category", category_label(entry.category)},
        {"text", entry.text},
        {"source_experience_ids", entry.source_experience_ids},
        {"revision", entry.revision},
        {"created_at", entry.created_at},
        {"weight", category_weight(entry.category)},
    };
}

const json& require_key(const json& record, const char* key, int line) {
    auto it = record.find(key);
    if (it == record.end()) {
        fail(ErrorKind::Schema,
             "line " + std::to_string(line) + ": missing key \"" + key + "\"");
    }
    return *it;
}

} // namespace

void save_memory(const ToolMemory& memory, std::ostream& out) {
    json header{
        {"record", "header"},
        {"tool_id", memory.tool_id},
        {"overview", memory.overview},
        {"version", memory.version},
    };
    out << header.dump() << '\n';
    for (auto category : kAllCategories) {
        for (const auto& entry : memory.entries(category)) {
            out << entry_to_json(entry).dump() << '\n';
        }
    }
    if (!out) fail(ErrorKind::Io, "write failed while saving memory");
}

void save_memory(const ToolMemory& memory, const std::filesystem::path& destination) {
    if (destination.has_parent_path()) {
        std::filesystem::create_directories(destination.parent_path());
    }
    std::ofstream out(destination);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + destination.string());
    save_memory(memory, out);
}

ToolMemory load_memory(std::istream& in) {
    std::string line;
    int line_no = 0;
    ToolMemory memory;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.is_object()) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": not a JSON object");
        }

        std::string kind = require_key(record, "record", line_no).get<std::string>();
        if (kind == "header") {
            if (have_header) {
                fail(ErrorKind::Schema, "line " + std::to_string(line_no) + ": duplicate header");
            }
            memory.tool_id = require_key(record, "tool_id", line_no).get<std::string>();
            memory.overview = require_key(record, "overview", line_no).get<std::string>();
            memory.version = require_key(record, "version", line_no).get<int>();
            have_header = true;
        } else if (kind == "entry") {
            if (!have_header) {
                fail(ErrorKind::Schema,
                     "line " + std::to_string(line_no) + ": entry before header");
            }
            MemoryEntry entry;
            entry.entry_id = require_key(record, "entry_id", line_no).get<std::string>();
            std::string label = require_key(record, "category", line_no).get<std::string>();
            auto category = category_from_label(label);
            if (!category) {
                fail(ErrorKind::Schema, "line " + std::to_string(line_no) +
                                            ": unknown category label \"" + label + "\"");
            }
            entry.category = *category;
            entry.tool_id = memory.tool_id;
            entry.text = require_key(record, "text", line_no).get<std::string>();
            entry.source_experience_ids =
                require_key(record, "source_experience_ids", line_no)
                    .get<std::vector<std::string>>();
            entry.revision = require_key(record, "revision", line_no).get<int>();
            entry.created_at = require_key(record, "created_at", line_no).get<std::string>();
            if (memory.contains(entry.entry_id)) {
                fail(ErrorKind::Schema, "line " + std::to_string(line_no) +
                                            ": duplicate entry_id " + entry.entry_id);
            }
            memory.entries(entry.category).push_back(std::move(entry));
        } else {
            fail(ErrorKind::Schema,
                 "line " + std::to_string(line_no) + ": unknown record kind \"" + kind + "\"");
        }
    }
    if (!have_header) fail(ErrorKind::Parse, "no header record found");
    return memory;
}

ToolMemory load_memory(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) fail(ErrorKind::Io, "cannot open for reading: " + source.string());
    return load_memory(in);
}

} // namespace toolmem
