#include "toolmem/prompts.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "toolmem/errors.hpp"

#ifndef TOOLMEM_ASSET_DIR
#define TOOLMEM_ASSET_DIR ""
#endif

namespace toolmem {

namespace {

bool is_placeholder_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Returns the placeholder name if body[pos] opens one, else empty.
std::string placeholder_at(const std::string& body, std::size_t pos) {
    if (body[pos] != '{' || pos + 1 >= body.size()) return {};
    std::size_t i = pos + 1;
    if (!is_placeholder_start(body[i])) return {};
    std::string name;
    while (i < body.size() && is_placeholder_char(body[i])) name.push_back(body[i++]);
    if (i >= body.size() || body[i] != '}') return {};
    return name;
}

} // namespace

PromptTemplate make_template(std::string name, std::string body) {
    PromptTemplate tmpl;
    tmpl.name = std::move(name);
    tmpl.body = std::move(body);
    for (std::size_t i = 0; i < tmpl.body.size(); ++i) {
        std::string slot = placeholder_at(tmpl.body, i);
        if (!slot.empty()) {
            tmpl.required_placeholders.insert(slot);
            i += slot.size() + 1; // skip past "name}"
        }
    }
    return tmpl;
}

std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings,
                            std::vector<std::string>* warnings) {
    for (const auto& slot : tmpl.required_placeholders) {
        if (!bindings.count(slot)) {
            fail(ErrorKind::Template,
                 "template \"" + tmpl.name + "\": missing placeholder \"" + slot + "\"");
        }
    }
    if (warnings) {
        for (const auto& [key, _] : bindings) {
            if (!tmpl.required_placeholders.count(key)) {
                warnings->push_back("template \"" + tmpl.name + "\": unused binding \"" + key +
                                    "\"");
            }
        }
    }

    std::string out;
    out.reserve(tmpl.body.size());
    for (std::size_t i = 0; i < tmpl.body.size(); ++i) {
        std::string slot = placeholder_at(tmpl.body, i);
        if (!slot.empty()) {
            out += bindings.at(slot);
            i += slot.size() + 1;
        } else {
            out.push_back(tmpl.body[i]);
        }
    }
    return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        fail(ErrorKind::Io, "template directory not found: " + dir.string());
    }
    PromptLibrary lib;
    for (const auto& item : std::filesystem::recursive_directory_iterator(dir)) {
        if (!item.is_regular_file() || item.path().extension() != ".txt") continue;
        std::ifstream in(item.path());
        if (!in) fail(ErrorKind::Io, "cannot read template: " + item.path().string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        std::string body = buffer.str();
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();

        std::string name = std::filesystem::relative(item.path(), dir).replace_extension().generic_string();
        lib.templates_[name] = make_template(name, std::move(body));
    }
    if (lib.templates_.empty()) {
        fail(ErrorKind::Io, "no templates found under: " + dir.string());
    }
    return lib;
}

std::filesystem::path PromptLibrary::default_dir() {
    if (const char* env = std::getenv("TOOLMEM_TEMPLATES"); env && *env) {
        return env;
    }
    return std::filesystem::path(TOOLMEM_ASSET_DIR) / "prompts";
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        fail(ErrorKind::NotFound, "unknown template: " + name);
    }
    return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

} // namespace toolmem
