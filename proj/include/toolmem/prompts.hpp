#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace toolmem {

/// Text template with {placeholder} slots. Placeholders are [A-Za-z_][A-Za-z0-9_]*
/// between braces; any other brace sequence is literal text.
struct PromptTemplate {
    std::string name;
    std::string body;
    std::set<std::string> required_placeholders;
};

using Bindings = std::map<std::string, std::string>;

PromptTemplate make_template(std::string name, std::string body);

/// Substitutes every placeholder; the rest of the body is passed through
/// byte-identical. A missing binding is a template-error naming the slot;
/// extra bindings are ignored (reported through `warnings` when given).
std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings,
                            std::vector<std::string>* warnings = nullptr);

/// The prompt set shipped under assets/prompts. Template names mirror the
/// directory layout: "feedback_generation", "memory_refinement",
/// "image/score_generic", "text/score_toolmem", ...
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);

    /// Resolution order: explicit dir argument, $TOOLMEM_TEMPLATES, then the
    /// source-tree assets directory baked in at build time.
    static std::filesystem::path default_dir();

    const PromptTemplate& get(const std::string& name) const;
    bool has(const std::string& name) const { return templates_.count(name) > 0; }
    std::vector<std::string> names() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

} // namespace toolmem
