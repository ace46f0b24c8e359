#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "toolmem/experience.hpp"
#include "toolmem/gateway.hpp"
#include "toolmem/index.hpp"
#include "toolmem/memory.hpp"
#include "toolmem/prompts.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

/// Sentences recovered from the model's "updated overall memory" blob.
/// classified entries begin with a recognized proficiency phrase; everything
/// else lands in remainder and is never silently dropped.
struct ParsedMemoryText {
    std::vector<std::pair<ProficiencyCategory, std::string>> classified;
    std::vector<std::string> remainder;
};

/// Splits a memory blob into sentences and maps leading phrases to
/// categories: "proficient at" / "good at" / "bad at" / "poor at" or
/// "weak at". Sentences are normalized to end with a period.
ParsedMemoryText parse_memory_text(const std::string& blob);

struct BuildStep {
    int step = 0;
    std::string experience_id;
    std::size_t retrieved_count = 0;
    std::size_t added_count = 0;
    std::size_t removed_count = 0;
    std::size_t remainder_count = 0;
};

struct BuilderConfig {
    std::size_t k_build = 6;
    std::string model_id;
    IdGenerator id_generator = random_uuid_generator();
    Clock clock = system_clock_utc();
};

class MemoryBuilder {
public:
    MemoryBuilder(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
                  BuilderConfig config = {});

    /// Narrative feedback for an experience that has none. The experience
    /// record itself is not modified; the caller attaches the result.
    std::string generate_feedback(const Experience& experience);

    /// One refinement step: retrieve k_build entries per category, run the
    /// refinement prompt, parse, and apply a single replace transaction.
    /// On any gateway or parse failure no transaction is applied.
    ToolMemory induce_and_update(const ToolMemory& memory, const Experience& experience,
                                 VectorIndex& index, BuildStep* step_log = nullptr);

    /// Folds induce_and_update over the experiences in input order, starting
    /// from an empty memory. `on_step`, when set, runs after each applied
    /// step (durability hook). Fails fast on the first unrecoverable step.
    ToolMemory build_memory(const std::vector<Experience>& experiences,
                            const std::string& tool_id, const std::string& overview,
                            VectorIndex& index, std::vector<BuildStep>* log = nullptr,
                            const std::function<void(const ToolMemory&, const BuildStep&)>& on_step = {});

    /// category-grouped concatenation of retrieved entry texts, one per line
    std::string render_current_memory(const CategoryHits& retrieved) const;

    /// Prompt renderers, exposed for dry runs and prompt audits; the build
    /// path sends exactly these strings.
    std::string render_feedback_prompt(const Experience& experience) const;
    std::string render_refinement_prompt(const ToolMemory& memory, const Experience& experience,
                                         const CategoryHits& retrieved) const;

private:
    const PromptLibrary& prompts_;
    Backend& backend_;
    Embedder& embedder_;
    BuilderConfig config_;
};

} // namespace toolmem
