#include "toolmem/builder.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "toolmem/errors.hpp"

namespace toolmem {

namespace {

const std::pair<const char*, ProficiencyCategory> kPhraseTable[] = {
    {"proficient at", ProficiencyCategory::Proficient},
    {"good at", ProficiencyCategory::Good},
    {"bad at", ProficiencyCategory::Bad},
    {"poor at", ProficiencyCategory::Weak},
    {"weak at", ProficiencyCategory::Weak},
};

std::string strip_bullet(std::string s) {
    std::size_t i = 0;
    while (i < s.size() && (s[i] == '-' || s[i] == '*' || s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::vector<std::string> split_sentences(const std::string& blob) {
    std::vector<std::string> sentences;
    std::string line;
    auto flush_line = [&](const std::string& raw) {
        std::string current;
        for (char c : raw) {
            current.push_back(c);
            if (is_terminal(c)) {
                std::string sentence = trim(strip_bullet(current));
                if (!sentence.empty()) sentences.push_back(sentence);
                current.clear();
            }
        }
        std::string tail = trim(strip_bullet(current));
        if (!tail.empty()) sentences.push_back(tail + ".");
    };
    for (char c : blob) {
        if (c == '\n' || c == '\r') {
            if (!line.empty()) flush_line(line);
            line.clear();
        } else {
            line.push_back(c);
        }
    }
    if (!line.empty()) flush_line(line);
    return sentences;
}

} // namespace

ParsedMemoryText parse_memory_text(const std::string& blob) {
    ParsedMemoryText out;
    for (const auto& sentence : split_sentences(blob)) {
        bool matched = false;
        for (const auto& [phrase, category] : kPhraseTable) {
            if (starts_with_ci(sentence, phrase)) {
                out.classified.emplace_back(category, sentence);
                matched = true;
                break;
            }
        }
        if (!matched) out.remainder.push_back(sentence);
    }
    return out;
}

MemoryBuilder::MemoryBuilder(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
                             BuilderConfig config)
    : prompts_(prompts), backend_(backend), embedder_(embedder), config_(std::move(config)) {}

std::string MemoryBuilder::render_feedback_prompt(const Experience& experience) const {
    return render_template(prompts_.get("feedback_generation"),
                           {{"prompt", experience.task_prompt},
                            {"score", std::to_string(experience.score)}});
}

std::string MemoryBuilder::generate_feedback(const Experience& experience) {
    if (experience.feedback) {
        fail(ErrorKind::InvalidArgument,
             "experience " + experience.experience_id + " already has feedback");
    }
    if (!experience.valid_score()) {
        fail(ErrorKind::InvalidArgument, "experience score must be 1-5");
    }
    CompletionRequest request;
    ChatMessage message{ChatRole::User, render_feedback_prompt(experience)};
    if (experience.solution_is_attachment) message.image_ref = experience.solution;
    request.messages.push_back(std::move(message));
    request.model_id = config_.model_id;
    std::string feedback = backend_.complete(request);
    if (trim(feedback).empty()) fail(ErrorKind::Model, "empty feedback completion");
    return feedback;
}

std::string MemoryBuilder::render_refinement_prompt(const ToolMemory& memory,
                                                    const Experience& experience,
                                                    const CategoryHits& retrieved) const {
    if (!experience.feedback) {
        fail(ErrorKind::InvalidArgument,
             "experience " + experience.experience_id +
                 " has no feedback; call generate_feedback first");
    }
    return render_template(prompts_.get("memory_refinement"),
                           {
                               {"tool_name", memory.tool_id},
                               {"current_memory", render_current_memory(retrieved)},
                               {"task_prompt", experience.task_prompt},
                               {"response", experience.solution},
                               {"score_rubric", experience.rubric},
                               {"score", std::to_string(experience.score)},
                               {"feedback", *experience.feedback},
                           });
}

std::string MemoryBuilder::render_current_memory(const CategoryHits& retrieved) const {
    std::string out;
    for (auto category : kAllCategories) {
        for (const auto& hit : retrieved[category_index(category)]) {
            if (!out.empty()) out += "\n";
            out += hit.entry.text;
        }
    }
    return out;
}

ToolMemory MemoryBuilder::induce_and_update(const ToolMemory& memory,
                                            const Experience& experience, VectorIndex& index,
                                            BuildStep* step_log) {
    if (!experience.feedback) {
        fail(ErrorKind::InvalidArgument,
             "experience " + experience.experience_id +
                 " has no feedback; call generate_feedback first");
    }
    if (experience.tool_id != memory.tool_id) {
        fail(ErrorKind::InvalidArgument, "experience targets tool \"" + experience.tool_id +
                                             "\", memory is for \"" + memory.tool_id + "\"");
    }

    CategoryHits retrieved = index.retrieve_all_categories(experience.task_prompt,
                                                           memory.tool_id, config_.k_build,
                                                           embedder_);
    std::string prompt = render_refinement_prompt(memory, experience, retrieved);

    CompletionRequest request;
    request.messages.push_back(ChatMessage{ChatRole::User, prompt});
    request.model_id = config_.model_id;
    std::string blob = backend_.complete(request);

    ParsedMemoryText parsed = parse_memory_text(blob);
    if (parsed.classified.empty() && !trim(blob).empty()) {
        fail(ErrorKind::RefinementRejected,
             "refinement output contains no categorized sentence (" +
                 std::to_string(parsed.remainder.size()) + " unclassified)");
    }

    std::set<std::string> removed_ids;
    std::vector<std::string> sources;
    int max_revision = 0;
    for (const auto& bucket : retrieved) {
        for (const auto& hit : bucket) {
            removed_ids.insert(hit.entry.entry_id);
            max_revision = std::max(max_revision, hit.entry.revision);
            for (const auto& src : hit.entry.source_experience_ids) {
                if (std::find(sources.begin(), sources.end(), src) == sources.end()) {
                    sources.push_back(src);
                }
            }
        }
    }
    sources.push_back(experience.experience_id);

    // surviving (category, text) pairs guard against duplicate inserts
    std::set<std::pair<int, std::string>> seen;
    for (auto category : kAllCategories) {
        for (const auto& entry : memory.entries(category)) {
            if (!removed_ids.count(entry.entry_id)) {
                seen.insert({static_cast<int>(category_index(category)), entry.text});
            }
        }
    }

    std::vector<MemoryEntry> added;
    for (const auto& [category, text] : parsed.classified) {
        if (!seen.insert({static_cast<int>(category_index(category)), text}).second) continue;
        MemoryEntry entry;
        entry.entry_id = config_.id_generator();
        entry.tool_id = memory.tool_id;
        entry.category = category;
        entry.text = text;
        entry.source_experience_ids = sources;
        entry.revision = max_revision + 1;
        entry.created_at = config_.clock();
        added.push_back(std::move(entry));
    }

    ToolMemory updated = replace_entries(memory, removed_ids, added);
    try {
        index.remove_entries(memory.tool_id,
                             std::vector<std::string>(removed_ids.begin(), removed_ids.end()));
        index.index_entries(memory.tool_id, added, embedder_);
    } catch (...) {
        index.rebuild(memory, embedder_); // restore the pre-step view
        throw;
    }

    if (step_log) {
        step_log->experience_id = experience.experience_id;
        step_log->retrieved_count = removed_ids.size();
        step_log->added_count = added.size();
        step_log->removed_count = removed_ids.size();
        step_log->remainder_count = parsed.remainder.size();
    }
    return updated;
}

ToolMemory MemoryBuilder::build_memory(
    const std::vector<Experience>& experiences, const std::string& tool_id,
    const std::string& overview, VectorIndex& index, std::vector<BuildStep>* log,
    const std::function<void(const ToolMemory&, const BuildStep&)>& on_step) {
    for (const auto& exp : experiences) {
        if (exp.tool_id != tool_id) {
            fail(ErrorKind::InvalidArgument,
                 "experience " + exp.experience_id + " does not belong to tool " + tool_id);
        }
    }
    ToolMemory memory = create_tool_memory(tool_id, overview);
    index.rebuild(memory, embedder_);
    int step_no = 0;
    for (const auto& exp : experiences) {
        Experience step_exp = exp;
        if (!step_exp.feedback) step_exp.feedback = generate_feedback(step_exp);
        BuildStep step;
        step.step = ++step_no;
        memory = induce_and_update(memory, step_exp, index, &step);
        if (log) log->push_back(step);
        if (on_step) on_step(memory, step);
    }
    return memory;
}

} // namespace toolmem
