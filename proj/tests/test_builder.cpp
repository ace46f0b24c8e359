#include "doctest.h"

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "toolmem/builder.hpp"
#include "toolmem/embedding.hpp"
#include "toolmem/errors.hpp"
#include "toolmem/gateway.hpp"
#include "toolmem/index.hpp"
#include "toolmem/memory.hpp"
#include "toolmem/prompts.hpp"

using namespace toolmem;

namespace {

const PromptLibrary& library() {
    static PromptLibrary lib = PromptLibrary::load(PromptLibrary::default_dir());
    return lib;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a toolmem error");
    return ErrorKind::Io;
}

// Pulls the bound current memory back out of a rendered refinement prompt.
std::string extract_current_memory(const std::string& prompt) {
    const std::string begin = ":\n  \"";
    const std::string end = "\"\n- Input task prompt to the tool was:";
    std::size_t b = prompt.find(begin);
    std::size_t e = prompt.find(end);
    REQUIRE(b != std::string::npos);
    REQUIRE(e != std::string::npos);
    b += begin.size();
    return prompt.substr(b, e - b);
}

// Backend that answers refinement prompts with the current memory plus fixed
// extra sentences. With no extras it is a per-step fixed point.
CallbackBackend echo_backend(std::vector<std::string> extras = {}) {
    return CallbackBackend(
        [extras = std::move(extras)](const CompletionRequest& request) {
            std::string memory = extract_current_memory(prompt_text(request));
            for (const auto& extra : extras) {
                if (!memory.empty()) memory += "\n";
                memory += extra;
            }
            return memory;
        },
        "echo");
}

Experience make_experience(const std::string& id, const std::string& tool,
                           const std::string& prompt, int score) {
    Experience exp;
    exp.experience_id = id;
    exp.tool_id = tool;
    exp.task_prompt = prompt;
    exp.solution = "images/" + tool + "/" + id + ".png";
    exp.solution_is_attachment = true;
    exp.score = score;
    exp.rubric = "1-5 Likert";
    exp.feedback = "Feedback for " + id + ".";
    return exp;
}

BuilderConfig test_config(std::size_t k_build = 6) {
    BuilderConfig config;
    config.k_build = k_build;
    config.id_generator = seeded_uuid_generator(42);
    config.clock = logical_clock();
    return config;
}

MemoryEntry seed_entry(const std::string& id, const std::string& tool,
                       ProficiencyCategory category, const std::string& text) {
    MemoryEntry entry;
    entry.entry_id = id;
    entry.tool_id = tool;
    entry.category = category;
    entry.text = text;
    entry.source_experience_ids = {"seed-" + id};
    entry.revision = 1;
    entry.created_at = "2024-01-01T00:00:00Z";
    return entry;
}

std::multiset<std::pair<int, std::string>> category_text_set(const ToolMemory& memory) {
    std::multiset<std::pair<int, std::string>> out;
    for (auto category : kAllCategories) {
        for (const auto& entry : memory.entries(category)) {
            out.insert({static_cast<int>(category_index(category)), entry.text});
        }
    }
    return out;
}

// Embedder that throws exactly once, when asked to embed `poison_text`.
class FlakyEmbedder : public Embedder {
public:
    FlakyEmbedder(std::string poison_text) : poison_(std::move(poison_text)) {}

    EmbeddingVector embed(const std::string& text) override {
        if (armed_ && text == poison_) {
            armed_ = false;
            fail(ErrorKind::Embedding, "injected embedding fault");
        }
        return inner_.embed(text);
    }
    const std::string& name() const override { return inner_.name(); }
    std::size_t dim() const override { return inner_.dim(); }

private:
    HashEmbedder inner_;
    std::string poison_;
    bool armed_ = true;
};

} // namespace

TEST_CASE("memory text parsing maps leading phrases and keeps the rest") {
    ParsedMemoryText parsed = parse_memory_text(
        "- Proficient at painting skies. Good at drawing hands!\n"
        "* poor at counting objects.\n"
        "  Weak at small text?\n"
        "BAD at night scenes.\n"
        "Overall a solid model\n"
        "Good at texture");
    REQUIRE(parsed.classified.size() == 6);
    CHECK(parsed.classified[0] ==
          std::pair{ProficiencyCategory::Proficient, std::string("Proficient at painting skies.")});
    CHECK(parsed.classified[1] ==
          std::pair{ProficiencyCategory::Good, std::string("Good at drawing hands!")});
    CHECK(parsed.classified[2] ==
          std::pair{ProficiencyCategory::Weak, std::string("poor at counting objects.")});
    CHECK(parsed.classified[3] ==
          std::pair{ProficiencyCategory::Weak, std::string("Weak at small text?")});
    CHECK(parsed.classified[4] ==
          std::pair{ProficiencyCategory::Bad, std::string("BAD at night scenes.")});
    // a terminal-less tail is normalized to end with a period
    CHECK(parsed.classified[5] ==
          std::pair{ProficiencyCategory::Good, std::string("Good at texture.")});
    REQUIRE(parsed.remainder.size() == 1);
    CHECK(parsed.remainder[0] == "Overall a solid model.");

    ParsedMemoryText empty = parse_memory_text("  \n\t\n");
    CHECK(empty.classified.empty());
    CHECK(empty.remainder.empty());
}

TEST_CASE("feedback generation guards its preconditions and attaches images") {
    CompletionRequest seen;
    CallbackBackend backend(
        [&](const CompletionRequest& request) {
            seen = request;
            return "The image matches the prompt closely.";
        },
        "capture");
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());

    Experience exp = make_experience("exp-1", "tool-a", "a photograph of a red fox", 4);
    CHECK(kind_of([&] { builder.generate_feedback(exp); }) == ErrorKind::InvalidArgument);

    exp.feedback.reset();
    std::string feedback = builder.generate_feedback(exp);
    CHECK(feedback == "The image matches the prompt closely.");
    REQUIRE(seen.messages.size() == 1);
    CHECK(seen.messages[0].image_ref == exp.solution);
    CHECK(seen.messages[0].text.find("This image scored 4") != std::string::npos);
    CHECK(seen.messages[0].text.find(exp.task_prompt) != std::string::npos);

    Experience text_exp = exp;
    text_exp.solution_is_attachment = false;
    builder.generate_feedback(text_exp);
    CHECK(seen.messages[0].image_ref.empty());

    Experience bad = exp;
    bad.score = 0;
    CHECK(kind_of([&] { builder.generate_feedback(bad); }) == ErrorKind::InvalidArgument);

    CallbackBackend blank([](const CompletionRequest&) { return "  \n"; }, "blank");
    MemoryBuilder blank_builder(library(), blank, embedder, test_config());
    CHECK(kind_of([&] { blank_builder.generate_feedback(exp); }) == ErrorKind::Model);
}

TEST_CASE("an echoing refinement is a fixed point up to version count") {
    CallbackBackend backend = echo_backend();
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());

    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    memory = replace_entries(
        memory, {},
        {
            seed_entry("e1", "tool-a", ProficiencyCategory::Proficient,
                       "Proficient at rendering red fox scenes."),
            seed_entry("e2", "tool-a", ProficiencyCategory::Good,
                       "Good at composing owl layouts."),
            seed_entry("e3", "tool-a", ProficiencyCategory::Weak,
                       "Weak at fine lighthouse details."),
        });
    VectorIndex index;
    index.rebuild(memory, embedder);

    auto before = category_text_set(memory);
    ToolMemory after = memory;
    for (int step = 0; step < 5; ++step) {
        after = builder.induce_and_update(
            after, make_experience("exp-" + std::to_string(step), "tool-a", "a red fox", 4),
            index);
    }
    CHECK(after.version == memory.version + 5);
    CHECK(category_text_set(after) == before);
    for (auto category : kAllCategories) {
        CHECK(index.bucket_size("tool-a", category) == after.entries(category).size());
    }
}

TEST_CASE("refining an empty memory with no insights stays empty") {
    CallbackBackend backend = echo_backend();
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());
    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    VectorIndex index;
    index.rebuild(memory, embedder);

    ToolMemory after =
        builder.induce_and_update(memory, make_experience("exp-1", "tool-a", "a red fox", 3),
                                  index);
    CHECK(after.version == 1);
    CHECK(after.total_entries() == 0);
}

TEST_CASE("each new insight grows the memory by exactly one entry") {
    CallbackBackend backend = echo_backend({"Good at composing owl layouts."});
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());
    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    VectorIndex index;
    index.rebuild(memory, embedder);

    // step 1 adds the sentence; step 2 echoes it back plus a duplicate insert,
    // which the (category, text) dedup guard swallows
    BuildStep step1, step2;
    memory = builder.induce_and_update(memory, make_experience("exp-1", "tool-a", "an owl", 4),
                                       index, &step1);
    CHECK(step1.added_count == 1);
    CHECK(memory.total_entries() == 1);
    memory = builder.induce_and_update(memory, make_experience("exp-2", "tool-a", "an owl", 4),
                                       index, &step2);
    CHECK(memory.total_entries() == 1);
    CHECK(memory.entries(ProficiencyCategory::Good)[0].text == "Good at composing owl layouts.");
    CHECK(memory.version == 2);
}

TEST_CASE("uncategorized non-empty refinement output is rejected") {
    CallbackBackend backend([](const CompletionRequest&) { return "The tool excels overall."; },
                            "prose");
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());

    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    memory = replace_entries(memory, {},
                             {seed_entry("e1", "tool-a", ProficiencyCategory::Good,
                                         "Good at composing owl layouts.")});
    VectorIndex index;
    index.rebuild(memory, embedder);
    ToolMemory before = memory;

    CHECK(kind_of([&] {
              builder.induce_and_update(memory, make_experience("exp-1", "tool-a", "an owl", 4),
                                        index);
          }) == ErrorKind::RefinementRejected);
    CHECK(memory == before);
    CHECK(index.bucket_size("tool-a", ProficiencyCategory::Good) == 1);
}

TEST_CASE("a failed index update rolls back to the pre-step view") {
    const std::string poison = "Good at composing owl layouts.";
    CallbackBackend backend = echo_backend({poison});
    FlakyEmbedder embedder(poison);
    MemoryBuilder builder(library(), backend, embedder, test_config());

    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    memory = replace_entries(memory, {},
                             {seed_entry("e1", "tool-a", ProficiencyCategory::Proficient,
                                         "Proficient at rendering red fox scenes.")});
    VectorIndex index;
    index.rebuild(memory, embedder);

    CHECK(kind_of([&] {
              builder.induce_and_update(memory, make_experience("exp-1", "tool-a", "a fox", 4),
                                        index);
          }) == ErrorKind::Embedding);

    // the index was rebuilt from the pre-step memory: e1 is retrievable, the
    // poisoned entry is not
    auto hits = index.retrieve_top_k("a fox", "tool-a", ProficiencyCategory::Proficient, 5,
                                     embedder);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].entry.entry_id == "e1");
    CHECK(index.bucket_size("tool-a", ProficiencyCategory::Good) == 0);

    // the fault is spent, so the same step now succeeds
    ToolMemory after = builder.induce_and_update(
        memory, make_experience("exp-1", "tool-a", "a fox", 4), index);
    CHECK(after.total_entries() == 2);
}

TEST_CASE("rewritten entries carry merged provenance and a bumped revision") {
    CallbackBackend backend = echo_backend({"Good at composing owl layouts."});
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());
    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    VectorIndex index;
    index.rebuild(memory, embedder);

    memory = builder.induce_and_update(memory, make_experience("exp-1", "tool-a", "an owl", 5),
                                       index);
    const MemoryEntry first = memory.entries(ProficiencyCategory::Good)[0];
    CHECK(first.source_experience_ids == std::vector<std::string>{"exp-1"});
    CHECK(first.revision == 1);

    // second pass retrieves and rewrites the entry: same text, new identity
    memory = builder.induce_and_update(memory, make_experience("exp-2", "tool-a", "an owl", 5),
                                       index);
    REQUIRE(memory.entries(ProficiencyCategory::Good).size() == 1);
    const MemoryEntry second = memory.entries(ProficiencyCategory::Good)[0];
    CHECK(second.text == first.text);
    CHECK(second.entry_id != first.entry_id);
    CHECK(second.revision == 2);
    CHECK(second.source_experience_ids == std::vector<std::string>{"exp-1", "exp-2"});
    CHECK_FALSE(memory.contains(first.entry_id));
}

TEST_CASE("update preconditions are checked before any work") {
    CallbackBackend backend = echo_backend();
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());
    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    VectorIndex index;
    index.rebuild(memory, embedder);

    Experience no_feedback = make_experience("exp-1", "tool-a", "an owl", 4);
    no_feedback.feedback.reset();
    CHECK(kind_of([&] { builder.induce_and_update(memory, no_feedback, index); }) ==
          ErrorKind::InvalidArgument);

    Experience wrong_tool = make_experience("exp-2", "tool-b", "an owl", 4);
    CHECK(kind_of([&] { builder.induce_and_update(memory, wrong_tool, index); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] {
              builder.build_memory({wrong_tool}, "tool-a", "A text to image model", index);
          }) == ErrorKind::InvalidArgument);
}

TEST_CASE("building fails fast and reports applied steps only") {
    int calls = 0;
    CallbackBackend backend(
        [&](const CompletionRequest& request) -> std::string {
            if (++calls >= 3) fail(ErrorKind::Model, "backend down");
            std::string memory = extract_current_memory(prompt_text(request));
            if (!memory.empty()) memory += "\n";
            return memory + "Good at step " + std::to_string(calls) + " scenes.";
        },
        "fragile");
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config());
    VectorIndex index;
    std::vector<BuildStep> log;

    std::vector<Experience> experiences = {
        make_experience("exp-1", "tool-a", "an owl", 4),
        make_experience("exp-2", "tool-a", "a fox", 4),
        make_experience("exp-3", "tool-a", "a lighthouse", 4),
    };
    CHECK(kind_of([&] {
              builder.build_memory(experiences, "tool-a", "A text to image model", index, &log);
          }) == ErrorKind::Model);
    REQUIRE(log.size() == 2);
    CHECK(log[0].step == 1);
    CHECK(log[1].step == 2);
}

TEST_CASE("long randomized builds keep every structural invariant") {
    std::mt19937 rng(2024);
    const std::vector<std::string> subjects = {"fox",   "owl",    "lighthouse", "bridge",
                                               "river", "window", "garden",     "train"};
    const char* phrases[4] = {"Proficient at", "Good at", "Bad at", "Weak at"};

    CallbackBackend backend(
        [&](const CompletionRequest& request) {
            std::string prompt = prompt_text(request);
            std::string memory = extract_current_memory(prompt);
            // derive a deterministic new sentence from the prompt digest
            std::uint64_t h = fnv1a64(prompt);
            std::string sentence = std::string(phrases[h % 4]) + " handling " +
                                   subjects[h % subjects.size()] + " case " +
                                   std::to_string(h % 17) + ".";
            if (!memory.empty()) memory += "\n";
            return memory + sentence;
        },
        "synth");
    HashEmbedder embedder;
    MemoryBuilder builder(library(), backend, embedder, test_config(3));

    std::vector<Experience> experiences;
    for (int i = 0; i < 200; ++i) {
        std::string subject = subjects[rng() % subjects.size()];
        experiences.push_back(make_experience("exp-" + std::to_string(i), "tool-a",
                                              "a painting of a " + subject + " number " +
                                                  std::to_string(rng() % 50),
                                              1 + static_cast<int>(rng() % 5)));
    }

    int checked_steps = 0;
    std::vector<BuildStep> log;
    VectorIndex index;
    ToolMemory memory = builder.build_memory(
        experiences, "tool-a", "A text to image model", index, &log,
        [&](const ToolMemory& snapshot, const BuildStep& step) {
            ++checked_steps;
            CHECK(snapshot.version == step.step);
            for (auto category : kAllCategories) {
                std::set<std::string> texts;
                for (const auto& entry : snapshot.entries(category)) {
                    CHECK(entry.tool_id == "tool-a");
                    CHECK(entry.revision >= 1);
                    CHECK_FALSE(entry.entry_id.empty());
                    CHECK_FALSE(entry.source_experience_ids.empty());
                    // the stored category always matches the sentence's phrase
                    auto parsed = parse_memory_text(entry.text);
                    REQUIRE(parsed.classified.size() == 1);
                    CHECK(parsed.classified[0].first == category);
                    CHECK(texts.insert(entry.text).second);
                }
            }
        });
    CHECK(checked_steps == 200);
    CHECK(memory.version == 200);
    CHECK(log.size() == 200);

    // entry ids are globally unique across the whole build
    std::set<std::string> ids;
    for (auto category : kAllCategories) {
        for (const auto& entry : memory.entries(category)) {
            CHECK(ids.insert(entry.entry_id).second);
        }
    }
    CHECK(memory.total_entries() == ids.size());
}
