#include "doctest.h"

#include <functional>
#include <string>
#include <vector>

#include "toolmem/embedding.hpp"
#include "toolmem/errors.hpp"
#include "toolmem/gateway.hpp"
#include "toolmem/index.hpp"
#include "toolmem/memory.hpp"
#include "toolmem/predictor.hpp"
#include "toolmem/prompts.hpp"
#include "toolmem/util.hpp"

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

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

MemoryEntry entry_of(const std::string& id, ProficiencyCategory category,
                     const std::string& text) {
    MemoryEntry entry;
    entry.entry_id = id;
    entry.tool_id = "tool-a";
    entry.category = category;
    entry.text = text;
    entry.revision = 1;
    entry.created_at = "2024-01-01T00:00:00Z";
    return entry;
}

// memory with one distinctive marker sentence per category plus a second
// proficient entry, so bullet counts and isolation checks have teeth
ToolMemory sample_memory() {
    ToolMemory memory = create_tool_memory("tool-a", "A text to image model");
    return replace_entries(
        memory, {},
        {
            entry_of("e1", ProficiencyCategory::Proficient,
                     "Proficient at rendering MARKER-PROFICIENT scenes."),
            entry_of("e2", ProficiencyCategory::Proficient,
                     "Proficient at drawing MARKER-SECOND shapes."),
            entry_of("e3", ProficiencyCategory::Good, "Good at MARKER-GOOD layouts."),
            entry_of("e4", ProficiencyCategory::Bad, "Bad at MARKER-BAD lighting."),
            entry_of("e5", ProficiencyCategory::Weak, "Weak at MARKER-WEAK counts."),
        });
}

FewShotPool sample_pool(Embedder& embedder, int n = 6) {
    FewShotPool pool;
    for (int i = 0; i < n; ++i) {
        FewShotExample example;
        example.task_id = "task-0" + std::to_string(i);
        example.task_prompt = "an oil painting of sample subject " + std::to_string(i);
        example.rubric = "1-5 Likert";
        example.score = 1 + (i % 5);
        pool.add(example, embedder);
    }
    return pool;
}

} // namespace

TEST_CASE("mode names round-trip and reject unknowns") {
    CHECK(mode_name(ModeTag::Generic) == std::string("generic"));
    CHECK(mode_name(ModeTag::FewShot) == std::string("fewshot"));
    CHECK(mode_name(ModeTag::ToolMem) == std::string("toolmem"));
    for (auto tag : {ModeTag::Generic, ModeTag::FewShot, ModeTag::ToolMem}) {
        CHECK(mode_from_name(mode_name(tag)) == tag);
    }
    CHECK(kind_of([] { mode_from_name("oracle"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("score parsing takes the first standalone integer and clamps to 1-5") {
    CHECK(parse_score("4").score == 4);
    CHECK_FALSE(parse_score("4").clamped);
    CHECK(parse_score("Score: 3 because composition is strong").score == 3);
    CHECK(parse_score("  (2)").score == 2);
    CHECK(parse_score("I'd call it a 10 out of 10").score == 5);
    CHECK(parse_score("I'd call it a 10 out of 10").clamped);
    CHECK(parse_score("0").score == 1);
    CHECK(parse_score("0").clamped);
    // 999999999999999999999 overflows long long; treated as out-of-range high
    ParsedScore huge = parse_score("999999999999999999999");
    CHECK(huge.score == 5);
    CHECK(huge.clamped);
    // decimals and glued digit runs are not standalone scores
    CHECK(parse_score("4.5 overall, call it 5").score == 5);
    CHECK(parse_score("rated4 but really 3").score == 3);
    for (const char* raw : {"", "seven", "4.5", "3.14159", "score4", "v2ray"}) {
        CHECK_MESSAGE(kind_of([raw] { parse_score(raw); }) == ErrorKind::UnparseableScore,
                      "should be unparseable: " << raw);
    }
}

TEST_CASE("context memory rendering labels non-empty categories in order") {
    ToolMemory memory = sample_memory();
    CHECK(Predictor::render_context_memory(memory, nullptr) == "A text to image model");

    CategoryHits hits{};
    hits[category_index(ProficiencyCategory::Proficient)] = {
        {entry_of("e1", ProficiencyCategory::Proficient, "Proficient at close things."), 0.1},
        {entry_of("e2", ProficiencyCategory::Proficient, "Proficient at far things."), 0.9},
    };
    hits[category_index(ProficiencyCategory::Weak)] = {
        {entry_of("e5", ProficiencyCategory::Weak, "Weak at counts."), 0.4},
    };
    CHECK(Predictor::render_context_memory(memory, &hits) ==
          "A text to image model\n"
          "Proficient:\n"
          "- Proficient at close things.\n"
          "- Proficient at far things.\n"
          "Weak:\n"
          "- Weak at counts.");

    CategoryHits empty{};
    CHECK(Predictor::render_context_memory(memory, &empty) == "A text to image model");
}

TEST_CASE("few-shot example blocks follow the per-modality layout") {
    std::vector<FewShotExample> examples = {
        {"task-01", "a red fox", "1-5 Likert", 4},
        {"task-02", "an owl", "1-5 Likert", 2},
    };
    CHECK(Predictor::render_examples(examples, Modality::Image) ==
          "Prompt: \"a red fox\"\nScore: 4\n\nPrompt: \"an owl\"\nScore: 2");
    CHECK(Predictor::render_examples(examples, Modality::Text) ==
          "Task Prompt: \"a red fox\"\nRubric: 1-5 Likert\nModel's Score: 4\n\n"
          "Task Prompt: \"an owl\"\nRubric: 1-5 Likert\nModel's Score: 2");
    CHECK(Predictor::render_examples({}, Modality::Image).empty());
}

TEST_CASE("few-shot pools rank by distance with task-id tie-breaks") {
    HashEmbedder embedder;
    FewShotPool pool = sample_pool(embedder);
    auto nearest = pool.nearest("an oil painting of sample subject 3", 2, embedder);
    REQUIRE(nearest.size() == 2);
    CHECK(nearest[0].task_id == "task-03"); // exact text match is distance zero

    // asking for more than the pool holds returns the whole pool
    CHECK(pool.nearest("anything", 50, embedder).size() == pool.size());

    FewShotPool tied;
    for (const char* id : {"task-b", "task-a", "task-c"}) {
        tied.add(FewShotExample{id, "the same prompt", "r", 3}, embedder);
    }
    auto order = tied.nearest("the same prompt", 3, embedder);
    REQUIRE(order.size() == 3);
    CHECK(order[0].task_id == "task-a");
    CHECK(order[1].task_id == "task-b");
    CHECK(order[2].task_id == "task-c");
}

TEST_CASE("each mode sees only its own context") {
    CallbackBackend backend([](const CompletionRequest&) { return "4"; }, "flat");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);

    ToolMemory memory = sample_memory();
    VectorIndex index;
    index.rebuild(memory, embedder);
    FewShotPool pool = sample_pool(embedder);
    PredictionContext context{&memory, &index, &pool};

    const std::string task = "a watercolor painting of a red fox";
    PredictionMode generic{ModeTag::Generic, 12, 12};
    PredictionMode fewshot{ModeTag::FewShot, 12, 4};
    PredictionMode toolmem{ModeTag::ToolMem, 12, 12};

    std::string generic_prompt =
        predictor.render_score_prompt(task, "", Modality::Image, "tool-a", generic, context);
    CHECK(generic_prompt.find("MARKER-") == std::string::npos);
    CHECK(generic_prompt.find("Prompt: \"an oil painting") == std::string::npos);
    CHECK(generic_prompt.find("\"A text to image model\"") != std::string::npos);
    CHECK(generic_prompt.find(task) != std::string::npos);
    CHECK(generic_prompt.find("tool-a") != std::string::npos);

    std::string fewshot_prompt =
        predictor.render_score_prompt(task, "", Modality::Image, "tool-a", fewshot, context);
    CHECK(fewshot_prompt.find("MARKER-") == std::string::npos);
    CHECK(count_occurrences(fewshot_prompt, "\nScore: ") == 4); // shot_count examples
    CHECK(fewshot_prompt.find("an oil painting of sample subject") != std::string::npos);

    std::string toolmem_prompt =
        predictor.render_score_prompt(task, "", Modality::Image, "tool-a", toolmem, context);
    CHECK(toolmem_prompt.find("an oil painting of sample subject") == std::string::npos);
    CHECK(toolmem_prompt.find("MARKER-PROFICIENT") != std::string::npos);
    CHECK(toolmem_prompt.find("MARKER-GOOD") != std::string::npos);
    CHECK(toolmem_prompt.find("MARKER-BAD") != std::string::npos);
    CHECK(toolmem_prompt.find("MARKER-WEAK") != std::string::npos);
    CHECK(count_occurrences(toolmem_prompt, "\n- ") == memory.total_entries());
    CHECK(count_occurrences(toolmem_prompt, "\n- ") <= 4u * 12u);

    // k_infer = 1 keeps at most one entry per category
    PredictionMode narrow{ModeTag::ToolMem, 1, 12};
    std::string narrow_prompt =
        predictor.render_score_prompt(task, "", Modality::Image, "tool-a", narrow, context);
    CHECK(count_occurrences(narrow_prompt, "\n- ") == 4);

    // k_infer = 0 binds the overview alone and never touches the index
    PredictionMode overview_only{ModeTag::ToolMem, 0, 12};
    PredictionContext no_index{&memory, nullptr, nullptr};
    std::string bare_prompt = predictor.render_score_prompt(task, "", Modality::Image, "tool-a",
                                                            overview_only, no_index);
    CHECK(bare_prompt.find("A text to image model") != std::string::npos);
    CHECK(bare_prompt.find("\n- ") == std::string::npos);
    CHECK(bare_prompt.find("MARKER-") == std::string::npos);
}

TEST_CASE("text-modality prompts carry the rubric") {
    CallbackBackend backend([](const CompletionRequest&) { return "4"; }, "flat");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    FewShotPool pool = sample_pool(embedder);
    ToolMemory memory = sample_memory();
    PredictionContext context{&memory, nullptr, &pool};

    for (auto tag : {ModeTag::Generic, ModeTag::FewShot, ModeTag::ToolMem}) {
        PredictionMode mode{tag, 0, 3};
        std::string prompt = predictor.render_score_prompt(
            "summarize the article", "MARKER-RUBRIC text", Modality::Text, "tool-t", mode,
            context);
        CHECK_MESSAGE(prompt.find("MARKER-RUBRIC text") != std::string::npos,
                      "missing rubric in mode " << mode_name(tag));
    }
    // image prompts have no rubric slot
    std::string image_prompt = predictor.render_score_prompt(
        "a red fox", "MARKER-RUBRIC text", Modality::Image, "tool-a",
        PredictionMode{ModeTag::Generic, 0, 0}, context);
    CHECK(image_prompt.find("MARKER-RUBRIC") == std::string::npos);
}

TEST_CASE("modes fail when their context is missing") {
    CallbackBackend backend([](const CompletionRequest&) { return "4"; }, "flat");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    PredictionContext empty{};
    CHECK(kind_of([&] {
              predictor.render_score_prompt("t", "", Modality::Image, "tool-a",
                                            PredictionMode{ModeTag::FewShot, 12, 12}, empty);
          }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] {
              predictor.render_score_prompt("t", "", Modality::Image, "tool-a",
                                            PredictionMode{ModeTag::ToolMem, 12, 12}, empty);
          }) == ErrorKind::InvalidArgument);
}

TEST_CASE("an unparseable completion earns one identical retry") {
    std::vector<std::string> prompts;
    CallbackBackend backend(
        [&](const CompletionRequest& request) {
            prompts.push_back(prompt_text(request));
            return prompts.size() == 1 ? "hard to say" : "4";
        },
        "flaky");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);

    Prediction prediction = predictor.predict_score("a red fox", "", Modality::Image, "tool-a",
                                                    PredictionMode{ModeTag::Generic, 0, 0}, {});
    CHECK(prediction.score == 4);
    CHECK(prediction.retried);
    CHECK(prediction.raw_response == "4");
    REQUIRE(prompts.size() == 2);
    CHECK(prompts[0] == prompts[1]);
    CHECK(prompts[0] == prediction.rendered_prompt);
}

TEST_CASE("two unparseable completions become a prediction error") {
    int calls = 0;
    CallbackBackend backend(
        [&](const CompletionRequest&) {
            ++calls;
            return "no score here";
        },
        "stubborn");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    CHECK(kind_of([&] {
              predictor.predict_score("a red fox", "", Modality::Image, "tool-a",
                                      PredictionMode{ModeTag::Generic, 0, 0}, {});
          }) == ErrorKind::Prediction);
    CHECK(calls == 2);
}

TEST_CASE("transport-level failures are not retried by the predictor") {
    int calls = 0;
    CallbackBackend backend(
        [&](const CompletionRequest&) -> std::string {
            ++calls;
            fail(ErrorKind::Model, "backend refused");
        },
        "down");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    CHECK(kind_of([&] {
              predictor.predict_score("a red fox", "", Modality::Image, "tool-a",
                                      PredictionMode{ModeTag::Generic, 0, 0}, {});
          }) == ErrorKind::Model);
    CHECK(calls == 1);
}

TEST_CASE("clamped completions are flagged on the prediction") {
    CallbackBackend backend([](const CompletionRequest&) { return "I rate it 9"; }, "high");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    Prediction prediction = predictor.predict_score("a red fox", "", Modality::Image, "tool-a",
                                                    PredictionMode{ModeTag::Generic, 0, 0}, {});
    CHECK(prediction.score == 5);
    CHECK(prediction.clamped);
    CHECK_FALSE(prediction.retried);
}

TEST_CASE("descriptions are trimmed and capped at fifty words") {
    std::string sixty;
    for (int i = 0; i < 60; ++i) {
        if (!sixty.empty()) sixty += " ";
        sixty += "w" + std::to_string(i);
    }
    std::string response = "  a tidy answer here  ";
    CallbackBackend backend(
        [&](const CompletionRequest&) { return response; },
        "describe");
    HashEmbedder embedder;
    Predictor predictor(library(), backend, embedder);
    PredictionMode mode{ModeTag::Generic, 0, 0};

    Description short_one = predictor.predict_description("a red fox", "tool-a", mode, {});
    CHECK(short_one.text == "a tidy answer here");
    CHECK_FALSE(short_one.truncated);
    CHECK(short_one.rendered_prompt.find("no more than 50 English words") != std::string::npos);

    response = sixty;
    Description long_one = predictor.predict_description("a red fox", "tool-a", mode, {});
    CHECK(long_one.truncated);
    CHECK(split_whitespace(long_one.text).size() == 50);
    CHECK(long_one.text.rfind("w49") == long_one.text.size() - 3);

    response = "   ";
    CHECK(kind_of([&] { predictor.predict_description("a red fox", "tool-a", mode, {}); }) ==
          ErrorKind::Prediction);
}

TEST_CASE("tool selection compares both predictions and keeps ties") {
    HashEmbedder embedder;
    CallbackBackend backend(
        [](const CompletionRequest& request) {
            return prompt_text(request).find("tool-a") != std::string::npos ? "5" : "3";
        },
        "partial");
    Predictor predictor(library(), backend, embedder);
    PredictionMode mode{ModeTag::Generic, 0, 0};

    SelectionResult forward = predictor.select_tool("a red fox", "", Modality::Image, "tool-a",
                                                    "tool-b", mode, {}, {});
    CHECK(forward.choice == SelectionChoice::A);
    CHECK(forward.prediction_a.score == 5);
    CHECK(forward.prediction_b.score == 3);

    // swapping the argument order flips the label but not the preference
    SelectionResult backward = predictor.select_tool("a red fox", "", Modality::Image, "tool-b",
                                                     "tool-a", mode, {}, {});
    CHECK(backward.choice == SelectionChoice::B);
    CHECK(backward.prediction_a.score == 3);
    CHECK(backward.prediction_b.score == 5);

    CallbackBackend flat([](const CompletionRequest&) { return "4"; }, "flat");
    Predictor tie_predictor(library(), flat, embedder);
    SelectionResult tie = tie_predictor.select_tool("a red fox", "", Modality::Image, "tool-a",
                                                    "tool-b", mode, {}, {});
    CHECK(tie.choice == SelectionChoice::Tie);
}
