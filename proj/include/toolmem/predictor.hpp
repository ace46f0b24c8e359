#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "toolmem/dataset.hpp"
#include "toolmem/embedding.hpp"
#include "toolmem/gateway.hpp"
#include "toolmem/index.hpp"
#include "toolmem/memory.hpp"
#include "toolmem/prompts.hpp"

namespace toolmem {

enum class ModeTag { Generic, FewShot, ToolMem };

const char* mode_name(ModeTag tag); // "generic" / "fewshot" / "toolmem"
ModeTag mode_from_name(const std::string& name);

struct PredictionMode {
    ModeTag tag = ModeTag::Generic;
    int k_infer = 12;    // ToolMem: entries retrieved per category (0 = overview only)
    int shot_count = 12; // FewShot: nearest training examples bound into the prompt
};

struct ParsedScore {
    int score = 0;
    bool clamped = false; // raw value fell outside 1-5 and was pulled to the bound
};

// Returns the first standalone integer token in raw, clamped to 1-5.  Digit
// runs glued to letters or forming a decimal ("4.5") are not standalone.
// Throws an unparseable-score error when no such token exists.
ParsedScore parse_score(const std::string& raw);

struct Prediction {
    int score = 0;
    std::string raw_response;
    std::string rendered_prompt; // audit trail; also what --dry-run saves
    bool clamped = false;
    bool retried = false; // first completion was unparseable, retry succeeded
};

struct Description {
    std::string text;
    std::string rendered_prompt;
    bool truncated = false; // completion exceeded the 50-word budget
};

enum class SelectionChoice { A, B, Tie };

struct SelectionResult {
    SelectionChoice choice = SelectionChoice::Tie;
    Prediction prediction_a;
    Prediction prediction_b;
};

// Per-tool pool of training triplets for the few-shot baseline, searched by
// task-prompt embedding.
struct FewShotExample {
    std::string task_id;
    std::string task_prompt;
    std::string rubric;
    int score = 0;
};

class FewShotPool {
  public:
    void add(FewShotExample example, Embedder& embedder, EmbeddingCache* cache = nullptr);
    static FewShotPool from_records(const std::vector<DatasetRecord>& records,
                                    Embedder& embedder, EmbeddingCache* cache = nullptr);
    // Nearest examples by cosine distance, ties broken by ascending task_id;
    // returns all of them when count exceeds the pool size.
    std::vector<FewShotExample> nearest(const std::string& query, std::size_t count,
                                        Embedder& embedder) const;
    std::size_t size() const { return items_.size(); }

  private:
    struct Item {
        FewShotExample example;
        EmbeddingVector vec;
    };
    std::vector<Item> items_;
};

// Context a prediction may draw on; which parts are consulted depends on the
// mode (Generic touches none of them, by construction).
struct PredictionContext {
    const ToolMemory* memory = nullptr; // ToolMem
    VectorIndex* index = nullptr;       // ToolMem, k_infer > 0
    const FewShotPool* pool = nullptr;  // FewShot
};

class Predictor {
  public:
    Predictor(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
              std::string model_id = "gpt-4o-mini-2024-07-18");

    // Renders the mode's score prompt, completes it at temperature 0, and
    // parses the score; one identical retry on an unparseable completion,
    // then a prediction error.
    Prediction predict_score(const std::string& task_prompt, const std::string& rubric,
                             Modality modality, const std::string& tool_id,
                             const PredictionMode& mode, const PredictionContext& context);

    // Image-modality description prediction; over-length completions are
    // truncated to their first 50 whitespace tokens and flagged.
    Description predict_description(const std::string& task_prompt, const std::string& tool_id,
                                    const PredictionMode& mode, const PredictionContext& context);

    // Predicts both tools on the same task and compares; ties are surfaced,
    // never broken arbitrarily.
    SelectionResult select_tool(const std::string& task_prompt, const std::string& rubric,
                                Modality modality, const std::string& tool_a,
                                const std::string& tool_b, const PredictionMode& mode,
                                const PredictionContext& context_a,
                                const PredictionContext& context_b);

    // Renders the prompt a predict_score call would send, without completing
    // it (supports --dry-run and prompt audits).
    std::string render_score_prompt(const std::string& task_prompt, const std::string& rubric,
                                    Modality modality, const std::string& tool_id,
                                    const PredictionMode& mode, const PredictionContext& context);
    std::string render_description_prompt(const std::string& task_prompt,
                                          const std::string& tool_id, const PredictionMode& mode,
                                          const PredictionContext& context);

    // Overview plus the non-empty category blocks, each entry on a "- " line
    // ordered by ascending distance; overview alone when nothing is retrieved.
    static std::string render_context_memory(const ToolMemory& memory, const CategoryHits* hits);

    // Few-shot example blocks: image style "Prompt/Score", text style
    // "Task Prompt/Rubric/Model's Score", blank-line separated.
    static std::string render_examples(const std::vector<FewShotExample>& examples,
                                       Modality modality);

  private:
    std::string complete(const std::string& prompt);
    CategoryHits retrieve_for(const std::string& task_prompt, const std::string& tool_id,
                              int k_infer, const PredictionContext& context);

    const PromptLibrary& prompts_;
    Backend& backend_;
    Embedder& embedder_;
    std::string model_id_;
};

} // namespace toolmem
