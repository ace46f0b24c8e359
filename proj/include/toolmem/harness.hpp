#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolmem/builder.hpp"
#include "toolmem/dataset.hpp"
#include "toolmem/metrics.hpp"
#include "toolmem/predictor.hpp"

namespace toolmem {

// Overview string used when a memory is created for a tool of the given
// modality; matches the hard-coded stand-in of the generic prompts.
const char* default_overview(Modality modality);

struct HarnessConfig {
    PredictionMode mode;
    int k_build = 6;
    std::string model_id = "gpt-4o-mini-2024-07-18";
    std::size_t jobs = 1; // bounded fan-out over tasks
    IdGenerator id_generator = random_uuid_generator();
    Clock clock = system_clock_utc();
};

// One per-task outcome of a score run; excluded tasks carry the error text
// and no predicted score.
struct PredictionRow {
    std::string task_id;
    std::string tool_id;
    int ground_truth = 0;
    std::optional<int> predicted;
    std::string raw_response;
    bool clamped = false;
    bool retried = false;
    std::optional<std::string> error;
};

struct ScoreEvalSection {
    std::string tool_id;
    std::string mode;
    std::size_t n = 0;        // tasks included in the metrics
    std::size_t excluded = 0; // prediction errors dropped from both vectors
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> pearson;
    std::vector<PredictionRow> rows; // sorted by task_id
};

struct SelectionRow {
    std::string task_id;
    int truth_a = 0;
    int truth_b = 0;
    std::optional<int> predicted_a;
    std::optional<int> predicted_b;
    std::string choice; // "A" / "B" / "Tie" / "" on error
    std::optional<std::string> error;
};

struct SelectionEvalSection {
    std::string tool_a;
    std::string tool_b;
    std::string mode;
    SelectionMetrics metrics;
    std::size_t excluded = 0; // selection errors dropped before the metrics
    std::vector<SelectionRow> rows; // sorted by task_id
};

struct AblationRow {
    int k = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

struct DescriptionRow {
    std::string task_id;
    std::string description;
    bool truncated = false;
    std::optional<double> external_score; // filled by the external scorer hook
    std::optional<std::string> error;
};

class EvalHarness {
  public:
    EvalHarness(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
                HarnessConfig config);

    // Runs the memory builder over the tool's train-split records.
    ToolMemory build_memory(const std::vector<DatasetRecord>& dataset, const std::string& tool_id,
                            VectorIndex& index, std::vector<BuildStep>* log = nullptr);

    // Predicts every test-split record of the tool and reduces to metrics.
    // In ToolMem mode a memory must be supplied (prebuilt or loaded); other
    // modes ignore it.  The few-shot pool is built from the train split.
    ScoreEvalSection run_score_eval(const std::vector<DatasetRecord>& dataset,
                                    const std::string& tool_id, const ToolMemory* memory,
                                    VectorIndex* index);

    // Head-to-head selection over test tasks both tools share.
    SelectionEvalSection run_selection_eval(const std::vector<DatasetRecord>& dataset,
                                            const std::string& tool_a, const std::string& tool_b,
                                            const std::map<std::string, const ToolMemory*>& memories,
                                            const std::map<std::string, VectorIndex*>& indexes);

    // One score eval per k with k_infer = k (k = 0 skips retrieval); the
    // memory is built or supplied once and shared across rows.
    std::vector<AblationRow> ablate_k(const std::vector<DatasetRecord>& dataset,
                                      const std::string& tool_id,
                                      const std::vector<int>& k_values, const ToolMemory* memory,
                                      VectorIndex* index);

    // Description prediction over the tool's image-modality test records.
    std::vector<DescriptionRow> run_description_predict(const std::vector<DatasetRecord>& dataset,
                                                        const std::string& tool_id,
                                                        const ToolMemory* memory,
                                                        VectorIndex* index);

  private:
    const PromptLibrary& prompts_;
    Backend& backend_;
    Embedder& embedder_;
    HarnessConfig config_;
};

// Pipes one JSON line per row ({"task_id","image","description"}) to the
// command's standard input and reads one real per line back, in order;
// results land in each row's external_score.  A count mismatch is a parse
// error.  The scratch directory holds the temp files the pipe runs through.
void apply_external_scorer(const std::string& command,
                           const std::vector<DatasetRecord>& records,
                           std::vector<DescriptionRow>& rows, const std::string& scratch_dir);

// Report rendering (byte-stable; all reals via format_metric).
std::string render_score_report(const ScoreEvalSection& section);
std::string render_selection_report(const SelectionEvalSection& section);
std::string render_ablation_report(const std::string& tool_id,
                                   const std::vector<AblationRow>& rows);

// Machine-readable companions: one header record then one record per row.
void write_score_jsonl(const ScoreEvalSection& section, const std::string& path);
void write_selection_jsonl(const SelectionEvalSection& section, const std::string& path);
void write_ablation_jsonl(const std::string& tool_id, const std::vector<AblationRow>& rows,
                          const std::string& path);
void write_text_file(const std::string& content, const std::string& path);

} // namespace toolmem
