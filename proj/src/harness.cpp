#include "toolmem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "toolmem/errors.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

using nlohmann::json;

const char* default_overview(Modality modality) {
    return modality == Modality::Image ? "A text to image model" : "A large language model";
}

namespace {

// Fans fn(i) out over a bounded worker pool; per-task failures are the
// callback's business, anything else is rethrown after the join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (count == 0) return;
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<DatasetRecord> test_records_for(const std::vector<DatasetRecord>& dataset,
                                            const std::string& tool_id) {
    auto records = records_for_tool(records_with_split(dataset, Split::Test), tool_id);
    std::sort(records.begin(), records.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.task_id < b.task_id; });
    return records;
}

} // namespace

EvalHarness::EvalHarness(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
                         HarnessConfig config)
    : prompts_(prompts), backend_(backend), embedder_(embedder), config_(std::move(config)) {}

ToolMemory EvalHarness::build_memory(const std::vector<DatasetRecord>& dataset,
                                     const std::string& tool_id, VectorIndex& index,
                                     std::vector<BuildStep>* log) {
    auto train = records_for_tool(records_with_split(dataset, Split::Train), tool_id);
    if (train.empty()) {
        fail(ErrorKind::InvalidArgument, "no train-split records for tool " + tool_id);
    }
    std::sort(train.begin(), train.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.task_id < b.task_id; });
    std::vector<Experience> experiences;
    experiences.reserve(train.size());
    for (const auto& record : train) experiences.push_back(to_experience(record));

    BuilderConfig builder_config;
    builder_config.k_build = config_.k_build;
    builder_config.model_id = config_.model_id;
    builder_config.id_generator = config_.id_generator;
    builder_config.clock = config_.clock;
    MemoryBuilder builder(prompts_, backend_, embedder_, builder_config);
    return builder.build_memory(experiences, tool_id, default_overview(train.front().modality),
                                index, log);
}

ScoreEvalSection EvalHarness::run_score_eval(const std::vector<DatasetRecord>& dataset,
                                             const std::string& tool_id, const ToolMemory* memory,
                                             VectorIndex* index) {
    ScoreEvalSection section;
    section.tool_id = tool_id;
    section.mode = mode_name(config_.mode.tag);

    auto test = test_records_for(dataset, tool_id);
    if (test.empty()) fail(ErrorKind::InvalidArgument, "no test-split records for tool " + tool_id);

    FewShotPool pool;
    if (config_.mode.tag == ModeTag::FewShot) {
        pool = FewShotPool::from_records(
            records_for_tool(records_with_split(dataset, Split::Train), tool_id), embedder_);
    }
    VectorIndex local_index;
    if (config_.mode.tag == ModeTag::ToolMem) {
        if (!memory) fail(ErrorKind::InvalidArgument, "toolmem eval requires a built memory");
        if (!index && config_.mode.k_infer > 0) {
            local_index.rebuild(*memory, embedder_);
            index = &local_index;
        }
    }
    PredictionContext context;
    context.memory = memory;
    context.index = index;
    context.pool = &pool;

    Predictor predictor(prompts_, backend_, embedder_, config_.model_id);
    section.rows.resize(test.size());
    parallel_for(test.size(), config_.jobs, [&](std::size_t i) {
        const DatasetRecord& record = test[i];
        PredictionRow row;
        row.task_id = record.task_id;
        row.tool_id = record.tool_id;
        row.ground_truth = record.ground_truth_score;
        try {
            Prediction prediction = predictor.predict_score(
                record.task_prompt, record.rubric, record.modality, tool_id, config_.mode, context);
            row.predicted = prediction.score;
            row.raw_response = prediction.raw_response;
            row.clamped = prediction.clamped;
            row.retried = prediction.retried;
        } catch (const Error& e) {
            row.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
        }
        section.rows[i] = std::move(row);
    });

    std::sort(section.rows.begin(), section.rows.end(),
              [](const PredictionRow& a, const PredictionRow& b) { return a.task_id < b.task_id; });
    std::vector<double> truth;
    std::vector<double> predicted;
    for (const auto& row : section.rows) {
        if (!row.predicted) {
            ++section.excluded;
            continue;
        }
        truth.push_back(static_cast<double>(row.ground_truth));
        predicted.push_back(static_cast<double>(*row.predicted));
    }
    section.n = truth.size();
    if (section.n > 0) {
        section.mae = mean_absolute_error(truth, predicted);
        section.rmse = root_mean_squared_error(truth, predicted);
        section.pearson =
            section.n >= 2 ? pearson_correlation(truth, predicted) : std::nullopt;
    }
    return section;
}

SelectionEvalSection EvalHarness::run_selection_eval(
    const std::vector<DatasetRecord>& dataset, const std::string& tool_a,
    const std::string& tool_b, const std::map<std::string, const ToolMemory*>& memories,
    const std::map<std::string, VectorIndex*>& indexes) {
    SelectionEvalSection section;
    section.tool_a = tool_a;
    section.tool_b = tool_b;
    section.mode = mode_name(config_.mode.tag);

    auto test_a = test_records_for(dataset, tool_a);
    auto test_b = test_records_for(dataset, tool_b);
    std::map<std::string, const DatasetRecord*> by_task_b;
    for (const auto& record : test_b) by_task_b[record.task_id] = &record;
    std::vector<std::pair<const DatasetRecord*, const DatasetRecord*>> shared;
    for (const auto& record : test_a) {
        auto it = by_task_b.find(record.task_id);
        if (it != by_task_b.end()) shared.emplace_back(&record, it->second);
    }
    if (shared.empty()) {
        fail(ErrorKind::InvalidArgument,
             "tools " + tool_a + " and " + tool_b + " share no test tasks");
    }

    FewShotPool pool_a;
    FewShotPool pool_b;
    if (config_.mode.tag == ModeTag::FewShot) {
        auto train = records_with_split(dataset, Split::Train);
        pool_a = FewShotPool::from_records(records_for_tool(train, tool_a), embedder_);
        pool_b = FewShotPool::from_records(records_for_tool(train, tool_b), embedder_);
    }
    auto context_for = [&](const std::string& tool_id, FewShotPool& pool) {
        PredictionContext context;
        context.pool = &pool;
        if (config_.mode.tag == ModeTag::ToolMem) {
            auto memory_it = memories.find(tool_id);
            if (memory_it == memories.end() || !memory_it->second) {
                fail(ErrorKind::InvalidArgument, "toolmem selection requires a memory for " +
                                                     tool_id);
            }
            context.memory = memory_it->second;
            auto index_it = indexes.find(tool_id);
            if (index_it != indexes.end()) context.index = index_it->second;
        }
        return context;
    };
    PredictionContext context_a = context_for(tool_a, pool_a);
    PredictionContext context_b = context_for(tool_b, pool_b);
    VectorIndex local_a;
    VectorIndex local_b;
    if (config_.mode.tag == ModeTag::ToolMem && config_.mode.k_infer > 0) {
        if (!context_a.index) {
            local_a.rebuild(*context_a.memory, embedder_);
            context_a.index = &local_a;
        }
        if (!context_b.index) {
            local_b.rebuild(*context_b.memory, embedder_);
            context_b.index = &local_b;
        }
    }

    Predictor predictor(prompts_, backend_, embedder_, config_.model_id);
    section.rows.resize(shared.size());
    parallel_for(shared.size(), config_.jobs, [&](std::size_t i) {
        const DatasetRecord& record_a = *shared[i].first;
        const DatasetRecord& record_b = *shared[i].second;
        SelectionRow row;
        row.task_id = record_a.task_id;
        row.truth_a = record_a.ground_truth_score;
        row.truth_b = record_b.ground_truth_score;
        try {
            SelectionResult result = predictor.select_tool(
                record_a.task_prompt, record_a.rubric, record_a.modality, tool_a, tool_b,
                config_.mode, context_a, context_b);
            row.predicted_a = result.prediction_a.score;
            row.predicted_b = result.prediction_b.score;
            row.choice = result.choice == SelectionChoice::A
                             ? "A"
                             : result.choice == SelectionChoice::B ? "B" : "Tie";
        } catch (const Error& e) {
            row.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
        }
        section.rows[i] = std::move(row);
    });

    std::sort(section.rows.begin(), section.rows.end(),
              [](const SelectionRow& a, const SelectionRow& b) { return a.task_id < b.task_id; });
    std::vector<PairObservation> pairs;
    for (const auto& row : section.rows) {
        if (!row.predicted_a || !row.predicted_b) {
            ++section.excluded;
            continue;
        }
        pairs.push_back(PairObservation{static_cast<double>(row.truth_a),
                                        static_cast<double>(row.truth_b),
                                        static_cast<double>(*row.predicted_a),
                                        static_cast<double>(*row.predicted_b)});
    }
    section.metrics = selection_metrics(pairs);
    return section;
}

std::vector<AblationRow> EvalHarness::ablate_k(const std::vector<DatasetRecord>& dataset,
                                               const std::string& tool_id,
                                               const std::vector<int>& k_values,
                                               const ToolMemory* memory, VectorIndex* index) {
    if (k_values.empty()) fail(ErrorKind::InvalidArgument, "ablation needs at least one k");
    for (int k : k_values) {
        if (k < 0) fail(ErrorKind::InvalidArgument, "ablation k must be >= 0");
    }
    if (!memory) fail(ErrorKind::InvalidArgument, "ablation requires a built memory");
    std::vector<AblationRow> rows;
    rows.reserve(k_values.size());
    HarnessConfig saved = config_;
    config_.mode.tag = ModeTag::ToolMem;
    for (int k : k_values) {
        config_.mode.k_infer = k;
        ScoreEvalSection section = run_score_eval(dataset, tool_id, memory, index);
        rows.push_back(AblationRow{k, section.mae, section.rmse});
    }
    config_ = saved;
    return rows;
}

std::vector<DescriptionRow> EvalHarness::run_description_predict(
    const std::vector<DatasetRecord>& dataset, const std::string& tool_id,
    const ToolMemory* memory, VectorIndex* index) {
    auto test = test_records_for(dataset, tool_id);
    std::vector<const DatasetRecord*> image_records;
    for (const auto& record : test) {
        if (record.modality == Modality::Image) image_records.push_back(&record);
    }
    if (image_records.empty()) {
        fail(ErrorKind::InvalidArgument,
             "no image-modality test records for tool " + tool_id);
    }
    FewShotPool pool;
    if (config_.mode.tag == ModeTag::FewShot) {
        pool = FewShotPool::from_records(
            records_for_tool(records_with_split(dataset, Split::Train), tool_id), embedder_);
    }
    VectorIndex local_index;
    if (config_.mode.tag == ModeTag::ToolMem) {
        if (!memory) fail(ErrorKind::InvalidArgument, "toolmem mode requires a built memory");
        if (!index && config_.mode.k_infer > 0) {
            local_index.rebuild(*memory, embedder_);
            index = &local_index;
        }
    }
    PredictionContext context;
    context.memory = memory;
    context.index = index;
    context.pool = &pool;

    Predictor predictor(prompts_, backend_, embedder_, config_.model_id);
    std::vector<DescriptionRow> rows(image_records.size());
    parallel_for(image_records.size(), config_.jobs, [&](std::size_t i) {
        const DatasetRecord& record = *image_records[i];
        DescriptionRow row;
        row.task_id = record.task_id;
        try {
            Description description =
                predictor.predict_description(record.task_prompt, tool_id, config_.mode, context);
            row.description = description.text;
            row.truncated = description.truncated;
        } catch (const Error& e) {
            row.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
        }
        rows[i] = std::move(row);
    });
    std::sort(rows.begin(), rows.end(),
              [](const DescriptionRow& a, const DescriptionRow& b) { return a.task_id < b.task_id; });
    return rows;
}

void apply_external_scorer(const std::string& command,
                           const std::vector<DatasetRecord>& records,
                           std::vector<DescriptionRow>& rows, const std::string& scratch_dir) {
    std::map<std::string, const DatasetRecord*> by_task;
    for (const auto& record : records) by_task[record.task_id] = &record;

    std::string in_path = scratch_dir + "/scorer_input.jsonl";
    std::string out_path = scratch_dir + "/scorer_output.txt";
    std::vector<std::size_t> sent; // row indices, in written order
    {
        std::ofstream in(in_path, std::ios::trunc);
        if (!in) fail(ErrorKind::Io, "cannot write scorer input " + in_path);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].error) continue;
            auto it = by_task.find(rows[i].task_id);
            json line;
            line["task_id"] = rows[i].task_id;
            line["image"] = it == by_task.end() ? "" : it->second->solution;
            line["description"] = rows[i].description;
            in << line.dump() << "\n";
            sent.push_back(i);
        }
    }
    std::string shell = command + " < " + in_path + " > " + out_path;
    int status = std::system(shell.c_str());
    if (status != 0) {
        fail(ErrorKind::Transport,
             "external scorer exited with status " + std::to_string(status));
    }
    std::ifstream out(out_path);
    if (!out) fail(ErrorKind::Io, "cannot read scorer output " + out_path);
    std::size_t consumed = 0;
    std::string line;
    while (std::getline(out, line)) {
        if (trim(line).empty()) continue;
        if (consumed >= sent.size()) {
            fail(ErrorKind::Parse, "external scorer returned more lines than inputs");
        }
        try {
            rows[sent[consumed]].external_score = std::stod(trim(line));
        } catch (const std::exception&) {
            fail(ErrorKind::Parse, "external scorer line is not a real: \"" + line + "\"");
        }
        ++consumed;
    }
    if (consumed != sent.size()) {
        fail(ErrorKind::Parse, "external scorer returned " + std::to_string(consumed) +
                                   " scores for " + std::to_string(sent.size()) + " inputs");
    }
}

std::string render_score_report(const ScoreEvalSection& section) {
    std::string out;
    out += "# score evaluation\n";
    out += "tool: " + section.tool_id + "\n";
    out += "mode: " + section.mode + "\n";
    out += "n: " + std::to_string(section.n) + "\n";
    out += "excluded: " + std::to_string(section.excluded) + "\n";
    out += "mae: " + format_metric(section.mae) + "\n";
    out += "rmse: " + format_metric(section.rmse) + "\n";
    out += "pearson: " + format_metric(section.pearson) + "\n";
    return out;
}

std::string render_selection_report(const SelectionEvalSection& section) {
    const SelectionMetrics& m = section.metrics;
    std::string out;
    out += "# selection evaluation\n";
    out += "tool_a: " + section.tool_a + "\n";
    out += "tool_b: " + section.tool_b + "\n";
    out += "mode: " + section.mode + "\n";
    out += "pairs: " + std::to_string(m.total_pairs) + "\n";
    out += "decisive: " + std::to_string(m.decisive_pairs) + "\n";
    out += "excluded: " + std::to_string(section.excluded) + "\n";
    out += "f1_lt: " + format_metric(m.f1_less) + "\n";
    out += "f1_gt: " + format_metric(m.f1_greater) + "\n";
    out += "accuracy: " + format_metric(m.accuracy) + "\n";
    return out;
}

std::string render_ablation_report(const std::string& tool_id,
                                   const std::vector<AblationRow>& rows) {
    std::string out;
    out += "# k-infer ablation\n";
    out += "tool: " + tool_id + "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%5s %9s %9s\n", "k", "mae", "rmse");
    out += buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%5d %9s %9s\n", row.k, format_metric(row.mae).c_str(),
                      format_metric(row.rmse).c_str());
        out += buf;
    }
    return out;
}

namespace {

void write_jsonl(const std::vector<json>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write report file " + path);
    for (const auto& record : records) out << record.dump() << "\n";
    if (!out) fail(ErrorKind::Io, "failed writing report file " + path);
}

} // namespace

void write_score_jsonl(const ScoreEvalSection& section, const std::string& path) {
    std::vector<json> records;
    json header;
    header["record"] = "score_eval";
    header["tool_id"] = section.tool_id;
    header["mode"] = section.mode;
    header["n"] = section.n;
    header["excluded"] = section.excluded;
    header["mae"] = section.mae;
    header["rmse"] = section.rmse;
    header["pearson"] = section.pearson ? json(*section.pearson) : json(nullptr);
    records.push_back(std::move(header));
    for (const auto& row : section.rows) {
        json record;
        record["record"] = "prediction";
        record["task_id"] = row.task_id;
        record["tool_id"] = row.tool_id;
        record["ground_truth"] = row.ground_truth;
        record["predicted"] = row.predicted ? json(*row.predicted) : json(nullptr);
        record["raw_response"] = row.raw_response;
        record["clamped"] = row.clamped;
        record["retried"] = row.retried;
        if (row.error) record["error"] = *row.error;
        records.push_back(std::move(record));
    }
    write_jsonl(records, path);
}

void write_selection_jsonl(const SelectionEvalSection& section, const std::string& path) {
    const SelectionMetrics& m = section.metrics;
    std::vector<json> records;
    json header;
    header["record"] = "selection_eval";
    header["tool_a"] = section.tool_a;
    header["tool_b"] = section.tool_b;
    header["mode"] = section.mode;
    header["pairs"] = m.total_pairs;
    header["decisive"] = m.decisive_pairs;
    header["excluded"] = section.excluded;
    header["f1_lt"] = m.f1_less;
    header["f1_gt"] = m.f1_greater;
    header["accuracy"] = m.accuracy ? json(*m.accuracy) : json(nullptr);
    records.push_back(std::move(header));
    for (const auto& row : section.rows) {
        json record;
        record["record"] = "pair";
        record["task_id"] = row.task_id;
        record["truth_a"] = row.truth_a;
        record["truth_b"] = row.truth_b;
        record["predicted_a"] = row.predicted_a ? json(*row.predicted_a) : json(nullptr);
        record["predicted_b"] = row.predicted_b ? json(*row.predicted_b) : json(nullptr);
        record["choice"] = row.choice;
        if (row.error) record["error"] = *row.error;
        records.push_back(std::move(record));
    }
    write_jsonl(records, path);
}

void write_ablation_jsonl(const std::string& tool_id, const std::vector<AblationRow>& rows,
                          const std::string& path) {
    std::vector<json> records;
    json header;
    header["record"] = "ablation";
    header["tool_id"] = tool_id;
    records.push_back(std::move(header));
    for (const auto& row : rows) {
        json record;
        record["record"] = "ablation_row";
        record["k"] = row.k;
        record["mae"] = row.mae;
        record["rmse"] = row.rmse;
        records.push_back(std::move(record));
    }
    write_jsonl(records, path);
}

void write_text_file(const std::string& content, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write file " + path);
    out << content;
    if (!out) fail(ErrorKind::Io, "failed writing file " + path);
}

} // namespace toolmem
