#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toolmem/builder.hpp"
#include "toolmem/config.hpp"
#include "toolmem/dataset.hpp"
#include "toolmem/embedding.hpp"
#include "toolmem/errors.hpp"
#include "toolmem/gateway.hpp"
#include "toolmem/harness.hpp"
#include "toolmem/memory_io.hpp"
#include "toolmem/metrics.hpp"
#include "toolmem/predictor.hpp"
#include "toolmem/prompts.hpp"

namespace fs = std::filesystem;
using namespace toolmem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return kExitUsage;
    case ErrorKind::Parse:
    case ErrorKind::Schema:
    case ErrorKind::NotFound:
    case ErrorKind::Io: return kExitData;
    default: return kExitRuntime;
    }
}

struct Runtime {
    PromptLibrary prompts;
    std::unique_ptr<Embedder> embedder;
    std::shared_ptr<Backend> backend;
};

Runtime make_runtime(const RunConfig& config, bool needs_backend) {
    Runtime runtime;
    runtime.prompts = PromptLibrary::load(PromptLibrary::default_dir());
    if (config.embedder == "hash") {
        runtime.embedder = std::make_unique<HashEmbedder>();
    } else {
        runtime.embedder =
            std::make_unique<RemoteEmbedder>(config.base_url, "text-embedding-3-small");
    }
    if (!needs_backend) return runtime;
    if (config.backend == "mock") {
        if (config.fixtures_path.empty()) {
            runtime.backend = std::make_shared<MockBackend>(
                std::unordered_map<std::string, std::string>{});
        } else {
            runtime.backend = MockBackend::from_file(config.fixtures_path);
        }
    } else {
        RemoteConfig remote;
        remote.base_url = config.base_url;
        remote.model_id = config.model_id;
        runtime.backend = std::make_shared<RemoteBackend>(remote);
    }
    return runtime;
}

HarnessConfig harness_config(const RunConfig& config) {
    HarnessConfig h;
    h.mode.tag = mode_from_name(config.mode);
    h.mode.k_infer = config.k_infer;
    h.mode.shot_count = config.shot_count;
    h.k_build = config.k_build;
    h.model_id = config.model_id;
    h.jobs = static_cast<std::size_t>(config.jobs);
    if (config.backend == "mock") { // hermetic runs need reproducible ids/timestamps
        h.id_generator = seeded_uuid_generator(config.seed);
        h.clock = logical_clock();
    }
    return h;
}

std::vector<DatasetRecord> load_required_dataset(const RunConfig& config) {
    if (config.dataset_path.empty()) {
        fail(ErrorKind::InvalidArgument, "--dataset is required for this command");
    }
    return load_dataset(config.dataset_path);
}

std::vector<std::string> tools_in(const std::vector<DatasetRecord>& records) {
    std::set<std::string> unique;
    for (const auto& record : records) unique.insert(record.tool_id);
    return {unique.begin(), unique.end()};
}

fs::path memory_path(const RunConfig& config, const std::string& tool_id) {
    return fs::path(config.memory_dir) / (tool_id + ".memory.jsonl");
}

void guard_overwrite(const fs::path& path, bool force) {
    if (!force && fs::exists(path)) {
        fail(ErrorKind::InvalidArgument,
             path.string() + " exists; pass --force to overwrite");
    }
}

std::string sanitize_for_filename(std::string name) {
    for (char& c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
            c = '_';
        }
    }
    return name;
}

void save_prompt_audit(const RunConfig& config, const std::string& group,
                       const std::string& name, const std::string& prompt) {
    fs::path dir = fs::path(config.report_dir) / "prompts" / group;
    fs::create_directories(dir);
    write_text_file(prompt + "\n", (dir / (sanitize_for_filename(name) + ".txt")).string());
}

// Loads the tool's memory when a file exists, otherwise builds it from the
// train split (persisting for reuse).
ToolMemory load_or_build_memory(const RunConfig& config, Runtime& runtime,
                                const std::vector<DatasetRecord>& dataset,
                                const std::string& tool_id, VectorIndex& index) {
    fs::path path = memory_path(config, tool_id);
    if (fs::exists(path)) {
        ToolMemory memory = load_memory(path);
        index.rebuild(memory, *runtime.embedder);
        return memory;
    }
    EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder,
                        harness_config(config));
    ToolMemory memory = harness.build_memory(dataset, tool_id, index);
    fs::create_directories(config.memory_dir);
    save_memory(memory, path);
    return memory;
}

void write_build_log(const std::vector<BuildStep>& log, const fs::path& path) {
    std::string content;
    for (const auto& step : log) {
        nlohmann::json record;
        record["step"] = step.step;
        record["experience_id"] = step.experience_id;
        record["retrieved_count"] = step.retrieved_count;
        record["added_count"] = step.added_count;
        record["removed_count"] = step.removed_count;
        record["remainder_count"] = step.remainder_count;
        content += record.dump() + "\n";
    }
    write_text_file(content, path.string());
}

int cmd_build(const RunConfig& config, const std::string& tool_filter) {
    auto dataset = load_required_dataset(config);
    auto train = records_with_split(dataset, Split::Train);
    std::vector<std::string> tools = tool_filter.empty()
                                         ? tools_in(train)
                                         : std::vector<std::string>{tool_filter};
    if (tools.empty()) fail(ErrorKind::InvalidArgument, "dataset has no train-split records");

    Runtime runtime = make_runtime(config, !config.dry_run);
    if (config.dry_run) {
        MockBackend unused{std::unordered_map<std::string, std::string>{}};
        MemoryBuilder builder(runtime.prompts, unused, *runtime.embedder, BuilderConfig{});
        for (const auto& tool_id : tools) {
            auto records = records_for_tool(train, tool_id);
            std::sort(records.begin(), records.end(),
                      [](const DatasetRecord& a, const DatasetRecord& b) {
                          return a.task_id < b.task_id;
                      });
            bool first = true;
            for (const auto& record : records) {
                Experience exp = to_experience(record);
                if (!exp.feedback) {
                    save_prompt_audit(config, "build/" + tool_id, record.task_id + ".feedback",
                                      builder.render_feedback_prompt(exp));
                } else if (first) {
                    ToolMemory empty = create_tool_memory(
                        tool_id, default_overview(record.modality));
                    save_prompt_audit(config, "build/" + tool_id, record.task_id + ".refinement",
                                      builder.render_refinement_prompt(empty, exp, CategoryHits{}));
                }
                first = false;
            }
            std::cout << "dry-run: saved build prompts for " << tool_id << "\n";
        }
        return kExitOk;
    }

    fs::create_directories(config.memory_dir);
    for (const auto& tool_id : tools) {
        // fresh harness per tool: a tool's memory bytes do not depend on which
        // other tools were built in the same invocation
        EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder,
                            harness_config(config));
        fs::path path = memory_path(config, tool_id);
        guard_overwrite(path, config.force);
        VectorIndex index;
        std::vector<BuildStep> log;
        ToolMemory memory = harness.build_memory(dataset, tool_id, index, &log);
        save_memory(memory, path);
        write_build_log(log, fs::path(config.memory_dir) / (tool_id + ".buildlog.jsonl"));
        std::cout << "built " << tool_id << ": version " << memory.version << ", "
                  << memory.total_entries() << " entries -> " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_predict(const RunConfig& config, const std::string& tool_id, bool describe,
                const std::string& scorer) {
    if (tool_id.empty()) fail(ErrorKind::InvalidArgument, "--tool is required");
    auto dataset = load_required_dataset(config);
    Runtime runtime = make_runtime(config, !config.dry_run);
    HarnessConfig hconfig = harness_config(config);

    ToolMemory memory;
    VectorIndex index;
    bool toolmem_mode = hconfig.mode.tag == ModeTag::ToolMem;
    if (toolmem_mode) {
        fs::path path = memory_path(config, tool_id);
        if (!fs::exists(path)) {
            fail(ErrorKind::NotFound,
                 "memory file " + path.string() + " not found; run `toolmem build` first");
        }
        memory = load_memory(path);
        index.rebuild(memory, *runtime.embedder);
    }

    if (config.dry_run) {
        auto test = records_for_tool(records_with_split(dataset, Split::Test), tool_id);
        std::sort(test.begin(), test.end(),
                  [](const DatasetRecord& a, const DatasetRecord& b) {
                      return a.task_id < b.task_id;
                  });
        if (test.empty()) {
            fail(ErrorKind::InvalidArgument, "no test-split records for tool " + tool_id);
        }
        FewShotPool pool = FewShotPool::from_records(
            records_for_tool(records_with_split(dataset, Split::Train), tool_id),
            *runtime.embedder);
        PredictionContext context;
        context.memory = toolmem_mode ? &memory : nullptr;
        context.index = toolmem_mode ? &index : nullptr;
        context.pool = &pool;
        MockBackend unused{std::unordered_map<std::string, std::string>{}};
        Predictor predictor(runtime.prompts, unused, *runtime.embedder, config.model_id);
        std::string group = std::string(describe ? "describe/" : "predict/") + tool_id + "." +
                            config.mode;
        for (const auto& record : test) {
            std::string prompt =
                describe ? predictor.render_description_prompt(record.task_prompt, tool_id,
                                                               hconfig.mode, context)
                         : predictor.render_score_prompt(record.task_prompt, record.rubric,
                                                         record.modality, tool_id, hconfig.mode,
                                                         context);
            save_prompt_audit(config, group, record.task_id, prompt);
        }
        std::cout << "dry-run: saved " << test.size() << " prompts under "
                  << (fs::path(config.report_dir) / "prompts" / group).string() << "\n";
        return kExitOk;
    }

    EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder, hconfig);
    fs::create_directories(config.report_dir);
    if (describe) {
        auto rows = harness.run_description_predict(dataset, tool_id,
                                                    toolmem_mode ? &memory : nullptr,
                                                    toolmem_mode ? &index : nullptr);
        if (!scorer.empty()) {
            apply_external_scorer(scorer,
                                  records_for_tool(records_with_split(dataset, Split::Test),
                                                   tool_id),
                                  rows, config.report_dir);
        }
        fs::path path = fs::path(config.report_dir) /
                        (tool_id + "." + config.mode + ".descriptions.jsonl");
        guard_overwrite(path, config.force);
        std::string content;
        std::size_t errors = 0;
        for (const auto& row : rows) {
            nlohmann::json record;
            record["record"] = "description";
            record["task_id"] = row.task_id;
            record["description"] = row.description;
            record["truncated"] = row.truncated;
            if (row.external_score) record["external_score"] = *row.external_score;
            if (row.error) {
                record["error"] = *row.error;
                ++errors;
            }
            content += record.dump() + "\n";
        }
        write_text_file(content, path.string());
        std::cout << "described " << rows.size() << " tasks (" << errors << " errors) -> "
                  << path.string() << "\n";
        return kExitOk;
    }

    ScoreEvalSection section =
        harness.run_score_eval(dataset, tool_id, toolmem_mode ? &memory : nullptr,
                               toolmem_mode ? &index : nullptr);
    fs::path path =
        fs::path(config.report_dir) / (tool_id + "." + config.mode + ".predictions.jsonl");
    guard_overwrite(path, config.force);
    write_score_jsonl(section, path.string());
    std::cout << "predicted " << (section.n + section.excluded) << " tasks (" << section.excluded
              << " errors) -> " << path.string() << "\n";
    return kExitOk;
}

int cmd_select(const RunConfig& config, const std::string& tool_a, const std::string& tool_b) {
    if (tool_a.empty() || tool_b.empty()) {
        fail(ErrorKind::InvalidArgument, "--tool-a and --tool-b are required");
    }
    auto dataset = load_required_dataset(config);
    Runtime runtime = make_runtime(config, true);
    HarnessConfig hconfig = harness_config(config);

    std::map<std::string, ToolMemory> memories;
    std::map<std::string, VectorIndex> indexes;
    std::map<std::string, const ToolMemory*> memory_ptrs;
    std::map<std::string, VectorIndex*> index_ptrs;
    if (hconfig.mode.tag == ModeTag::ToolMem) {
        for (const auto& tool_id : {tool_a, tool_b}) {
            memories[tool_id] =
                load_or_build_memory(config, runtime, dataset, tool_id, indexes[tool_id]);
            memory_ptrs[tool_id] = &memories[tool_id];
            index_ptrs[tool_id] = &indexes[tool_id];
        }
    }

    EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder, hconfig);
    SelectionEvalSection section =
        harness.run_selection_eval(dataset, tool_a, tool_b, memory_ptrs, index_ptrs);
    fs::create_directories(config.report_dir);
    std::string stem = tool_a + "_vs_" + tool_b + "." + config.mode + ".selection";
    fs::path txt_path = fs::path(config.report_dir) / (stem + ".txt");
    fs::path jsonl_path = fs::path(config.report_dir) / (stem + ".jsonl");
    guard_overwrite(txt_path, config.force);
    guard_overwrite(jsonl_path, config.force);
    std::string report = render_selection_report(section);
    write_text_file(report, txt_path.string());
    write_selection_jsonl(section, jsonl_path.string());
    std::cout << report;
    return kExitOk;
}

int cmd_eval(const RunConfig& config, const std::string& tool_filter) {
    auto dataset = load_required_dataset(config);
    Runtime runtime = make_runtime(config, true);
    HarnessConfig hconfig = harness_config(config);
    std::vector<std::string> tools =
        tool_filter.empty() ? tools_in(records_with_split(dataset, Split::Test))
                            : std::vector<std::string>{tool_filter};
    if (tools.empty()) fail(ErrorKind::InvalidArgument, "dataset has no test-split records");

    EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder, hconfig);
    fs::create_directories(config.report_dir);
    for (const auto& tool_id : tools) {
        ToolMemory memory;
        VectorIndex index;
        bool toolmem_mode = hconfig.mode.tag == ModeTag::ToolMem;
        if (toolmem_mode) {
            memory = load_or_build_memory(config, runtime, dataset, tool_id, index);
        }
        ScoreEvalSection section =
            harness.run_score_eval(dataset, tool_id, toolmem_mode ? &memory : nullptr,
                                   toolmem_mode ? &index : nullptr);
        std::string stem = tool_id + "." + config.mode + ".score";
        fs::path txt_path = fs::path(config.report_dir) / (stem + ".txt");
        fs::path jsonl_path = fs::path(config.report_dir) / (stem + ".jsonl");
        guard_overwrite(txt_path, config.force);
        guard_overwrite(jsonl_path, config.force);
        std::string report = render_score_report(section);
        write_text_file(report, txt_path.string());
        write_score_jsonl(section, jsonl_path.string());
        std::cout << report;
    }
    return kExitOk;
}

int cmd_ablate(const RunConfig& config, const std::string& tool_id,
               const std::string& k_spec) {
    if (tool_id.empty()) fail(ErrorKind::InvalidArgument, "--tool is required");
    std::vector<int> k_values;
    std::string token;
    for (char c : k_spec + ",") {
        if (c == ',') {
            if (token.empty()) continue;
            try {
                k_values.push_back(std::stoi(token));
            } catch (const std::exception&) {
                fail(ErrorKind::InvalidArgument, "bad k value \"" + token + "\"");
            }
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (k_values.empty()) fail(ErrorKind::InvalidArgument, "--k list is empty");

    auto dataset = load_required_dataset(config);
    Runtime runtime = make_runtime(config, true);
    HarnessConfig hconfig = harness_config(config);
    hconfig.mode.tag = ModeTag::ToolMem;
    VectorIndex index;
    ToolMemory memory = load_or_build_memory(config, runtime, dataset, tool_id, index);

    EvalHarness harness(runtime.prompts, *runtime.backend, *runtime.embedder, hconfig);
    auto rows = harness.ablate_k(dataset, tool_id, k_values, &memory, &index);
    fs::create_directories(config.report_dir);
    fs::path txt_path = fs::path(config.report_dir) / (tool_id + ".ablation.txt");
    fs::path jsonl_path = fs::path(config.report_dir) / (tool_id + ".ablation.jsonl");
    guard_overwrite(txt_path, config.force);
    guard_overwrite(jsonl_path, config.force);
    std::string report = render_ablation_report(tool_id, rows);
    write_text_file(report, txt_path.string());
    write_ablation_jsonl(tool_id, rows, jsonl_path.string());
    std::cout << report;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"builds, queries, and evaluates capability memories for generative tools"};
    app.name("toolmem");
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    std::string config_file;
    RunConfig flags; // receives flag values; only counted flags are applied
    app.add_option("--config", config_file, "JSON config file");
    app.add_option("--backend", flags.backend, "completion backend")
        ->check(CLI::IsMember({"remote", "mock"}));
    app.add_option("--embedder", flags.embedder, "embedding backend")
        ->check(CLI::IsMember({"remote", "hash"}));
    app.add_option("--mode", flags.mode, "prediction mode")
        ->check(CLI::IsMember({"generic", "fewshot", "toolmem"}));
    app.add_option("--k-build", flags.k_build, "entries retrieved per category while building");
    app.add_option("--k-infer", flags.k_infer, "entries retrieved per category at inference");
    app.add_option("--shots", flags.shot_count, "few-shot example count");
    app.add_option("--seed", flags.seed, "seed for ids and splits");
    app.add_option("--jobs", flags.jobs, "parallel task fan-out");
    app.add_option("--model", flags.model_id, "model identifier");
    app.add_option("--base-url", flags.base_url, "remote API base URL");
    app.add_option("--dataset", flags.dataset_path, "dataset JSONL path");
    app.add_option("--memory-dir", flags.memory_dir, "memory file directory");
    app.add_option("--fixtures", flags.fixtures_path, "mock fixture file");
    app.add_option("--report-dir", flags.report_dir, "report output directory");
    app.add_flag("--force", flags.force, "overwrite existing outputs");
    app.add_flag("--dry-run", flags.dry_run, "render and save prompts, no gateway calls");

    std::string tool_id;
    std::string tool_a;
    std::string tool_b;
    std::string k_spec = "0,6,12,18,24";
    std::string scorer;
    bool describe = false;

    CLI::App* build = app.add_subcommand("build", "build memories from train-split experiences");
    build->add_option("--tool", tool_id, "restrict to one tool");
    CLI::App* predict = app.add_subcommand("predict", "predict scores (or descriptions) on the test split");
    predict->add_option("--tool", tool_id, "tool to predict for")->required();
    predict->add_flag("--describe", describe, "predict output descriptions instead of scores");
    predict->add_option("--scorer", scorer, "external scorer command (JSONL stdin -> reals stdout)");
    CLI::App* select = app.add_subcommand("select", "head-to-head tool selection on shared test tasks");
    select->add_option("--tool-a", tool_a, "first tool")->required();
    select->add_option("--tool-b", tool_b, "second tool")->required();
    CLI::App* eval = app.add_subcommand("eval", "score-prediction evaluation with metrics");
    eval->add_option("--tool", tool_id, "restrict to one tool");
    CLI::App* ablate = app.add_subcommand("ablate", "sweep k-infer and tabulate mae/rmse");
    ablate->add_option("--tool", tool_id, "tool to sweep")->required();
    ablate->add_option("--k", k_spec, "comma-separated k values");
    CLI::App* show_config = app.add_subcommand("config", "print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig config; // defaults
        apply_environment(config);
        if (!config_file.empty()) apply_config_file(config, config_file);
        // flags win over every other layer
        if (app.count("--backend")) config.backend = flags.backend;
        if (app.count("--embedder")) config.embedder = flags.embedder;
        if (app.count("--mode")) config.mode = flags.mode;
        if (app.count("--k-build")) config.k_build = flags.k_build;
        if (app.count("--k-infer")) config.k_infer = flags.k_infer;
        if (app.count("--shots")) config.shot_count = flags.shot_count;
        if (app.count("--seed")) config.seed = flags.seed;
        if (app.count("--jobs")) config.jobs = flags.jobs;
        if (app.count("--model")) config.model_id = flags.model_id;
        if (app.count("--base-url")) config.base_url = flags.base_url;
        if (app.count("--dataset")) config.dataset_path = flags.dataset_path;
        if (app.count("--memory-dir")) config.memory_dir = flags.memory_dir;
        if (app.count("--fixtures")) config.fixtures_path = flags.fixtures_path;
        if (app.count("--report-dir")) config.report_dir = flags.report_dir;
        if (app.count("--force")) config.force = flags.force;
        if (app.count("--dry-run")) config.dry_run = flags.dry_run;
        validate_config(config);

        if (build->parsed()) return cmd_build(config, tool_id);
        if (predict->parsed()) return cmd_predict(config, tool_id, describe, scorer);
        if (select->parsed()) return cmd_select(config, tool_a, tool_b);
        if (eval->parsed()) return cmd_eval(config, tool_id);
        if (ablate->parsed()) return cmd_ablate(config, tool_id, k_spec);
        if (show_config->parsed()) {
            std::cout << config_to_json(config);
            return kExitOk;
        }
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
