#pragma once

#include <string>

namespace toolmem {

// Effective run configuration.  Layered precedence: command-line flags
// override config-file values, which override TOOLMEM_* environment
// variables, which override these defaults.  The API key is deliberately
// not a config key: it is read only from TOOLMEM_API_KEY.
struct RunConfig {
    std::string backend = "mock";    // mock | remote
    std::string embedder = "hash";   // hash | remote
    std::string mode = "toolmem";    // generic | fewshot | toolmem
    int k_build = 6;                 // entries retrieved per category while building
    int k_infer = 12;                // entries retrieved per category at inference
    int shot_count = 12;             // nearest training examples for fewshot
    unsigned seed = 7;               // drives ids and split shuffling
    int jobs = 1;                    // bounded task fan-out
    std::string model_id = "gpt-4o-mini-2024-07-18";
    std::string base_url = "https://api.openai.com";
    std::string dataset_path;
    std::string memory_dir = "memory";
    std::string fixtures_path;       // digest -> response file for the mock backend
    std::string report_dir = "reports";
    bool force = false;
    bool dry_run = false;
};

// Overlays recognized TOOLMEM_* variables (BACKEND, EMBEDDER, MODE, K_BUILD,
// K_INFER, SHOTS, SEED, JOBS, MODEL, BASE_URL, DATASET, MEMORY_DIR, FIXTURES,
// REPORT_DIR) onto config.
void apply_environment(RunConfig& config);

// Overlays a JSON config file; keys mirror the flag names (backend, embedder,
// mode, k_build, k_infer, shots, seed, jobs, model, base_url, dataset,
// memory_dir, fixtures, report_dir).  Unknown keys are schema errors.
void apply_config_file(RunConfig& config, const std::string& path);

// Rejects out-of-domain values (unknown backend/embedder/mode, k < 0,
// jobs < 1, shots < 0) with invalid-argument errors.
void validate_config(const RunConfig& config);

std::string config_to_json(const RunConfig& config);

} // namespace toolmem
