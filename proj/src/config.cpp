#include "toolmem/config.hpp"

#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "toolmem/errors.hpp"

namespace toolmem {

using nlohmann::json;

namespace {

const char* env_or_null(const char* name) { return std::getenv(name); }

void set_int(int& target, const std::string& value, const std::string& what) {
    try {
        target = std::stoi(value);
    } catch (const std::exception&) {
        fail(ErrorKind::InvalidArgument, what + " is not an integer: \"" + value + "\"");
    }
}

} // namespace

void apply_environment(RunConfig& config) {
    if (const char* v = env_or_null("TOOLMEM_BACKEND")) config.backend = v;
    if (const char* v = env_or_null("TOOLMEM_EMBEDDER")) config.embedder = v;
    if (const char* v = env_or_null("TOOLMEM_MODE")) config.mode = v;
    if (const char* v = env_or_null("TOOLMEM_K_BUILD")) set_int(config.k_build, v, "TOOLMEM_K_BUILD");
    if (const char* v = env_or_null("TOOLMEM_K_INFER")) set_int(config.k_infer, v, "TOOLMEM_K_INFER");
    if (const char* v = env_or_null("TOOLMEM_SHOTS")) set_int(config.shot_count, v, "TOOLMEM_SHOTS");
    if (const char* v = env_or_null("TOOLMEM_SEED")) {
        int seed = 0;
        set_int(seed, v, "TOOLMEM_SEED");
        config.seed = static_cast<unsigned>(seed);
    }
    if (const char* v = env_or_null("TOOLMEM_JOBS")) set_int(config.jobs, v, "TOOLMEM_JOBS");
    if (const char* v = env_or_null("TOOLMEM_MODEL")) config.model_id = v;
    if (const char* v = env_or_null("TOOLMEM_BASE_URL")) config.base_url = v;
    if (const char* v = env_or_null("TOOLMEM_DATASET")) config.dataset_path = v;
    if (const char* v = env_or_null("TOOLMEM_MEMORY_DIR")) config.memory_dir = v;
    if (const char* v = env_or_null("TOOLMEM_FIXTURES")) config.fixtures_path = v;
    if (const char* v = env_or_null("TOOLMEM_REPORT_DIR")) config.report_dir = v;
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config file " + path);
    json object;
    try {
        in >> object;
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, path + ": " + e.what());
    }
    if (!object.is_object()) fail(ErrorKind::Schema, path + ": config must be a JSON object");
    for (const auto& [key, value] : object.items()) {
        try {
            if (key == "backend") {
                config.backend = value.get<std::string>();
            } else if (key == "embedder") {
                config.embedder = value.get<std::string>();
            } else if (key == "mode") {
                config.mode = value.get<std::string>();
            } else if (key == "k_build") {
                config.k_build = value.get<int>();
            } else if (key == "k_infer") {
                config.k_infer = value.get<int>();
            } else if (key == "shots") {
                config.shot_count = value.get<int>();
            } else if (key == "seed") {
                config.seed = value.get<unsigned>();
            } else if (key == "jobs") {
                config.jobs = value.get<int>();
            } else if (key == "model") {
                config.model_id = value.get<std::string>();
            } else if (key == "base_url") {
                config.base_url = value.get<std::string>();
            } else if (key == "dataset") {
                config.dataset_path = value.get<std::string>();
            } else if (key == "memory_dir") {
                config.memory_dir = value.get<std::string>();
            } else if (key == "fixtures") {
                config.fixtures_path = value.get<std::string>();
            } else if (key == "report_dir") {
                config.report_dir = value.get<std::string>();
            } else {
                fail(ErrorKind::Schema, path + ": unknown config key \"" + key + "\"");
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Schema, path + ": bad value for \"" + key + "\": " + e.what());
        }
    }
}

void validate_config(const RunConfig& config) {
    if (config.backend != "mock" && config.backend != "remote") {
        fail(ErrorKind::InvalidArgument, "unknown backend \"" + config.backend + "\"");
    }
    if (config.embedder != "hash" && config.embedder != "remote") {
        fail(ErrorKind::InvalidArgument, "unknown embedder \"" + config.embedder + "\"");
    }
    if (config.mode != "generic" && config.mode != "fewshot" && config.mode != "toolmem") {
        fail(ErrorKind::InvalidArgument, "unknown mode \"" + config.mode + "\"");
    }
    if (config.k_build < 0) fail(ErrorKind::InvalidArgument, "k_build must be >= 0");
    if (config.k_infer < 0) fail(ErrorKind::InvalidArgument, "k_infer must be >= 0");
    if (config.shot_count < 0) fail(ErrorKind::InvalidArgument, "shots must be >= 0");
    if (config.jobs < 1) fail(ErrorKind::InvalidArgument, "jobs must be >= 1");
}

std::string config_to_json(const RunConfig& config) {
    json object;
    object["backend"] = config.backend;
    object["embedder"] = config.embedder;
    object["mode"] = config.mode;
    object["k_build"] = config.k_build;
    object["k_infer"] = config.k_infer;
    object["shots"] = config.shot_count;
    object["seed"] = config.seed;
    object["jobs"] = config.jobs;
    object["model"] = config.model_id;
    object["base_url"] = config.base_url;
    object["dataset"] = config.dataset_path;
    object["memory_dir"] = config.memory_dir;
    object["fixtures"] = config.fixtures_path;
    object["report_dir"] = config.report_dir;
    object["force"] = config.force;
    object["dry_run"] = config.dry_run;
    return object.dump(2) + "\n";
}

} // namespace toolmem
