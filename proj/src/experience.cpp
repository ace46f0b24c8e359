#include "toolmem/experience.hpp"

#include <fstream>

#include <json.hpp>

#include "toolmem/errors.hpp"

namespace toolmem {

using nlohmann::json;

std::vector<Experience> load_experiences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open experiences: " + path.string());
    std::vector<Experience> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json record = json::parse(line);
            Experience exp;
            exp.experience_id = record.at("experience_id").get<std::string>();
            exp.tool_id = record.at("tool_id").get<std::string>();
            exp.task_prompt = record.at("task_prompt").get<std::string>();
            exp.solution = record.at("solution").get<std::string>();
            exp.solution_is_attachment = record.value("solution_is_attachment", false);
            exp.score = record.at("score").get<int>();
            exp.rubric = record.value("rubric", std::string{});
            if (record.contains("feedback") && !record["feedback"].is_null()) {
                exp.feedback = record["feedback"].get<std::string>();
            }
            if (!exp.valid_score()) {
                fail(ErrorKind::Schema, "line " + std::to_string(line_no) +
                                            ": score out of 1-5 range");
            }
            if (exp.task_prompt.empty()) {
                fail(ErrorKind::Schema,
                     "line " + std::to_string(line_no) + ": empty task_prompt");
            }
            out.push_back(std::move(exp));
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_experiences(const std::vector<Experience>& experiences,
                      const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
    for (const auto& exp : experiences) {
        json record{
            {"experience_id", exp.experience_id},
            {"tool_id", exp.tool_id},
            {"task_prompt", exp.task_prompt},
            {"solution", exp.solution},
            {"solution_is_attachment", exp.solution_is_attachment},
            {"score", exp.score},
            {"rubric", exp.rubric},
        };
        if (exp.feedback) record["feedback"] = *exp.feedback;
        out << record.dump() << '\n';
    }
}

} // namespace toolmem
