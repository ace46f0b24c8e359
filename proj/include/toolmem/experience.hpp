#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace toolmem {

/// One task-solving interaction with a tool: task, solution, reward.
struct Experience {
    std::string experience_id;
    std::string tool_id;
    std::string task_prompt;
    std::string solution;           // response text, or a locator for image tools
    bool solution_is_attachment = false;
    int score = 0;                  // 1-5 Likert
    std::string rubric;
    std::optional<std::string> feedback;

    bool valid_score() const { return score >= 1 && score <= 5; }
};

/// Line-delimited JSON records matching the Experience fields.
std::vector<Experience> load_experiences(const std::filesystem::path& path);
void save_experiences(const std::vector<Experience>& experiences,
                      const std::filesystem::path& path);

} // namespace toolmem
