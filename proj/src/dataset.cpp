#include "toolmem/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "json.hpp"
#include "toolmem/errors.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

using nlohmann::json;

const char* modality_name(Modality modality) {
    return modality == Modality::Image ? "image" : "text";
}

const char* split_name(Split split) {
    switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "unassigned";
    }
}

const std::string& image_likert_rubric() {
    static const std::string rubric =
        "The scoring metric used here is a 5-point Likert scale:\n"
        "1 (Does not match at all): The generated image or video completely fails to align "
        "with the text prompt. It either lacks the required elements or depicts a scenario "
        "that contradicts the prompt.\n"
        "2 (Has significant discrepancies): There are major mismatches between the text prompt "
        "and the visual output. Key elements may be missing, or relationships and attributes "
        "are significantly misrepresented.\n"
        "3 (Has several minor discrepancies): The output aligns with the prompt in a general "
        "sense but has noticeable errors or omissions in key details. While the main elements "
        "are present, finer aspects are not accurately rendered.\n"
        "4 (Has a few minor discrepancies): The output is mostly aligned with the prompt, with "
        "only a few small and less critical details being inaccurate or missing. The visual "
        "matches the description well but not perfectly.\n"
        "5 (Matches exactly): The generated image or video perfectly matches the text prompt. "
        "All elements, relationships, attributes, and details align seamlessly with the "
        "description, with no noticeable discrepancies.";
    return rubric;
}

namespace {

Split parse_split(const json& object, int line_no, const std::string& path) {
    if (!object.contains("split")) return Split::Unassigned;
    std::string value = object.at("split").get<std::string>();
    if (value == "train") return Split::Train;
    if (value == "test") return Split::Test;
    fail(ErrorKind::Schema,
         path + ":" + std::to_string(line_no) + ": unknown split \"" + value + "\"");
}

std::string require_string(const json& object, const char* key, int line_no,
                           const std::string& path) {
    if (!object.contains(key) || !object.at(key).is_string()) {
        fail(ErrorKind::Schema,
             path + ":" + std::to_string(line_no) + ": missing string field \"" + key + "\"");
    }
    return object.at(key).get<std::string>();
}

int require_score(const json& value, const char* what, int line_no, const std::string& path) {
    if (!value.is_number_integer()) {
        fail(ErrorKind::Schema,
             path + ":" + std::to_string(line_no) + ": " + what + " must be an integer");
    }
    int score = value.get<int>();
    if (score < 1 || score > 5) {
        fail(ErrorKind::Schema, path + ":" + std::to_string(line_no) + ": " + what + " " +
                                    std::to_string(score) + " outside 1-5");
    }
    return score;
}

DatasetRecord parse_record(const json& object, int line_no, const std::string& path) {
    DatasetRecord record;
    record.task_id = require_string(object, "task_id", line_no, path);
    record.tool_id = require_string(object, "tool_id", line_no, path);
    record.task_prompt = require_string(object, "prompt", line_no, path);
    record.split = parse_split(object, line_no, path);
    if (object.contains("feedback")) {
        record.feedback = require_string(object, "feedback", line_no, path);
    }
    if (object.contains("ratings")) {
        const json& ratings = object.at("ratings");
        if (!ratings.is_array() || ratings.empty()) {
            fail(ErrorKind::Schema, path + ":" + std::to_string(line_no) +
                                        ": \"ratings\" must be a non-empty array");
        }
        for (const auto& rating : ratings) require_score(rating, "rating", line_no, path);
        record.modality = Modality::Image;
        record.solution = require_string(object, "image", line_no, path);
        record.solution_is_attachment = true;
        record.ground_truth_score = ratings.front().get<int>(); // rater 1 is truth
        record.rubric = image_likert_rubric();
    } else if (object.contains("judge_score")) {
        record.modality = Modality::Text;
        record.solution = require_string(object, "response", line_no, path);
        record.solution_is_attachment = false;
        record.rubric = require_string(object, "rubric", line_no, path);
        record.ground_truth_score =
            require_score(object.at("judge_score"), "judge_score", line_no, path);
    } else {
        fail(ErrorKind::Schema, path + ":" + std::to_string(line_no) +
                                    ": record has neither \"ratings\" nor \"judge_score\"");
    }
    return record;
}

} // namespace

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open dataset file " + path);
    std::vector<DatasetRecord> records;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json object;
        try {
            object = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        DatasetRecord record = parse_record(object, line_no, path);
        if (!seen.insert({record.task_id, record.tool_id}).second) {
            fail(ErrorKind::Schema, path + ":" + std::to_string(line_no) +
                                        ": duplicate (task_id, tool_id) pair " + record.task_id +
                                        "/" + record.tool_id);
        }
        records.push_back(std::move(record));
    }
    return records;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write dataset file " + path);
    for (const auto& record : records) {
        json object;
        object["task_id"] = record.task_id;
        object["tool_id"] = record.tool_id;
        object["prompt"] = record.task_prompt;
        if (record.split != Split::Unassigned) object["split"] = split_name(record.split);
        if (record.feedback) object["feedback"] = *record.feedback;
        if (record.modality == Modality::Image) {
            object["image"] = record.solution;
            object["ratings"] = json::array({record.ground_truth_score});
        } else {
            object["response"] = record.solution;
            object["rubric"] = record.rubric;
            object["judge_score"] = record.ground_truth_score;
        }
        out << object.dump() << "\n";
    }
    if (!out) fail(ErrorKind::Io, "failed writing dataset file " + path);
}

std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split_dataset(
    const std::vector<DatasetRecord>& records, unsigned seed, std::size_t train_n,
    std::size_t test_n) {
    if (train_n + test_n > records.size()) {
        fail(ErrorKind::InvalidArgument, "dataset has " + std::to_string(records.size()) +
                                             " records; cannot take " +
                                             std::to_string(train_n + test_n));
    }
    std::map<std::string, std::vector<const DatasetRecord*>> by_task;
    for (const auto& record : records) by_task[record.task_id].push_back(&record);
    std::vector<std::string> task_ids;
    task_ids.reserve(by_task.size());
    for (const auto& [task_id, group] : by_task) task_ids.push_back(task_id);
    std::mt19937 rng(seed);
    std::shuffle(task_ids.begin(), task_ids.end(), rng);

    std::vector<DatasetRecord> train;
    std::vector<DatasetRecord> test;
    std::size_t cursor = 0;
    auto take = [&](std::vector<DatasetRecord>& out, std::size_t want, Split split,
                    const char* label) {
        while (out.size() < want) {
            if (cursor == task_ids.size()) {
                fail(ErrorKind::InvalidArgument,
                     std::string("not enough tasks to fill the ") + label + " split");
            }
            for (const DatasetRecord* record : by_task[task_ids[cursor]]) {
                DatasetRecord copy = *record;
                copy.split = split;
                out.push_back(std::move(copy));
            }
            ++cursor;
            if (out.size() > want) {
                fail(ErrorKind::InvalidArgument,
                     std::string(label) + " count " + std::to_string(want) +
                         " does not land on a task boundary");
            }
        }
    };
    take(train, train_n, Split::Train, "train");
    take(test, test_n, Split::Test, "test");
    return {std::move(train), std::move(test)};
}

std::vector<DatasetRecord> records_with_split(const std::vector<DatasetRecord>& records,
                                              Split split) {
    std::vector<DatasetRecord> out;
    for (const auto& record : records) {
        if (record.split == split) out.push_back(record);
    }
    return out;
}

std::vector<DatasetRecord> records_for_tool(const std::vector<DatasetRecord>& records,
                                            const std::string& tool_id) {
    std::vector<DatasetRecord> out;
    for (const auto& record : records) {
        if (record.tool_id == tool_id) out.push_back(record);
    }
    return out;
}

Experience to_experience(const DatasetRecord& record) {
    Experience exp;
    exp.experience_id = record.task_id;
    exp.tool_id = record.tool_id;
    exp.task_prompt = record.task_prompt;
    exp.solution = record.solution;
    exp.solution_is_attachment = record.solution_is_attachment;
    exp.score = record.ground_truth_score;
    exp.rubric = record.rubric;
    exp.feedback = record.feedback;
    return exp;
}

} // namespace toolmem
