#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolmem/experience.hpp"

namespace toolmem {

enum class Modality { Image, Text };
enum class Split { Train, Test, Unassigned };

const char* modality_name(Modality modality); // "image" / "text"
const char* split_name(Split split);          // "train" / "test" / "unassigned"

// One benchmark example for one tool, normalized from either input schema.
struct DatasetRecord {
    std::string task_id;
    std::string tool_id;
    std::string task_prompt;
    std::string rubric;
    std::string solution; // generated text, or an image locator
    bool solution_is_attachment = false;
    int ground_truth_score = 0; // 1-5
    std::optional<std::string> feedback;
    Modality modality = Modality::Text;
    Split split = Split::Unassigned;
};

// The 5-point Likert scale used for image alignment scoring; image-schema
// records carry no per-task rubric, so this constant fills the slot.
const std::string& image_likert_rubric();

// Loads a JSONL dataset, dispatching per record on schema:
//   image style: {"task_id","prompt","tool_id","image","ratings":[r1,r2,r3],
//                 "split"?}                (rater 1 is the ground truth)
//   text style:  {"task_id","prompt","rubric","tool_id","response",
//                 "judge_score","split"?}  (judge score is the ground truth)
// "split" is optional ("train"/"test"); records without it stay unassigned
// until split_dataset runs.  Malformed JSON → parse error with line number;
// missing keys, bad ratings, or scores outside 1-5 → schema error.
std::vector<DatasetRecord> load_dataset(const std::string& path);
void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path);

// Deterministically partitions records by task so the same task_id never
// straddles splits: unique task_ids are sorted, shuffled with mt19937(seed),
// and whole tasks are assigned to train until exactly train_n records are
// covered, then to test until test_n.  Leftover tasks are dropped (sampling).
// Errors: counts unreachable on a task boundary or too few records.
std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> split_dataset(
    const std::vector<DatasetRecord>& records, unsigned seed, std::size_t train_n,
    std::size_t test_n);

// Returns records already carrying the given split marker.
std::vector<DatasetRecord> records_with_split(const std::vector<DatasetRecord>& records,
                                              Split split);
std::vector<DatasetRecord> records_for_tool(const std::vector<DatasetRecord>& records,
                                            const std::string& tool_id);

// Adapts a record to the builder's input shape (experience_id = task_id).
Experience to_experience(const DatasetRecord& record);

} // namespace toolmem
