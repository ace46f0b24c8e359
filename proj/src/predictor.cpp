#include "toolmem/predictor.hpp"

#include <algorithm>
#include <cctype>

#include "toolmem/errors.hpp"
#include "toolmem/util.hpp"

namespace toolmem {

const char* mode_name(ModeTag tag) {
    switch (tag) {
    case ModeTag::Generic: return "generic";
    case ModeTag::FewShot: return "fewshot";
    case ModeTag::ToolMem: return "toolmem";
    }
    return "generic";
}

ModeTag mode_from_name(const std::string& name) {
    if (name == "generic") return ModeTag::Generic;
    if (name == "fewshot") return ModeTag::FewShot;
    if (name == "toolmem") return ModeTag::ToolMem;
    fail(ErrorKind::InvalidArgument, "unknown prediction mode \"" + name + "\"");
}

ParsedScore parse_score(const std::string& raw) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
        // standalone: not glued to letters/digits and not a decimal component
        bool left_blocked =
            begin > 0 && (alnum(raw[begin - 1]) ||
                          (raw[begin - 1] == '.' && begin > 1 &&
                           std::isdigit(static_cast<unsigned char>(raw[begin - 2]))));
        bool right_blocked =
            i < raw.size() && (alnum(raw[i]) ||
                               (raw[i] == '.' && i + 1 < raw.size() &&
                                std::isdigit(static_cast<unsigned char>(raw[i + 1]))));
        if (left_blocked || right_blocked) continue;
        std::size_t digits = i - begin;
        long long value = digits > 18 ? 6 : std::stoll(raw.substr(begin, digits));
        ParsedScore parsed;
        if (value < 1) {
            parsed.score = 1;
            parsed.clamped = true;
        } else if (value > 5) {
            parsed.score = 5;
            parsed.clamped = true;
        } else {
            parsed.score = static_cast<int>(value);
        }
        return parsed;
    }
    fail(ErrorKind::UnparseableScore, "no integer score token in completion: \"" + raw + "\"");
}

void FewShotPool::add(FewShotExample example, Embedder& embedder, EmbeddingCache* cache) {
    Item item;
    item.vec = cache ? cache->embed_cached(embedder, example.task_id, example.task_prompt)
                     : embedder.embed(example.task_prompt);
    item.example = std::move(example);
    items_.push_back(std::move(item));
}

FewShotPool FewShotPool::from_records(const std::vector<DatasetRecord>& records,
                                      Embedder& embedder, EmbeddingCache* cache) {
    FewShotPool pool;
    for (const auto& record : records) {
        pool.add(FewShotExample{record.task_id, record.task_prompt, record.rubric,
                                record.ground_truth_score},
                 embedder, cache);
    }
    return pool;
}

std::vector<FewShotExample> FewShotPool::nearest(const std::string& query, std::size_t count,
                                                 Embedder& embedder) const {
    EmbeddingVector query_vec = embedder.embed(query);
    std::vector<std::pair<double, const Item*>> scored;
    scored.reserve(items_.size());
    for (const auto& item : items_) {
        scored.emplace_back(cosine_distance(query_vec, item.vec), &item);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second->example.task_id < b.second->example.task_id;
    });
    if (scored.size() > count) scored.resize(count);
    std::vector<FewShotExample> out;
    out.reserve(scored.size());
    for (const auto& [distance, item] : scored) out.push_back(item->example);
    return out;
}

Predictor::Predictor(const PromptLibrary& prompts, Backend& backend, Embedder& embedder,
                     std::string model_id)
    : prompts_(prompts), backend_(backend), embedder_(embedder), model_id_(std::move(model_id)) {}

std::string Predictor::render_context_memory(const ToolMemory& memory, const CategoryHits* hits) {
    std::string out = memory.overview;
    if (!hits) return out;
    for (auto category : kAllCategories) {
        const auto& bucket = (*hits)[category_index(category)];
        if (bucket.empty()) continue;
        out += "\n";
        out += category_name(category);
        out += ":";
        for (const auto& hit : bucket) {
            out += "\n- ";
            out += hit.entry.text;
        }
    }
    return out;
}

std::string Predictor::render_examples(const std::vector<FewShotExample>& examples,
                                       Modality modality) {
    std::string out;
    for (const auto& example : examples) {
        if (!out.empty()) out += "\n\n";
        if (modality == Modality::Image) {
            out += "Prompt: \"" + example.task_prompt + "\"\nScore: " +
                   std::to_string(example.score);
        } else {
            out += "Task Prompt: \"" + example.task_prompt + "\"\nRubric: " + example.rubric +
                   "\nModel's Score: " + std::to_string(example.score);
        }
    }
    return out;
}

CategoryHits Predictor::retrieve_for(const std::string& task_prompt, const std::string& tool_id,
                                     int k_infer, const PredictionContext& context) {
    if (k_infer <= 0 || !context.index) return CategoryHits{};
    return context.index->retrieve_all_categories(task_prompt, tool_id,
                                                  static_cast<std::size_t>(k_infer), embedder_);
}

std::string Predictor::render_score_prompt(const std::string& task_prompt,
                                           const std::string& rubric, Modality modality,
                                           const std::string& tool_id,
                                           const PredictionMode& mode,
                                           const PredictionContext& context) {
    std::string prefix = modality == Modality::Image ? "image/" : "text/";
    Bindings bindings{{"model_name", tool_id}, {"prompt", task_prompt}};
    if (modality == Modality::Text) bindings["rubric"] = rubric;
    switch (mode.tag) {
    case ModeTag::Generic:
        return render_template(prompts_.get(prefix + "score_generic"), bindings);
    case ModeTag::FewShot: {
        if (!context.pool) {
            fail(ErrorKind::InvalidArgument, "fewshot mode requires a training pool");
        }
        auto examples = context.pool->nearest(task_prompt,
                                              static_cast<std::size_t>(mode.shot_count),
                                              embedder_);
        bindings["samples_prompt"] = render_examples(examples, modality);
        return render_template(prompts_.get(prefix + "score_fewshot"), bindings);
    }
    case ModeTag::ToolMem: {
        if (!context.memory) fail(ErrorKind::InvalidArgument, "toolmem mode requires a memory");
        CategoryHits hits = retrieve_for(task_prompt, tool_id, mode.k_infer, context);
        bindings["current_memory"] =
            render_context_memory(*context.memory, mode.k_infer > 0 ? &hits : nullptr);
        return render_template(prompts_.get(prefix + "score_toolmem"), bindings);
    }
    }
    fail(ErrorKind::InvalidArgument, "unhandled prediction mode");
}

std::string Predictor::render_description_prompt(const std::string& task_prompt,
                                                 const std::string& tool_id,
                                                 const PredictionMode& mode,
                                                 const PredictionContext& context) {
    Bindings bindings{{"model_name", tool_id}, {"prompt", task_prompt}};
    switch (mode.tag) {
    case ModeTag::Generic:
        return render_template(prompts_.get("image/describe_generic"), bindings);
    case ModeTag::FewShot: {
        if (!context.pool) {
            fail(ErrorKind::InvalidArgument, "fewshot mode requires a training pool");
        }
        auto examples = context.pool->nearest(task_prompt,
                                              static_cast<std::size_t>(mode.shot_count),
                                              embedder_);
        bindings["current_memory"] = "A text to image model";
        bindings["few_shot_memory"] = render_examples(examples, Modality::Image);
        return render_template(prompts_.get("image/describe_fewshot"), bindings);
    }
    case ModeTag::ToolMem: {
        if (!context.memory) fail(ErrorKind::InvalidArgument, "toolmem mode requires a memory");
        CategoryHits hits = retrieve_for(task_prompt, tool_id, mode.k_infer, context);
        bindings["current_memory"] =
            render_context_memory(*context.memory, mode.k_infer > 0 ? &hits : nullptr);
        return render_template(prompts_.get("image/describe_toolmem"), bindings);
    }
    }
    fail(ErrorKind::InvalidArgument, "unhandled prediction mode");
}

std::string Predictor::complete(const std::string& prompt) {
    CompletionRequest request;
    request.messages.push_back(ChatMessage{ChatRole::User, prompt});
    request.model_id = model_id_;
    return backend_.complete(request);
}

Prediction Predictor::predict_score(const std::string& task_prompt, const std::string& rubric,
                                    Modality modality, const std::string& tool_id,
                                    const PredictionMode& mode,
                                    const PredictionContext& context) {
    Prediction prediction;
    prediction.rendered_prompt =
        render_score_prompt(task_prompt, rubric, modality, tool_id, mode, context);
    prediction.raw_response = complete(prediction.rendered_prompt);
    try {
        ParsedScore parsed = parse_score(prediction.raw_response);
        prediction.score = parsed.score;
        prediction.clamped = parsed.clamped;
        return prediction;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnparseableScore) throw;
    }
    // one identical retry, then give up on this task
    prediction.raw_response = complete(prediction.rendered_prompt);
    prediction.retried = true;
    try {
        ParsedScore parsed = parse_score(prediction.raw_response);
        prediction.score = parsed.score;
        prediction.clamped = parsed.clamped;
        return prediction;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnparseableScore) throw;
        fail(ErrorKind::Prediction,
             "score unparseable after retry for tool " + tool_id + ": " + e.what());
    }
}

Description Predictor::predict_description(const std::string& task_prompt,
                                           const std::string& tool_id,
                                           const PredictionMode& mode,
                                           const PredictionContext& context) {
    Description description;
    description.rendered_prompt =
        render_description_prompt(task_prompt, tool_id, mode, context);
    std::string raw = complete(description.rendered_prompt);
    if (trim(raw).empty()) {
        fail(ErrorKind::Prediction, "empty description completion for tool " + tool_id);
    }
    std::vector<std::string> words = split_whitespace(raw);
    if (words.size() > 50) {
        description.truncated = true;
        words.resize(50);
        std::string joined;
        for (const auto& word : words) {
            if (!joined.empty()) joined += " ";
            joined += word;
        }
        description.text = joined;
    } else {
        description.text = trim(raw);
    }
    return description;
}

SelectionResult Predictor::select_tool(const std::string& task_prompt, const std::string& rubric,
                                       Modality modality, const std::string& tool_a,
                                       const std::string& tool_b, const PredictionMode& mode,
                                       const PredictionContext& context_a,
                                       const PredictionContext& context_b) {
    SelectionResult result;
    result.prediction_a =
        predict_score(task_prompt, rubric, modality, tool_a, mode, context_a);
    result.prediction_b =
        predict_score(task_prompt, rubric, modality, tool_b, mode, context_b);
    if (result.prediction_a.score > result.prediction_b.score) {
        result.choice = SelectionChoice::A;
    } else if (result.prediction_b.score > result.prediction_a.score) {
        result.choice = SelectionChoice::B;
    } else {
        result.choice = SelectionChoice::Tie;
    }
    return result;
}

} // namespace toolmem
