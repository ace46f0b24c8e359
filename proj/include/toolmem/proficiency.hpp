#pragma once

#include <array>
#include <optional>
#include <string>

#include "toolmem/errors.hpp"

namespace toolmem {

/// The four proficiency levels structuring a tool's capability memory.
/// Storage order is fixed: Proficient, Good, Bad, Weak.
enum class ProficiencyCategory { Proficient = 0, Good = 1, Bad = 2, Weak = 3 };

inline constexpr std::array<ProficiencyCategory, 4> kAllCategories = {
    ProficiencyCategory::Proficient,
    ProficiencyCategory::Good,
    ProficiencyCategory::Bad,
    ProficiencyCategory::Weak,
};

inline constexpr std::size_t category_index(ProficiencyCategory c) {
    return static_cast<std::size_t>(c);
}

/// Numeric measure attached to each level: +2, +1, -1, -2.
/// Stored and exported, not consumed by any computation.
inline constexpr int category_weight(ProficiencyCategory c) {
    switch (c) {
        case ProficiencyCategory::Proficient: return 2;
        case ProficiencyCategory::Good: return 1;
        case ProficiencyCategory::Bad: return -1;
        case ProficiencyCategory::Weak: return -2;
    }
    return 0;
}

/// Display name: "Proficient", "Good", "Bad", "Weak".
inline const char* category_name(ProficiencyCategory c) {
    switch (c) {
        case ProficiencyCategory::Proficient: return "Proficient";
        case ProficiencyCategory::Good: return "Good";
        case ProficiencyCategory::Bad: return "Bad";
        case ProficiencyCategory::Weak: return "Weak";
    }
    return "?";
}

/// Wire/file label: "proficient", "good", "bad", "weak".
inline const char* category_label(ProficiencyCategory c) {
    switch (c) {
        case ProficiencyCategory::Proficient: return "proficient";
        case ProficiencyCategory::Good: return "good";
        case ProficiencyCategory::Bad: return "bad";
        case ProficiencyCategory::Weak: return "weak";
    }
    return "?";
}

inline std::optional<ProficiencyCategory> category_from_label(const std::string& label) {
    if (label == "proficient") return ProficiencyCategory::Proficient;
    if (label == "good") return ProficiencyCategory::Good;
    if (label == "bad") return ProficiencyCategory::Bad;
    if (label == "weak") return ProficiencyCategory::Weak;
    return std::nullopt;
}

inline ProficiencyCategory require_category_label(const std::string& label) {
    auto c = category_from_label(label);
    if (!c) fail(ErrorKind::Schema, "unknown category label \"" + label + "\"");
    return *c;
}

} // namespace toolmem
