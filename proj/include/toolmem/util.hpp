#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace toolmem {

// --- text helpers -----------------------------------------------------------

std::string trim(const std::string& s);
std::string to_lower(std::string s);
bool starts_with_ci(const std::string& text, const std::string& prefix);

/// Lowercased alphanumeric tokens; everything else is a separator.
std::vector<std::string> tokenize(const std::string& text);

/// Whitespace-delimited tokens, case and punctuation preserved.
std::vector<std::string> split_whitespace(const std::string& text);

// --- digests ----------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

// --- time -------------------------------------------------------------------

/// Supplies RFC-3339 timestamps for newly created memory entries.
using Clock = std::function<std::string()>;

Clock system_clock_utc();

/// Fixed epoch advancing one second per call; hermetic runs use this so
/// memory files are reproducible.
Clock logical_clock(std::int64_t start_unix_seconds = 1700000000);

// --- identifiers ------------------------------------------------------------

/// Supplies opaque entry identifiers.
using IdGenerator = std::function<std::string()>;

/// UUID v4 from a seeded PRNG. Same seed, same id sequence.
IdGenerator seeded_uuid_generator(std::uint64_t seed);

/// UUID v4 from std::random_device.
IdGenerator random_uuid_generator();

} // namespace toolmem
