#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace illusion::text {

// Lowercase and delete ASCII punctuation ("F-i-v-e!" -> "five").
std::string normalize(std::string_view input);

// normalize() then split on whitespace; empty tokens are dropped.
std::vector<std::string> tokens(std::string_view input);

std::string join(const std::vector<std::string>& parts, std::string_view separator = " ");

// Word-level Levenshtein distance.
std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Edit distance divided by the longer sequence length; 0 when both are empty.
double normalized_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Aligned differences between expected and heard token sequences.
// Substitutions give (expected, heard); deletions give (expected, "");
// insertions give ("", heard).
std::vector<std::pair<std::string, std::string>> token_mismatches(const std::vector<std::string>& expected,
                                                                  const std::vector<std::string>& heard);

}  // namespace illusion::text
