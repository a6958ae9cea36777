#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "illusion/challenge.hpp"

namespace illusion {

// On-disk challenge bundle, one directory per challenge:
//   manifest.json      client-safe ChallengeView
//   answer.json        server secret: answer_index, kinds, phi, seed
//   <id>.wav           reference and each option, keyed by opaque id
// Returns the bundle directory (<root>/<challenge_id>).
std::filesystem::path write_challenge_bundle(const Challenge& challenge, const std::filesystem::path& root);

Challenge read_challenge_bundle(const std::filesystem::path& bundle_dir);

// Every bundle directly under root, in directory-name order.
std::vector<Challenge> read_challenge_pool(const std::filesystem::path& root);

std::string answer_json(const Challenge& challenge);

}  // namespace illusion
