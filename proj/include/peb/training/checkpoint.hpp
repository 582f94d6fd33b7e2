#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "peb/model/layout.hpp"
#include "peb/training/adam.hpp"

namespace peb::training {

// Everything needed to resume or evaluate a run. Stored as JSON: doubles are
// written in shortest round-trip form, so save/load is bit exact.
struct Checkpoint {
  model::ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::optional<AdamState> adam;
};

nlohmann::json to_json(const model::Architecture& arch);
model::Architecture architecture_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& c);
// Throws StructuralError when the stored layout disagrees with the one the
// stored architecture implies, or when vector sizes do not match.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace peb::training
