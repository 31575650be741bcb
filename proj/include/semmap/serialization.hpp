#pragma once

// JSON forms used by fixtures, scenario configs and map exports.
//
//   MapParams:  {"a": [K], "blocks": [{"mu": [J], "lambda": [J], "alpha": [J], "beta": [J]}, ...]}
//   Snapshot:   {"d", "voxel_size", "shared_blocks", "voxels": [{"coord", "a", "last_time"}]}

#include "semmap/distributions.hpp"
#include "semmap/voxel_map.hpp"

#include <json.hpp>

namespace semmap {

[[nodiscard]] nlohmann::json to_json(const NormalGammaBlock &b);
[[nodiscard]] nlohmann::json to_json(const MapParams &p);
[[nodiscard]] nlohmann::json to_json(const VoxelGridSnapshot &s);

/// Throws DomainError / DimensionError on malformed documents.
[[nodiscard]] NormalGammaBlock block_from_json(const nlohmann::json &j);
[[nodiscard]] MapParams map_params_from_json(const nlohmann::json &j);

[[nodiscard]] nlohmann::json vector_to_json(const Vector &v);
[[nodiscard]] Vector vector_from_json(const nlohmann::json &j, const char *field);

} // namespace semmap
