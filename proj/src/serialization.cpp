#include "semmap/serialization.hpp"

#include "semmap/error.hpp"

#include <fmt/format.h>

namespace semmap {

using nlohmann::json;

json vector_to_json(const Vector &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json &j, const char *field) {
  if (!j.is_array())
    throw DomainError(fmt::format("'{}' must be an array of numbers", field));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw DomainError(fmt::format("'{}'[{}] is not a number", field, i));
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

namespace {

const json &field(const json &j, const char *name) {
  if (!j.is_object() || !j.contains(name))
    throw DomainError(fmt::format("missing field '{}'", name));
  return j.at(name);
}

json blocks_to_json(const std::vector<NormalGammaBlock> &blocks) {
  json out = json::array();
  for (const auto &b : blocks)
    out.push_back(to_json(b));
  return out;
}

} // namespace

json to_json(const NormalGammaBlock &b) {
  return {{"mu", vector_to_json(b.mu())},
          {"lambda", vector_to_json(b.lambda())},
          {"alpha", vector_to_json(b.alpha())},
          {"beta", vector_to_json(b.beta())}};
}

json to_json(const MapParams &p) {
  return {{"a", vector_to_json(p.dirichlet().concentration())}, {"blocks", blocks_to_json(p.blocks())}};
}

NormalGammaBlock block_from_json(const json &j) {
  return {vector_from_json(field(j, "mu"), "mu"), vector_from_json(field(j, "lambda"), "lambda"),
          vector_from_json(field(j, "alpha"), "alpha"), vector_from_json(field(j, "beta"), "beta")};
}

MapParams map_params_from_json(const json &j) {
  DirichletParams a(vector_from_json(field(j, "a"), "a"));
  const json &jb = field(j, "blocks");
  if (!jb.is_array())
    throw DomainError("'blocks' must be an array");
  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(jb.size());
  for (const auto &b : jb)
    blocks.push_back(block_from_json(b));
  return {std::move(a), std::move(blocks)};
}

json to_json(const VoxelGridSnapshot &s) {
  json voxels = json::array();
  for (const auto &v : s.voxels) {
    json rec = {{"coord", v.coord}, {"a", vector_to_json(v.dirichlet.concentration())}};
    rec["last_time"] = v.last_time ? json(*v.last_time) : json(nullptr);
    if (!v.blocks.empty())
      rec["blocks"] = blocks_to_json(v.blocks);
    voxels.push_back(std::move(rec));
  }
  json out = {{"d", s.d}, {"voxel_size", s.voxel_size}, {"voxels", std::move(voxels)}};
  out["shared_blocks"] = s.sharing == BlockSharing::shared ? blocks_to_json(s.shared_blocks) : json(nullptr);
  return out;
}

} // namespace semmap
