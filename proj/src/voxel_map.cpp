#include "semmap/voxel_map.hpp"

#include "semmap/bmm.hpp"
#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <utility>

namespace semmap {

std::size_t VoxelCoordHash::operator()(const VoxelCoord &c) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (std::int64_t v : c) {
    h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

VoxelGridConfig make_voxel_grid_config(std::vector<double> voxel_size, std::vector<NormalGammaBlock> initial_blocks,
                                       ForgettingConfig forgetting, BlockSharing sharing) {
  const std::size_t k = initial_blocks.size();
  return {std::move(voxel_size), MapParams(DirichletParams::uniform(k), std::move(initial_blocks)),
          std::move(forgetting), sharing, MeanMatching::precision_weighted};
}

VoxelGrid::VoxelGrid(VoxelGridConfig config) : config_(std::move(config)), shared_blocks_(config_.prior.blocks()) {
  if (config_.voxel_size.empty())
    throw DimensionError("VoxelGrid: spatial dimension must be >= 1");
  for (double s : config_.voxel_size) {
    if (!std::isfinite(s) || s <= 0.0)
      throw DomainError(fmt::format("VoxelGrid: voxel size must be finite and > 0, got {}", s));
  }
  if (config_.forgetting.target.classes() != config_.prior.classes() ||
      config_.forgetting.target.dim() != config_.prior.dim())
    throw DimensionError("VoxelGrid: forgetting target does not match the prior's (K, J)");
}

VoxelCoord VoxelGrid::locate(std::span<const double> point) const {
  if (point.size() != spatial_dim())
    throw DimensionError(fmt::format("locate: point has {} coordinates, grid has d={}", point.size(), spatial_dim()));
  VoxelCoord out(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!std::isfinite(point[i]))
      throw DomainError("locate: non-finite point");
    const double q = std::floor(point[i] / config_.voxel_size[i]);
    if (std::abs(q) >= 9.2e18)
      throw IndexError("locate: point outside the addressable grid");
    out[i] = static_cast<std::int64_t>(q);
  }
  return out;
}

VoxelGrid::Cell &VoxelGrid::cell_for(const VoxelCoord &coord) {
  {
    std::shared_lock lock(index_mutex_);
    if (auto it = cells_.find(coord); it != cells_.end())
      return *it->second;
  }
  std::unique_lock lock(index_mutex_);
  auto [it, inserted] = cells_.try_emplace(coord, nullptr);
  if (inserted) {
    std::vector<NormalGammaBlock> blocks;
    if (config_.sharing == BlockSharing::per_voxel)
      blocks = config_.prior.blocks();
    it->second = std::unique_ptr<Cell>(new Cell{{}, config_.prior.dirichlet(), std::move(blocks), std::nullopt});
  }
  return *it->second;
}

const VoxelGrid::Cell *VoxelGrid::find_cell(const VoxelCoord &coord) const {
  std::shared_lock lock(index_mutex_);
  auto it = cells_.find(coord);
  return it == cells_.end() ? nullptr : it->second.get();
}

void VoxelGrid::observe(std::span<const double> point, const TimedMeasurement &meas) {
  if (!meas.label && !meas.property)
    throw DomainError("observe: measurement carries neither a class label nor a property vector");
  if (meas.label && *meas.label >= classes())
    throw IndexError(fmt::format("observe: class {} out of range (K={})", *meas.label, classes()));
  if (meas.property && static_cast<std::size_t>(meas.property->size()) != property_dim())
    throw DimensionError(fmt::format("observe: property has {} entries, expected J={}", meas.property->size(),
                                     property_dim()));
  if (!std::isfinite(meas.time))
    throw DomainError("observe: measurement time must be finite");

  const VoxelCoord coord = locate(point);
  Cell &cell = cell_for(coord);
  const auto &fc = config_.forgetting;

  if (config_.sharing == BlockSharing::per_voxel) {
    std::unique_lock lock(cell.mutex);
    FilterState next = step({MapParams(cell.dirichlet, cell.blocks), cell.last_time}, meas, fc, config_.mean_matching);
    cell.dirichlet = next.params.dirichlet();
    cell.blocks = next.params.blocks();
    cell.last_time = next.last_time;
    return;
  }

  if (meas.property) {
    std::scoped_lock lock(shared_mutex_, cell.mutex);
    const double cv = fc.delta.decay(elapsed(cell.last_time, meas.time));
    const double cs = fc.delta.decay(elapsed(shared_last_time_, meas.time));
    MapParams p(predict(cell.dirichlet, cv, fc.target.dirichlet()), predict(shared_blocks_, cs, fc.target.blocks()));
    p = bmm_property_update(p, *meas.property, config_.mean_matching);
    if (meas.label)
      p = categorical_update(p, *meas.label);
    cell.dirichlet = p.dirichlet();
    shared_blocks_ = p.blocks();
    cell.last_time = meas.time;
    shared_last_time_ = meas.time;
    return;
  }

  // The shared clock starts at the first observation of any kind. Later
  // observations carry the blocks forward so that a single voxel decays them
  // in the same steps as a standalone filter.
  {
    std::unique_lock write(shared_mutex_);
    if (!shared_last_time_) {
      shared_last_time_ = meas.time;
    } else if (meas.time > *shared_last_time_) {
      shared_blocks_ = predict(shared_blocks_, fc.delta.decay(meas.time - *shared_last_time_), fc.target.blocks());
      shared_last_time_ = meas.time;
    }
  }
  std::unique_lock lock(cell.mutex);
  const double cv = fc.delta.decay(elapsed(cell.last_time, meas.time));
  Vector a = predict(cell.dirichlet, cv, fc.target.dirichlet()).concentration();
  a[static_cast<Eigen::Index>(*meas.label)] += 1.0;
  cell.dirichlet = DirichletParams(std::move(a));
  cell.last_time = meas.time;
}

MapParams VoxelGrid::query(std::span<const double> point, double t) const { return query_voxel(locate(point), t); }

MapParams VoxelGrid::query_voxel(const VoxelCoord &coord, double t) const {
  if (coord.size() != spatial_dim())
    throw DimensionError("query: coordinate dimension does not match the grid");
  const auto &fc = config_.forgetting;
  const Cell *cell = find_cell(coord);

  if (config_.sharing == BlockSharing::per_voxel) {
    if (!cell)
      return config_.prior;
    std::shared_lock lock(cell->mutex);
    return predict(MapParams(cell->dirichlet, cell->blocks), elapsed(cell->last_time, t), fc);
  }

  std::shared_lock shared(shared_mutex_);
  auto blocks = predict(shared_blocks_, fc.delta.decay(elapsed(shared_last_time_, t)), fc.target.blocks());
  if (!cell)
    return {config_.prior.dirichlet(), std::move(blocks)};
  std::shared_lock lock(cell->mutex);
  const double cv = fc.delta.decay(elapsed(cell->last_time, t));
  return {predict(cell->dirichlet, cv, fc.target.dirichlet()), std::move(blocks)};
}

std::size_t VoxelGrid::voxel_count() const {
  std::shared_lock lock(index_mutex_);
  return cells_.size();
}

VoxelGridSnapshot VoxelGrid::snapshot() const {
  std::shared_lock index(index_mutex_);
  std::shared_lock shared(shared_mutex_);
  VoxelGridSnapshot out{spatial_dim(), config_.voxel_size, config_.sharing, shared_blocks_, shared_last_time_, {}};
  out.voxels.reserve(cells_.size());
  for (const auto &[coord, cell] : cells_) {
    std::shared_lock lock(cell->mutex);
    out.voxels.push_back({coord, cell->dirichlet, cell->blocks, cell->last_time});
  }
  std::sort(out.voxels.begin(), out.voxels.end(),
            [](const VoxelRecord &a, const VoxelRecord &b) { return a.coord < b.coord; });
  return out;
}

} // namespace semmap
