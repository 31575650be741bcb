#pragma once

// Sparse voxel map: each visited voxel owns a Dirichlet over the K classes,
// while the K normal-gamma property blocks are shared map-wide (default) or
// owned per voxel (BlockSharing::per_voxel).
//
// Thread safety: observe() and query() may be called concurrently. In
// shared mode property observations serialise on the shared blocks;
// categorical observations and per-voxel-mode observations only lock their
// own voxel.

#include "semmap/distributions.hpp"
#include "semmap/dynamics.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace semmap {

using VoxelCoord = std::vector<std::int64_t>;

struct VoxelCoordHash {
  std::size_t operator()(const VoxelCoord &c) const noexcept;
};

enum class BlockSharing { shared, per_voxel };

struct VoxelGridConfig {
  std::vector<double> voxel_size; ///< edge length per axis; its size is d
  MapParams prior;                ///< a_0 of unvisited voxels plus the initial blocks
  ForgettingConfig forgetting;
  BlockSharing sharing{BlockSharing::shared};
  MeanMatching mean_matching{MeanMatching::precision_weighted};
};

/// Builds a config with the uniform a_0 = 1 prior.
[[nodiscard]] VoxelGridConfig make_voxel_grid_config(std::vector<double> voxel_size,
                                                     std::vector<NormalGammaBlock> initial_blocks,
                                                     ForgettingConfig forgetting,
                                                     BlockSharing sharing = BlockSharing::shared);

struct VoxelRecord {
  VoxelCoord coord;
  DirichletParams dirichlet;
  std::vector<NormalGammaBlock> blocks; ///< empty in shared mode
  std::optional<double> last_time;
};

/// Consistent copy of the grid, voxels sorted by coordinate.
struct VoxelGridSnapshot {
  std::size_t d{0};
  std::vector<double> voxel_size;
  BlockSharing sharing{BlockSharing::shared};
  std::vector<NormalGammaBlock> shared_blocks;
  std::optional<double> shared_last_time;
  std::vector<VoxelRecord> voxels;
};

class VoxelGrid {
public:
  explicit VoxelGrid(VoxelGridConfig config);
  VoxelGrid(const VoxelGrid &) = delete;
  VoxelGrid &operator=(const VoxelGrid &) = delete;

  [[nodiscard]] std::size_t spatial_dim() const noexcept { return config_.voxel_size.size(); }
  [[nodiscard]] std::size_t classes() const noexcept { return config_.prior.classes(); }
  [[nodiscard]] std::size_t property_dim() const noexcept { return config_.prior.dim(); }
  [[nodiscard]] BlockSharing sharing() const noexcept { return config_.sharing; }

  /// floor(p / voxel_size) per axis.
  [[nodiscard]] VoxelCoord locate(std::span<const double> point) const;

  /// Forgetting-predicts the touched state to meas.time and applies the update.
  void observe(std::span<const double> point, const TimedMeasurement &meas);

  /// Parameters at `point` predicted to time t, without modifying the grid.
  [[nodiscard]] MapParams query(std::span<const double> point, double t) const;
  [[nodiscard]] MapParams query_voxel(const VoxelCoord &coord, double t) const;

  [[nodiscard]] std::size_t voxel_count() const;
  [[nodiscard]] VoxelGridSnapshot snapshot() const;

private:
  struct Cell {
    mutable std::shared_mutex mutex;
    DirichletParams dirichlet;
    std::vector<NormalGammaBlock> blocks; // per-voxel mode only
    std::optional<double> last_time;
  };

  Cell &cell_for(const VoxelCoord &coord);
  const Cell *find_cell(const VoxelCoord &coord) const;

  VoxelGridConfig config_;

  mutable std::shared_mutex index_mutex_;
  std::unordered_map<VoxelCoord, std::unique_ptr<Cell>, VoxelCoordHash> cells_;

  mutable std::shared_mutex shared_mutex_;
  std::vector<NormalGammaBlock> shared_blocks_;
  std::optional<double> shared_last_time_;
};

} // namespace semmap
