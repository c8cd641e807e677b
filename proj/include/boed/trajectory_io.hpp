#pragma once

// Trajectory persistence.
//
// CSV: header `sample_id,block,trial,choice,reward`, one row per trial,
// samples in order, blocks and trials zero-based.
//
// Binary cache (all integers little-endian):
//   bytes 0..3   magic "BTRJ"
//   u32          format version (1)
//   u64          number of samples
//   u32 u32 u32  blocks, trials, arms
//   then for each sample, block-major: `blocks*trials` choice bytes followed
//   by `blocks*trials` reward bytes.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "boed/bandit_sim.hpp"

namespace boed {

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& ys);
std::vector<Trajectory> read_trajectories_csv(std::istream& in, std::size_t arms);

void write_trajectory_cache(const std::filesystem::path& path, const std::vector<Trajectory>& ys);
std::vector<Trajectory> read_trajectory_cache(const std::filesystem::path& path);

}  // namespace boed
