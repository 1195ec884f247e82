#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nap/adam.hpp"
#include "nap/matrix.hpp"
#include "nap/objective.hpp"

namespace nap {

/// Complete training state at an epoch boundary. `epoch` counts completed
/// epochs (the next one to run). Reloading and continuing reproduces the
/// uninterrupted trajectory bit-identically because every epoch's random
/// streams are derived statelessly from the run seed.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  long long epoch = 0;
  std::vector<Matrix> params;  // all_params order: encoder layers, then projection
  OptimizerState opt;
  double best_val_acc = -1.0;
  long long best_epoch = -1;
  std::optional<SimilarityMask> cached_mask;  // present under once-refresh policy
};

/// Binary layout (little-endian): magic "NAPG", u32 version, u64 config
/// hash, i64 epoch, u32 param count, per param {i32 rows, i32 cols, doubles},
/// optimizer {i64 t, 4 doubles, m matrices, v matrices}, f64 best_val_acc,
/// i64 best_epoch, u8 mask flag then {i32 epoch, i64 r, u64 count, i32 pairs}.
void save_checkpoint(const Checkpoint& ck, const std::string& path);

/// Throws IoError on file problems, ParseError on malformed content.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nap
