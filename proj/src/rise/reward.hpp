#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "rise/editcore.hpp"

namespace rise {

/// Outcome of one editing iteration against the target.
struct RewardRecord {
  std::size_t ld_before = 0;  // LD(y_t, y*)
  std::size_t ld_after = 0;   // LD(y_next, y*)
  std::size_t non_keep = 0;
  double value = 0.0;
};

/// value = (ld_before - ld_after - non_keep + 1) / (1 + ld_after).
/// Rewards moves toward the target and charges one unit per non-KEEP edit.
RewardRecord compute_reward(const TokenSeq& y_t, const TokenSeq& y_next, const TokenSeq& y_star,
                            const std::vector<EditOp>& edits);

double reward_value(std::size_t ld_before, std::size_t ld_after, std::size_t non_keep);

nlohmann::json reward_to_json(const RewardRecord& r);

}  // namespace rise
