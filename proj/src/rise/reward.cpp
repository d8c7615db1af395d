#include "rise/reward.hpp"

namespace rise {

double reward_value(std::size_t ld_before, std::size_t ld_after, std::size_t non_keep) {
  const double improvement = static_cast<double>(ld_before) - static_cast<double>(ld_after);
  return (1.0 / (1.0 + static_cast<double>(ld_after))) *
         (improvement - static_cast<double>(non_keep) + 1.0);
}

RewardRecord compute_reward(const TokenSeq& y_t, const TokenSeq& y_next, const TokenSeq& y_star,
                            const std::vector<EditOp>& edits) {
  RewardRecord r;
  r.ld_before = levenshtein(y_t, y_star);
  r.ld_after = levenshtein(y_next, y_star);
  r.non_keep = count_non_keep(edits);
  r.value = reward_value(r.ld_before, r.ld_after, r.non_keep);
  return r;
}

nlohmann::json reward_to_json(const RewardRecord& r) {
  return {{"ld_before", r.ld_before},
          {"ld_after", r.ld_after},
          {"non_keep", r.non_keep},
          {"reward", r.value}};
}

}  // namespace rise
