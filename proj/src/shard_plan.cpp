#include "tcps/runtime/shard_plan.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcps::runtime {

std::vector<std::size_t> ShardPlan::shard_sizes() const {
  std::vector<std::size_t> sizes(shard_count, 0);
  for (const auto& [vehicle, shard] : assignment) ++sizes.at(shard);
  return sizes;
}

ShardPlan plan_shards(std::span<const VehicleId> vehicle_ids, std::size_t capacity) {
  if (capacity < 1) throw std::invalid_argument("shard capacity must be at least 1");
  std::vector<VehicleId> ids(vehicle_ids.begin(), vehicle_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  ShardPlan plan{.capacity = capacity, .shard_count = (ids.size() + capacity - 1) / capacity, .assignment = {}};
  for (std::size_t i = 0; i < ids.size(); ++i) plan.assignment.emplace(ids[i], i / capacity);
  return plan;
}

}  // namespace tcps::runtime
