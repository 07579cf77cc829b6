#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "tcps/sim/transaction.hpp"

namespace tcps::runtime {

/// Static partition of the fleet into parallel function instances, each
/// serving at most `capacity` vehicles.
struct ShardPlan {
  std::size_t capacity = 1;
  std::size_t shard_count = 0;
  std::map<VehicleId, std::size_t> assignment;

  std::vector<std::size_t> shard_sizes() const;
};

/// Sorts the distinct vehicle ids and fills shards in order, so
/// shard_count == ceil(distinct / capacity). Throws std::invalid_argument
/// for capacity < 1.
ShardPlan plan_shards(std::span<const VehicleId> vehicle_ids, std::size_t capacity);

}  // namespace tcps::runtime
