#pragma once

#include <map>
#include <string>
#include <vector>

#include "robostore/mapreduce.hpp"

namespace robostore::testing {

// Every row through the map in scan order, group, reduce.
inline mapreduce::Result sequential_fold(const Store& store, const mapreduce::FunctionRegistry& reg,
                                         const mapreduce::JobSpec& spec) {
  std::map<std::string, std::vector<Bytes>> groups;
  for (const auto& row : store.scan(spec.table, spec.filter)) {
    for (auto& [k, v] : reg.map(spec.map_fn)(row, spec.map_param)) groups[k].push_back(v);
  }
  mapreduce::Result out;
  for (const auto& [k, vs] : groups) out[k] = reg.reduce(spec.reduce_fn)(k, vs);
  return out;
}

}  // namespace robostore::testing
