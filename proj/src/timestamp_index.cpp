#include "robostore/timestamp_index.hpp"

#include <algorithm>

#include "robostore/error.hpp"

namespace robostore {

namespace {

bool entry_less(const TimestampIndexEntry& a, const TimestampIndexEntry& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  return a.label < b.label;
}

}  // namespace

const TimestampIndexEntry& TimestampIndex::record(std::string label, Timestamp ts, IndexTarget target) {
  std::erase_if(entries_, [&](const TimestampIndexEntry& e) { return e.label == label; });
  TimestampIndexEntry entry{std::move(label), ts, std::move(target)};
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), entry, entry_less);
  return *entries_.insert(pos, std::move(entry));
}

std::optional<TimestampIndexEntry> TimestampIndex::latest() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.back();
}

std::vector<TimestampIndexEntry> TimestampIndex::range(Timestamp lo, Timestamp hi) const {
  auto first = std::lower_bound(entries_.begin(), entries_.end(), lo,
                                [](const TimestampIndexEntry& e, Timestamp t) { return e.ts < t; });
  auto last = std::upper_bound(entries_.begin(), entries_.end(), hi,
                               [](Timestamp t, const TimestampIndexEntry& e) { return t < e.ts; });
  return {first, last};
}

std::string TimestampIndex::next_label() const {
  for (std::size_t n = entries_.size() + 1;; ++n) {
    std::string candidate = "T" + std::to_string(n);
    const bool taken = std::any_of(entries_.begin(), entries_.end(),
                                   [&](const TimestampIndexEntry& e) { return e.label == candidate; });
    if (!taken) return candidate;
  }
}

void TimestampIndexRegistry::check_owner(const IndexOwner& owner) const {
  auto schema = store_->schema(owner.table);
  if (!schema || schema->find_family(owner.family) == nullptr) {
    throw Error(ErrorCode::kUnknownOwner, owner.table + "/" + escape_component(owner.row_key) + "/" + owner.family);
  }
}

TimestampIndexEntry TimestampIndexRegistry::record(const IndexOwner& owner, std::string label, Timestamp ts,
                                                   IndexTarget target) {
  if (!ts.is_set()) throw Error(ErrorCode::kInvalidTimestamp, "index timestamps must be nonzero");
  check_owner(owner);
  auto [it, _] = indexes_.try_emplace(owner, owner);
  if (label.empty()) label = it->second.next_label();
  return it->second.record(std::move(label), ts, std::move(target));
}

std::optional<TimestampIndexEntry> TimestampIndexRegistry::latest(const IndexOwner& owner) const {
  check_owner(owner);
  const TimestampIndex* index = find(owner);
  return index ? index->latest() : std::nullopt;
}

std::vector<TimestampIndexEntry> TimestampIndexRegistry::range(const IndexOwner& owner, Timestamp lo,
                                                               Timestamp hi) const {
  if (lo > hi) throw Error(ErrorCode::kInvalidRange, "index window lo > hi");
  check_owner(owner);
  const TimestampIndex* index = find(owner);
  return index ? index->range(lo, hi) : std::vector<TimestampIndexEntry>{};
}

const TimestampIndex* TimestampIndexRegistry::find(const IndexOwner& owner) const {
  auto it = indexes_.find(owner);
  return it == indexes_.end() ? nullptr : &it->second;
}

std::vector<const TimestampIndex*> TimestampIndexRegistry::all() const {
  std::vector<const TimestampIndex*> out;
  for (const auto& [_, index] : indexes_) out.push_back(&index);
  return out;
}

Timestamp put_indexed(Store& store, TimestampIndexRegistry& index, const ColumnPath& path, Bytes value,
                      std::optional<Timestamp> ts) {
  const Timestamp effective = store.put(path, std::move(value), ts);
  index.record(IndexOwner{path.table, path.row_key, path.family}, "", effective, path);
  return effective;
}

}  // namespace robostore
