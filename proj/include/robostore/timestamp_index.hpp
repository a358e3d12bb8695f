#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "robostore/storage.hpp"

namespace robostore {

// The table/row/family prefix an index hangs off.
struct IndexOwner {
  std::string table;
  Bytes row_key;
  std::string family;

  friend auto operator<=>(const IndexOwner&, const IndexOwner&) = default;
  friend bool operator==(const IndexOwner&, const IndexOwner&) = default;
};

// An index entry points either at a stored column or carries the value inline.
using IndexTarget = std::variant<Bytes, ColumnPath>;

struct TimestampIndexEntry {
  std::string label;  // "T1", "T2", ...
  Timestamp ts;
  IndexTarget target;

  friend bool operator==(const TimestampIndexEntry&, const TimestampIndexEntry&) = default;
};

// Second column of the two-column timestamp scheme: labelled stamps kept in
// ascending time order.
class TimestampIndex {
 public:
  explicit TimestampIndex(IndexOwner owner) : owner_(std::move(owner)) {}

  const IndexOwner& owner() const { return owner_; }
  const std::vector<TimestampIndexEntry>& entries() const { return entries_; }

  // Re-recording an existing label moves it to its new position.
  const TimestampIndexEntry& record(std::string label, Timestamp ts, IndexTarget target);
  std::optional<TimestampIndexEntry> latest() const;
  std::vector<TimestampIndexEntry> range(Timestamp lo, Timestamp hi) const;
  std::string next_label() const;

 private:
  IndexOwner owner_;
  std::vector<TimestampIndexEntry> entries_;  // ascending (ts, label)
};

class TimestampIndexRegistry {
 public:
  explicit TimestampIndexRegistry(const Store& store) : store_(&store) {}

  // An empty label is replaced with the next free "T{n}".
  TimestampIndexEntry record(const IndexOwner& owner, std::string label, Timestamp ts, IndexTarget target);
  std::optional<TimestampIndexEntry> latest(const IndexOwner& owner) const;
  std::vector<TimestampIndexEntry> range(const IndexOwner& owner, Timestamp lo, Timestamp hi) const;

  const TimestampIndex* find(const IndexOwner& owner) const;
  std::vector<const TimestampIndex*> all() const;
  void clear() { indexes_.clear(); }

 private:
  void check_owner(const IndexOwner& owner) const;

  const Store* store_;
  std::map<IndexOwner, TimestampIndex> indexes_;
};

// put() followed by an index_record() of the same stamp, targeting the path.
Timestamp put_indexed(Store& store, TimestampIndexRegistry& index, const ColumnPath& path, Bytes value,
                      std::optional<Timestamp> ts = std::nullopt);

}  // namespace robostore
