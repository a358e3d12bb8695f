#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "../support/storage_oracle.hpp"
#include "robostore/document.hpp"
#include "robostore/error.hpp"
#include "robostore/storage.hpp"

namespace robostore {
namespace {

ColumnPath super_path(std::string row, std::string super_key, std::string column) {
  return {"webtable", std::move(row), "anchor", std::move(super_key), std::move(column)};
}

ColumnPath plain_path(std::string row, std::string column) {
  return {"hand", std::move(row), "thumb", std::nullopt, std::move(column)};
}

template <typename F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kParseError;
}

using testing::LogOracle;

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store.create_table("webtable", {{"anchor", true}});
    store.create_table("hand", {{"thumb", false}, {"knuckles", false}});
  }
  Store store;
};

TEST(StoreSchemaTest, CreateTableRegistersFamilies) {
  Store store;
  auto web = store.create_table("webtable", {{"anchor", true}});
  ASSERT_EQ(web.families.size(), 1u);
  EXPECT_TRUE(web.families[0].is_super);

  auto hand = store.create_table("hand", {{"thumb", false}, {"knuckles", false}});
  EXPECT_EQ(hand.families.size(), 2u);
  EXPECT_NE(hand.find_family("thumb"), nullptr);
  EXPECT_FALSE(hand.find_family("knuckles")->is_super);
  EXPECT_TRUE(hand.created_at.is_set());
}

TEST(StoreSchemaTest, DuplicateAndEmpty) {
  Store store;
  store.create_table("webtable", {{"anchor", true}});
  EXPECT_EQ(code_of([&] { store.create_table("webtable", {{"anchor", true}}); }), ErrorCode::kDuplicateTable);
  EXPECT_EQ(code_of([&] { store.create_table("empty", {}); }), ErrorCode::kEmptyFamilyList);
}

TEST_F(StoreTest, PutOnSuperColumnLayout) {
  ColumnPath p{"webtable", "row", "anchor", "super key 1", "property 1"};
  const Timestamp t1 = store.put(p, "value");
  EXPECT_GT(t1, Timestamp{});

  store.put(p, "v2", t1);
  auto cell = store.get_latest(p);
  ASSERT_TRUE(cell);
  EXPECT_EQ(cell->value, "v2");
  EXPECT_EQ(cell->ts, t1);
  EXPECT_EQ(store.versions(p).size(), 1u);
}

TEST_F(StoreTest, AutoTimestampsStrictlyIncrease) {
  const auto p = plain_path("joint", "state");
  std::vector<Timestamp> issued;
  for (int i = 0; i < 1000; ++i) issued.push_back(store.put(p, std::to_string(i)));
  auto sorted = issued;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, issued);
  EXPECT_TRUE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_F(StoreTest, WallClockSourceIsRespected) {
  Timestamp wall{500};
  Store clocked([&] { return wall; });
  clocked.create_table("t", {{"f", false}});
  ColumnPath p{"t", "r", "f", std::nullopt, "c"};
  // create_table took the 500 reading.
  EXPECT_EQ(clocked.put(p, "a"), Timestamp{501});
  EXPECT_EQ(clocked.put(p, "b"), Timestamp{502});  // stalled source
  wall = Timestamp{900};
  EXPECT_EQ(clocked.put(p, "c"), Timestamp{900});
}

TEST_F(StoreTest, ErrorsOnBadPaths) {
  EXPECT_EQ(code_of([&] { store.put({"nope", "r", "f", std::nullopt, "c"}, "x"); }), ErrorCode::kUnknownTable);
  EXPECT_EQ(code_of([&] { store.put({"hand", "r", "palm", std::nullopt, "c"}, "x"); }), ErrorCode::kUnknownFamily);
  EXPECT_EQ(code_of([&] { store.put({"hand", "r", "thumb", "sk", "c"}, "x"); }), ErrorCode::kSuperKeyMismatch);
  EXPECT_EQ(code_of([&] { store.put({"webtable", "r", "anchor", std::nullopt, "c"}, "x"); }),
            ErrorCode::kSuperKeyMismatch);
  EXPECT_EQ(code_of([&] { store.put(plain_path("r", "c"), "x", Timestamp{}); }), ErrorCode::kInvalidTimestamp);
  EXPECT_EQ(code_of([&] { store.get_latest({"nope", "r", "f", std::nullopt, "c"}); }), ErrorCode::kUnknownTable);
  EXPECT_EQ(code_of([&] { store.erase({"hand", "r", "palm", std::nullopt, "c"}); }), ErrorCode::kUnknownFamily);
}

TEST_F(StoreTest, LatestReplacesOldScore) {
  const auto p = plain_path("match", "score");
  store.put(p, "old score", Timestamp{5});
  store.put(p, "new score", Timestamp{9});
  auto cell = store.get_latest(p);
  ASSERT_TRUE(cell);
  EXPECT_EQ(*cell, (Cell{"new score", Timestamp{9}, false}));
  EXPECT_FALSE(store.get_latest(plain_path("missing", "score")));
}

TEST_F(StoreTest, GetAtPicksGreatestNotAfter) {
  const auto p = plain_path("r", "c");
  store.put(p, "three", Timestamp{3});
  store.put(p, "seven", Timestamp{7});
  EXPECT_EQ(store.get_at(p, Timestamp{5})->value, "three");
  EXPECT_EQ(store.get_at(p, Timestamp{7})->value, "seven");
  EXPECT_FALSE(store.get_at(p, Timestamp{2}));
}

TEST_F(StoreTest, DeleteShadowsOnlyOlderVersions) {
  const auto p = plain_path("r", "c");
  store.put(p, "v");
  store.erase(p);
  EXPECT_FALSE(store.get_latest(p));
  ASSERT_TRUE(store.head(p));
  EXPECT_TRUE(store.head(p)->tombstone);

  const auto q = plain_path("r", "d");
  store.erase(q, Timestamp{4});
  store.put(q, "live", Timestamp{6});
  EXPECT_EQ(store.get_latest(q)->value, "live");
  EXPECT_FALSE(store.get_at(q, Timestamp{5}));
}

TEST_F(StoreTest, RandomHistoriesMatchReplayOracle) {
  std::mt19937_64 rng(7);
  LogOracle oracle;
  std::vector<ColumnPath> paths;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) paths.push_back(plain_path("r" + std::to_string(r), "c" + std::to_string(c)));
  }
  for (int i = 0; i < 3000; ++i) {
    const auto& p = paths[rng() % paths.size()];
    const Timestamp ts{1 + rng() % 200};
    const auto op = rng() % 4;
    if (op == 0) {
      store.erase(p, ts);
      oracle.record(p, ts, true, "");
    } else if (op == 1) {
      const Timestamp q{rng() % 220};
      auto got = store.get_at(p, q);
      auto want = oracle.at(p, q);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) ASSERT_EQ(got->value, *want);
    } else {
      Bytes v = "v" + std::to_string(i);
      store.put(p, v, ts);
      oracle.record(p, ts, false, v);
    }
  }
  for (const auto& p : paths) {
    auto got = store.get_latest(p);
    auto want = oracle.latest(p);
    ASSERT_EQ(got.has_value(), want.has_value()) << p.to_string();
    if (got) EXPECT_EQ(got->value, *want);
    auto versions = store.versions(p);
    for (std::size_t i = 1; i < versions.size(); ++i) ASSERT_GT(versions[i - 1].ts, versions[i].ts);
  }
}

TEST_F(StoreTest, ValuesAreByteExact) {
  Bytes all;
  for (int c = 0; c < 256; ++c) all.push_back(static_cast<char>(c));
  const auto p = plain_path(Bytes("\0row", 4), "bin");
  store.put(p, all);
  EXPECT_EQ(store.get_latest(p)->value, all);
}

TEST_F(StoreTest, ScanBasics) {
  EXPECT_TRUE(store.scan("hand", {}).empty());
  store.put(plain_path("a", "c"), "1");
  store.put(plain_path("b", "c"), "2");
  store.put(plain_path("c", "c"), "3");
  ScanFilter f;
  f.start_row = "a";
  f.end_row = "c";
  auto rows = store.scan("hand", f);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].row_key, "a");
  EXPECT_EQ(rows[1].row_key, "b");

  f.start_row = "z";
  EXPECT_EQ(code_of([&] { store.scan("hand", f); }), ErrorCode::kInvalidRange);
  EXPECT_EQ(code_of([&] { store.scan("nope", {}); }), ErrorCode::kUnknownTable);

  ScanFilter limited;
  limited.limit = 1;
  EXPECT_EQ(store.scan("hand", limited).size(), 1u);
}

TEST_F(StoreTest, ScanWithTimestampWindowSeesHistory) {
  const auto p = plain_path("r", "c");
  store.put(p, "a", Timestamp{10});
  store.put(p, "b", Timestamp{20});
  store.put(p, "c", Timestamp{30});
  ScanFilter f;
  f.ts_window = {Timestamp{15}, Timestamp{30}};
  auto rows = store.scan("hand", f);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_EQ(rows[0].cells.size(), 2u);
  EXPECT_EQ(rows[0].cells[0].cell.value, "c");
  EXPECT_EQ(rows[0].cells[1].cell.value, "b");
}

TEST_F(StoreTest, ScanValuePredicateMatchesFullDumpFilter) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 400; ++i) {
    ColumnPath p{"hand", "r" + std::to_string(rng() % 30), (rng() % 2) ? "thumb" : "knuckles", std::nullopt,
                 "c" + std::to_string(rng() % 4)};
    if (rng() % 5 == 0) {
      store.erase(p);
    } else {
      store.put(p, "v" + std::to_string(rng() % 3));
    }
  }
  for (const char* wanted : {"v0", "v1", "v2"}) {
    // Oracle: dump every column, keep latest live cells equal to the value.
    std::map<Bytes, std::vector<ColumnPath>> expect;
    store.for_each_column("hand", [&](const ColumnPath& p, std::span<const Cell> versions) {
      if (!versions.front().tombstone && versions.front().value == wanted) expect[p.row_key].push_back(p);
    });
    ScanFilter f;
    f.value_equals = wanted;
    auto rows = store.scan("hand", f);
    ASSERT_EQ(rows.size(), expect.size());
    for (const auto& row : rows) {
      std::vector<ColumnPath> got;
      for (const auto& c : row.cells) got.push_back(c.path);
      EXPECT_EQ(got, expect[row.row_key]);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i - 1].row_key, rows[i].row_key);
  }
}

TEST_F(StoreTest, GcExamples) {
  const auto p = plain_path("r", "c");
  store.put(p, "1", Timestamp{1});
  store.put(p, "2", Timestamp{2});
  store.put(p, "3", Timestamp{3});
  EXPECT_EQ(store.gc("hand", Timestamp{0}, true), 0u);
  EXPECT_EQ(store.gc("hand", Timestamp{10}, true), 2u);
  auto versions = store.versions(p);
  ASSERT_EQ(versions.size(), 1u);
  EXPECT_EQ(versions[0].ts, Timestamp{3});

  const auto q = plain_path("r", "dead");
  store.put(q, "x", Timestamp{1});
  store.erase(q, Timestamp{2});
  EXPECT_EQ(store.gc("hand", Timestamp{10}, true), 2u);
  EXPECT_TRUE(store.versions(q).empty());
  EXPECT_EQ(code_of([&] { store.gc("nope", Timestamp{1}, true); }), ErrorCode::kUnknownTable);
}

TEST_F(StoreTest, GcMatchesFilterOracleAndPreservesLatest) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 30; ++round) {
    Store s;
    s.create_table("t", {{"f", false}});
    std::map<ColumnPath, std::map<Timestamp, Cell>> model;
    for (int i = 0; i < 120; ++i) {
      ColumnPath p{"t", "r" + std::to_string(rng() % 5), "f", std::nullopt, "c" + std::to_string(rng() % 3)};
      const Timestamp ts{1 + rng() % 50};
      const bool tomb = rng() % 4 == 0;
      if (tomb) {
        s.erase(p, ts);
      } else {
        s.put(p, "v" + std::to_string(i), ts);
      }
      model[p][ts] = Cell{tomb ? "" : "v" + std::to_string(i), ts, tomb};
    }
    const Timestamp watermark{rng() % 60};
    const bool keep_latest = rng() % 2 == 0;

    std::map<ColumnPath, std::optional<Cell>> before;
    for (const auto& [p, _] : model) before[p] = s.get_latest(p);

    // Oracle: drop every version below the watermark; with keep_latest the
    // newest version survives when it is live.
    std::size_t expected_removed = 0;
    std::map<ColumnPath, std::vector<Cell>> expected;
    for (const auto& [p, slots] : model) {
      const Cell& newest = slots.rbegin()->second;
      for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
        const bool pinned = keep_latest && &it->second == &newest && !newest.tombstone;
        if (it->first >= watermark || pinned) {
          expected[p].push_back(it->second);
        } else {
          ++expected_removed;
        }
      }
    }

    EXPECT_EQ(s.gc("t", watermark, keep_latest), expected_removed);
    for (const auto& [p, _] : model) {
      auto want = expected.count(p) ? expected[p] : std::vector<Cell>{};
      EXPECT_EQ(s.versions(p), want);
      if (keep_latest) EXPECT_EQ(s.get_latest(p), before[p]);
    }
  }
}

TEST(ColumnPathTest, EncodeParseRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    auto rand_bytes = [&](bool allow_empty) {
      Bytes b;
      const std::size_t n = (allow_empty ? 0 : 1) + rng() % 6;
      for (std::size_t k = 0; k < n; ++k) b.push_back(static_cast<char>(rng() % 256));
      return b;
    };
    ColumnPath p{rand_bytes(false), rand_bytes(true), rand_bytes(false),
                 rng() % 2 ? std::optional<std::string>(rand_bytes(true)) : std::nullopt, rand_bytes(true)};
    const auto text = p.to_string();
    EXPECT_EQ(text.find(' '), std::string::npos);
    auto back = ColumnPath::parse(text);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, p);
  }
  EXPECT_FALSE(ColumnPath::parse("a/b"));
  EXPECT_FALSE(ColumnPath::parse("a/b/c/%zz"));
}

TEST(TimestampTest, DecimalRoundTripAt128Bits) {
  EXPECT_EQ(Timestamp::max().to_string(), "340282366920938463463374607431768211455");
  EXPECT_EQ(Timestamp::parse("340282366920938463463374607431768211455"), Timestamp::max());
  EXPECT_FALSE(Timestamp::parse("340282366920938463463374607431768211456"));
  EXPECT_FALSE(Timestamp::parse("-1"));
  EXPECT_FALSE(Timestamp::parse(""));
  EXPECT_EQ(Timestamp::parse("0"), Timestamp{});
}

}  // namespace
}  // namespace robostore
