#include "robostore/mapreduce.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "../support/mapreduce_oracle.hpp"
#include "robostore/error.hpp"

namespace robostore::mapreduce {
namespace {

Result fold(const Store& store, const FunctionRegistry& reg, const JobSpec& spec) {
  return testing::sequential_fold(store, reg, spec);
}

void fill_words(Store& store) {
  store.create_table("words", {{"text", false}});
  const char* words[] = {"Arun", "son", "Raju", "son"};
  for (int i = 0; i < 4; ++i) store.put({"words", "r" + std::to_string(i), "text", std::nullopt, "w"}, words[i]);
}

TEST(MapReduce, WordCountFixture) {
  Store store;
  fill_words(store);
  const Result want{{"Arun", "1"}, {"Raju", "1"}, {"son", "2"}};
  for (std::size_t m = 1; m <= 8; ++m) {
    Engine e(store, FunctionRegistry::with_builtins(), {});
    auto id = e.submit({"words", {}, "word-count", "", "sum", m});
    EXPECT_EQ(e.await(id), want) << "M=" << m;
    EXPECT_EQ(e.phase(id), Phase::kComplete);
  }
}

TEST(MapReduce, ThreeRowsThreeSplits) {
  Store store;
  store.create_table("t", {{"f", false}});
  for (const char* r : {"a", "b", "c"}) store.put({"t", r, "f", std::nullopt, "c"}, "x y");
  Engine e(store, FunctionRegistry::with_builtins(), {});
  auto id = e.submit({"t", {}, "word-count", "", "sum", 3});
  for (const auto& s : e.splits(id)) EXPECT_EQ(s.rows, 1u);
  EXPECT_EQ(e.await(id), (Result{{"x", "3"}, {"y", "3"}}));
}

TEST(MapReduce, EmptyInput) {
  Store store;
  store.create_table("t", {{"f", false}});
  Engine e(store, FunctionRegistry::with_builtins(), {});
  EXPECT_TRUE(e.await(e.submit({"t", {}, "word-count", "", "sum", 4})).empty());
}

TEST(MapReduce, SubmitErrors) {
  Store store;
  fill_words(store);
  Engine e(store, FunctionRegistry::with_builtins(), {});
  auto code = [&](JobSpec spec) {
    try {
      e.submit(spec);
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::kParseError;
  };
  EXPECT_EQ(code({"words", {}, "nope", "", "sum", 1}), ErrorCode::kUnknownFunction);
  EXPECT_EQ(code({"words", {}, "word-count", "", "nope", 1}), ErrorCode::kUnknownFunction);
  EXPECT_EQ(code({"words", {}, "word-count", "", "sum", 0}), ErrorCode::kZeroSplits);
  EXPECT_EQ(code({"missing", {}, "word-count", "", "sum", 1}), ErrorCode::kUnknownTable);
  EXPECT_EQ(code({"words", {}, "template-match", "", "sum", 1}), ErrorCode::kInvalidConfig);
  EXPECT_THROW(e.await(99), Error);
}

TEST(MapReduce, ReducersIgnoreOrder) {
  auto reg = FunctionRegistry::with_builtins();
  sim::Rng rng(3);
  for (const char* name : {"sum", "max"}) {
    for (int round = 0; round < 50; ++round) {
      std::vector<Bytes> vals;
      for (int i = 0, n = static_cast<int>(rng.between(1, 12)); i < n; ++i) vals.push_back(std::to_string(rng.below(1000)));
      const auto want = reg.reduce(name)("k", vals);
      for (std::size_t i = vals.size(); i > 1; --i) std::swap(vals[i - 1], vals[rng.below(i)]);
      EXPECT_EQ(reg.reduce(name)("k", vals), want);
    }
  }
}

TEST(MapReduce, MaxTsAndTemplate) {
  Store store;
  store.create_table("img", {{"px", false}, {"meta", true}});
  store.put({"img", "a", "px", std::nullopt, "row0"}, "abab", Timestamp(5));
  store.put({"img", "a", "px", std::nullopt, "row0"}, "ababab", Timestamp(9));
  store.put({"img", "b", "px", std::nullopt, "row0"}, "zzz", Timestamp(7));
  store.put({"img", "b", "meta", std::string("cam"), "id"}, "bab", Timestamp(3));
  Engine e(store, FunctionRegistry::with_builtins(), {});
  EXPECT_EQ(e.await(e.submit({"img", {}, "max-ts", "", "max", 2})),
            (Result{{"meta/cam/id", "3"}, {"px/row0", "9"}}));
  EXPECT_EQ(e.await(e.submit({"img", {}, "template-match", "bab", "sum", 2})), (Result{{"a", "2"}, {"b", "1"}}));
}

TEST(MapReduce, IdleWorkerFailureIsHarmless) {
  Store store;
  fill_words(store);
  Engine e(store, FunctionRegistry::with_builtins(), {.workers = 3});
  e.fail_worker(2);
  EXPECT_EQ(e.await(e.submit({"words", {}, "word-count", "", "sum", 4})).at("son"), "2");
  EXPECT_THROW(e.fail_worker(0), Error);
  EXPECT_THROW(e.fail_worker(4), Error);
}

TEST(MapReduce, MidMapFailureReruns) {
  Store store;
  fill_words(store);
  Engine e(store, FunctionRegistry::with_builtins(), {.workers = 2, .min_task_ticks = 5, .max_task_ticks = 5});
  auto id = e.submit({"words", {}, "word-count", "", "sum", 2});
  e.loop().run_until(3);
  auto running = e.splits(id);
  ASSERT_EQ(running[0].status, SplitStatus::kRunning);
  e.fail_worker(*running[0].worker);
  EXPECT_EQ(e.await(id), (Result{{"Arun", "1"}, {"Raju", "1"}, {"son", "2"}}));
  std::size_t attempts = 0;
  for (const auto& s : e.splits(id)) attempts += s.attempts;
  EXPECT_EQ(attempts, 3u);
}

TEST(MapReduce, AllWorkersDownFails) {
  Store store;
  fill_words(store);
  Engine e(store, FunctionRegistry::with_builtins(), {.workers = 2});
  e.fail_worker(1);
  e.fail_worker(2);
  auto id = e.submit({"words", {}, "word-count", "", "sum", 2});
  try {
    e.await(id);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kJobFailed);
  }
  EXPECT_EQ(e.phase(id), Phase::kFailed);
}

TEST(MapReduce, RandomJobsMatchFoldUnderFailures) {
  sim::Rng rng(11);
  const auto reg = FunctionRegistry::with_builtins();
  for (int round = 0; round < 12; ++round) {
    Store store;
    store.create_table("t", {{"f", false}});
    const std::size_t rows = rng.between(0, 300);
    const char* vocab[] = {"ab", "ba", "aab", "b", "abba"};
    for (std::size_t r = 0; r < rows; ++r) {
      std::string text;
      for (int w = 0, n = static_cast<int>(rng.between(1, 5)); w < n; ++w) text += std::string(vocab[rng.below(5)]) + " ";
      store.put({"t", "row" + std::to_string(r), "f", std::nullopt, "c" + std::to_string(rng.below(3))}, text);
    }
    const JobSpec specs[] = {{"t", {}, "word-count", "", "sum", 1},
                             {"t", {}, "max-ts", "", "max", 1},
                             {"t", {}, "template-match", "ab", "sum", 1}};
    for (JobSpec spec : specs) {
      const Result want = fold(store, reg, spec);
      for (std::size_t m : {1u, 2u, 4u, 8u}) {
        spec.num_splits = m;
        Engine e(store, reg, {.workers = 3, .seed = static_cast<std::uint64_t>(round * 31 + m)});
        for (int f = 0, n = static_cast<int>(rng.between(1, 3)); f < n; ++f) {
          const auto w = static_cast<sim::NodeId>(rng.between(1, 3));
          const auto at = rng.between(0, 12);
          e.loop().schedule_at(at, [&e, w] { e.fail_worker(w); });
          e.loop().schedule_at(at + 4, [&e, w] { e.recover_worker(w); });
        }
        EXPECT_EQ(e.await(e.submit(spec)), want) << spec.map_fn << " M=" << m;
      }
    }
  }
}

TEST(MapReduce, SameSeedSameTrace) {
  Store store;
  fill_words(store);
  auto run = [&] {
    Engine e(store, FunctionRegistry::with_builtins(), {.seed = 9});
    e.loop().schedule_at(1, [&e] { e.fail_worker(1); });
    e.await(e.submit({"words", {}, "word-count", "", "sum", 4}));
    return e.trace().text();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace robostore::mapreduce
