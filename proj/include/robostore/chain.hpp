#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robostore/storage.hpp"

namespace robostore::chain {

// One of ten joint positions, level / 9 in [0, 1].
struct FuzzyState {
  int level = 0;
  double as_real() const { return level / 9.0; }
  friend bool operator==(const FuzzyState&, const FuzzyState&) = default;
};

// Nearest level, ties upward. Throws OutOfRange outside [0, 1].
FuzzyState quantize(double x);

struct InstructionRef {
  std::string body_part;
  std::string id;

  std::string to_string() const;  // "<body_part>/<id>", path-escaped
  static std::optional<InstructionRef> parse(std::string_view text);
  friend auto operator<=>(const InstructionRef&, const InstructionRef&) = default;
  friend bool operator==(const InstructionRef&, const InstructionRef&) = default;
};

struct Instruction {
  InstructionRef ref;
  std::string action;
  FuzzyState target;
  // Empty means "the next list element" when stored; `terminal` stops there.
  std::optional<InstructionRef> next;
  bool terminal = false;
  std::optional<Bytes> branch_key;
  std::optional<InstructionRef> branch_next;
};

struct Step {
  InstructionRef ref;
  std::string action;
  FuzzyState target;
  bool branched = false;
};

// Instructions are cells in table `instructions`, one column family per body
// part, row = instruction id, columns action/state/next/branch_key/
// branch_next. Task heads live in table `chain_tasks`.
class ChainStore {
 public:
  static constexpr std::string_view kInstructionTable = "instructions";
  static constexpr std::string_view kTaskTable = "chain_tasks";

  // Creates both tables when missing. An existing instruction table keeps its
  // families and `body_parts` is ignored.
  ChainStore(Store& store, const std::vector<std::string>& body_parts);

  // Validates every link and rejects cycles before anything is written.
  InstructionRef store_chain(const std::string& task, const std::vector<Instruction>& instructions);
  std::vector<Step> execute(const std::string& task, const std::map<std::string, Bytes>& context) const;

  std::optional<Instruction> load(const InstructionRef& ref) const;
  std::optional<InstructionRef> head(const std::string& task) const;
  std::vector<std::string> tasks() const;
  std::vector<std::string> body_parts() const;

 private:
  Store* store_;
};

}  // namespace robostore::chain
