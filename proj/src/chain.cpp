#include "robostore/chain.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "robostore/error.hpp"

namespace robostore::chain {

namespace {

const std::string kInstr{ChainStore::kInstructionTable};
const std::string kTasks{ChainStore::kTaskTable};

ColumnPath cell(const InstructionRef& ref, const char* column) {
  return {kInstr, ref.id, ref.body_part, std::nullopt, column};
}

ColumnPath head_cell(const std::string& task) { return {kTasks, task, "head", std::nullopt, "id"}; }

}  // namespace

FuzzyState quantize(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::kOutOfRange, "fuzzy input must be in [0, 1]");
  return FuzzyState{static_cast<int>(std::floor(x * 9.0 + 0.5))};
}

std::string InstructionRef::to_string() const { return escape_component(body_part) + "/" + escape_component(id); }

std::optional<InstructionRef> InstructionRef::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos || text.find('/', slash + 1) != std::string_view::npos) return std::nullopt;
  auto part = unescape_component(text.substr(0, slash));
  auto id = unescape_component(text.substr(slash + 1));
  if (!part || !id || part->empty() || id->empty()) return std::nullopt;
  return InstructionRef{*part, *id};
}

ChainStore::ChainStore(Store& store, const std::vector<std::string>& body_parts) : store_(&store) {
  if (!store.has_table(kInstr)) {
    if (body_parts.empty()) throw Error(ErrorCode::kEmptyFamilyList, "need at least one body part");
    std::vector<FamilySpec> fams;
    for (const auto& p : body_parts) fams.push_back({p, false});
    store.create_table(kInstr, fams);
  }
  if (!store.has_table(kTasks)) store.create_table(kTasks, {{"head", false}});
}

std::vector<std::string> ChainStore::body_parts() const {
  std::vector<std::string> out;
  for (const auto& f : store_->schema(kInstr)->families) out.push_back(f.name);
  return out;
}

std::optional<Instruction> ChainStore::load(const InstructionRef& ref) const {
  const auto schema = store_->schema(kInstr);
  if (schema->find_family(ref.body_part) == nullptr) return std::nullopt;
  auto action = store_->get_latest(cell(ref, "action"));
  if (!action) return std::nullopt;
  Instruction in;
  in.ref = ref;
  in.action = action->value;
  if (auto s = store_->get_latest(cell(ref, "state"))) {
    in.target.level = s->value.size() == 1 && s->value[0] >= '0' && s->value[0] <= '9' ? s->value[0] - '0' : 0;
  }
  if (auto n = store_->get_latest(cell(ref, "next")); n && !n->value.empty()) in.next = InstructionRef::parse(n->value);
  in.terminal = !in.next;
  if (auto k = store_->get_latest(cell(ref, "branch_key"))) in.branch_key = k->value;
  if (auto b = store_->get_latest(cell(ref, "branch_next")); b && !b->value.empty()) {
    in.branch_next = InstructionRef::parse(b->value);
  }
  return in;
}

std::optional<InstructionRef> ChainStore::head(const std::string& task) const {
  auto c = store_->get_latest(head_cell(task));
  if (!c) return std::nullopt;
  return InstructionRef::parse(c->value);
}

std::vector<std::string> ChainStore::tasks() const {
  std::vector<std::string> out;
  for (const auto& row : store_->scan(kTasks, {})) out.push_back(row.row_key);
  return out;
}

InstructionRef ChainStore::store_chain(const std::string& task, const std::vector<Instruction>& instructions) {
  if (instructions.empty()) throw Error(ErrorCode::kEmptyChain, task);
  const auto schema = store_->schema(kInstr);

  // Resolve implicit links and build the post-write view of every touched
  // instruction.
  std::map<InstructionRef, Instruction> fresh;
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    Instruction in = instructions[i];
    if (schema->find_family(in.ref.body_part) == nullptr) {
      throw Error(ErrorCode::kUnknownFamily, "no body part " + in.ref.body_part);
    }
    if (in.ref.id.empty()) throw Error(ErrorCode::kInvalidConfig, "instruction ids must be non-empty");
    if (in.target.level < 0 || in.target.level > 9) throw Error(ErrorCode::kOutOfRange, "fuzzy level out of range");
    if (in.branch_key.has_value() != in.branch_next.has_value()) {
      throw Error(ErrorCode::kInvalidConfig, in.ref.to_string() + ": branch key and branch target go together");
    }
    if (!in.next && !in.terminal && i + 1 < instructions.size()) in.next = instructions[i + 1].ref;
    in.terminal = !in.next;
    if (!fresh.emplace(in.ref, in).second) {
      throw Error(ErrorCode::kInvalidConfig, "instruction " + in.ref.to_string() + " listed twice");
    }
  }
  auto lookup = [&](const InstructionRef& r) -> std::optional<Instruction> {
    if (auto it = fresh.find(r); it != fresh.end()) return it->second;
    return load(r);
  };
  for (const auto& [ref, in] : fresh) {
    for (const auto& link : {in.next, in.branch_next}) {
      if (link && !lookup(*link)) {
        throw Error(ErrorCode::kDanglingLink, ref.to_string() + " -> " + link->to_string());
      }
    }
  }

  // Depth-first over the merged view, from the new instructions and from
  // every existing task head (an overwrite could close a loop elsewhere).
  std::map<InstructionRef, int> color;  // 1 = on stack, 2 = done
  std::function<void(const InstructionRef&)> visit = [&](const InstructionRef& r) {
    auto& c = color[r];
    if (c == 2) return;
    if (c == 1) throw Error(ErrorCode::kCycleDetected, "cycle through " + r.to_string());
    c = 1;
    if (auto in = lookup(r)) {
      if (in->next) visit(*in->next);
      if (in->branch_next) visit(*in->branch_next);
    }
    color[r] = 2;
  };
  for (const auto& [ref, _] : fresh) visit(ref);
  for (const auto& t : tasks()) {
    if (auto h = head(t)) visit(*h);
  }

  for (const auto& [ref, in] : fresh) {
    store_->put(cell(ref, "action"), in.action);
    store_->put(cell(ref, "state"), std::to_string(in.target.level));
    store_->put(cell(ref, "next"), in.next ? in.next->to_string() : "");
    if (in.branch_key) {
      store_->put(cell(ref, "branch_key"), *in.branch_key);
      store_->put(cell(ref, "branch_next"), in.branch_next->to_string());
    } else {
      if (store_->get_latest(cell(ref, "branch_key"))) store_->erase(cell(ref, "branch_key"));
      if (store_->get_latest(cell(ref, "branch_next"))) store_->erase(cell(ref, "branch_next"));
    }
  }
  const InstructionRef h = instructions.front().ref;
  store_->put(head_cell(task), h.to_string());
  return h;
}

std::vector<Step> ChainStore::execute(const std::string& task, const std::map<std::string, Bytes>& context) const {
  auto h = head(task);
  if (!h) throw Error(ErrorCode::kUnknownTask, task);
  std::set<Bytes> values;
  for (const auto& [_, v] : context) values.insert(v);

  std::vector<Step> trace;
  std::set<InstructionRef> seen;
  std::optional<InstructionRef> at = *h;
  while (at) {
    auto in = load(*at);
    if (!in) throw Error(ErrorCode::kBrokenLink, at->to_string());
    if (!seen.insert(*at).second) throw Error(ErrorCode::kCycleDetected, at->to_string());
    const bool branch = in->branch_key && values.contains(*in->branch_key);
    trace.push_back({in->ref, in->action, in->target, branch});
    at = branch ? in->branch_next : in->next;
  }
  return trace;
}

}  // namespace robostore::chain
