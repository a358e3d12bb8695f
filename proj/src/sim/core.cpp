#include "robostore/sim/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "robostore/error.hpp"

namespace robostore::sim {

std::uint64_t hash_key(std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : key) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void EventLoop::schedule_at(Tick at, std::function<void()> fn) {
  queue_.push(Event{std::max(at, now_), seq_++, std::move(fn)});
}

bool EventLoop::run_one() {
  if (queue_.empty()) return false;
  Event ev = queue_.top();
  queue_.pop();
  now_ = ev.at;
  ev.fn();
  return true;
}

void EventLoop::run_until(Tick until) {
  while (!queue_.empty() && queue_.top().at <= until) run_one();
  now_ = std::max(now_, until);
}

bool EventLoop::run_until_true(const std::function<bool()>& done, Tick deadline) {
  while (!done()) {
    if (queue_.empty() || queue_.top().at > deadline) {
      now_ = std::max(now_, deadline);
      return done();
    }
    run_one();
  }
  return true;
}

void Trace::add(Tick tick, std::string_view node, std::string_view event) {
  std::string line = "T=" + std::to_string(tick) + " ";
  line += node;
  line += ' ';
  line += event;
  lines_.push_back(std::move(line));
}

std::string Trace::text() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

Network::Network(EventLoop& loop, std::size_t node_count, NetConfig config, std::uint64_t seed)
    : loop_(loop), config_(config), rng_(seed), alive_(node_count, true), group_(node_count, 0) {}

void Network::send(NodeId from, NodeId to, std::function<void()> on_deliver, bool reliable) {
  if (!alive_[from]) return;
  if (from == to) {
    loop_.schedule_after(0, [this, to, fn = std::move(on_deliver)] {
      if (!alive_[to]) return;
      ++delivered_;
      fn();
      if (hook_) hook_(to, delivered_);
    });
    return;
  }
  // Draw both values unconditionally so the random stream does not depend on
  // the partition state.
  const bool drop = rng_.chance(config_.drop_probability);
  const Tick delay = rng_.between(config_.min_delay, config_.max_delay);
  if (!reachable(from, to) || (drop && !reliable)) {
    ++dropped_;
    return;
  }
  loop_.schedule_after(delay, [this, from, to, fn = std::move(on_deliver)] {
    if (!alive_[to] || !reachable(from, to)) {
      ++dropped_;
      return;
    }
    ++delivered_;
    fn();
    if (hook_) hook_(to, delivered_);
  });
}

void Network::partition(const std::vector<std::vector<NodeId>>& groups) {
  std::fill(group_.begin(), group_.end(), groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (NodeId n : groups[g]) {
      if (n >= group_.size()) throw Error(ErrorCode::kInvalidConfig, "partition names unknown node " + std::to_string(n));
      group_[n] = g;
    }
  }
  partitioned_ = true;
}

void Network::heal() {
  std::fill(group_.begin(), group_.end(), 0);
  partitioned_ = false;
}

bool Network::reachable(NodeId a, NodeId b) const { return group_[a] == group_[b]; }

std::vector<Statement> parse_script(std::string_view text) {
  std::vector<Statement> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    Statement st;
    st.line = line_no;
    if (!(words >> st.verb)) continue;
    std::transform(st.verb.begin(), st.verb.end(), st.verb.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (std::string w; words >> w;) st.args.push_back(std::move(w));
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<std::vector<NodeId>> parse_groups(std::string_view spec) {
  std::vector<std::vector<NodeId>> groups(1);
  std::string_view rest = spec;
  while (!rest.empty()) {
    const auto cut = rest.find_first_of(",|");
    const auto token = rest.substr(0, cut);
    NodeId id = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw Error(ErrorCode::kParseError, "bad node id in partition spec: " + std::string(spec));
    }
    groups.back().push_back(id);
    if (cut == std::string_view::npos) break;
    if (rest[cut] == '|') groups.emplace_back();
    rest.remove_prefix(cut + 1);
  }
  return groups;
}

}  // namespace robostore::sim
