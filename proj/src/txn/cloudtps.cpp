#include "robostore/txn/cloudtps.hpp"

#include <algorithm>
#include <sstream>

#include "robostore/error.hpp"

namespace robostore::txn {

namespace {

std::string u128(uint128 v) { return Timestamp(v).to_string(); }

ColumnPath parse_path(const std::string& text) {
  auto p = ColumnPath::parse(text);
  if (!p) throw Error(ErrorCode::kParseError, "bad column path: " + text);
  return *p;
}

}  // namespace

std::string TxnId::to_string() const { return "T" + std::to_string(ltm) + "." + std::to_string(seq); }

std::string_view to_string(TxnState state) {
  switch (state) {
    case TxnState::kActive: return "ACTIVE";
    case TxnState::kPrepared: return "PREPARED";
    case TxnState::kCommitted: return "COMMITTED";
    case TxnState::kAborted: return "ABORTED";
  }
  return "?";
}

void TxnConfig::validate() const {
  if (ltm_count < 1 || ltm_count > 256) throw Error(ErrorCode::kInvalidConfig, "ltm count must be in [1, 256]");
  if (replicas >= ltm_count && replicas != 0) {
    throw Error(ErrorCode::kInvalidConfig, "replicas must be smaller than the ltm count");
  }
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "drop probability must be in [0, 1]");
  }
  if (min_delay < 1 || max_delay < min_delay) throw Error(ErrorCode::kInvalidConfig, "need 1 <= min_delay <= max_delay");
  if (prepare_timeout == 0 || retry_interval == 0 || op_deadline == 0) {
    throw Error(ErrorCode::kInvalidConfig, "timeouts must be positive");
  }
}

TxnCluster::TxnCluster(Store& store, TxnConfig config)
    : store_(&store),
      config_((config.validate(), config)),
      net_(loop_, config.ltm_count, {config.drop_probability, config.min_delay, config.max_delay}, config.seed),
      ltms_(config.ltm_count),
      issued_(config.ltm_count, 0) {
  for (LtmId id = 0; id < config_.ltm_count; ++id) {
    for (LtmId m : group_of(id)) ltms_[m].copies[id];
  }
  loop_.schedule_after(config_.retry_interval, [this] { pump(); });
}

std::vector<LtmId> TxnCluster::group_of(LtmId shard) const {
  std::vector<LtmId> out;
  const std::size_t n = config_.ltm_count;
  for (std::size_t i = 0; i <= config_.replicas && i < n; ++i) out.push_back(static_cast<LtmId>((shard + i) % n));
  return out;
}

bool TxnCluster::member_of(LtmId node, LtmId shard) const {
  const auto g = group_of(shard);
  return std::find(g.begin(), g.end(), node) != g.end();
}

std::optional<LtmId> TxnCluster::acting_for(LtmId shard) const {
  for (LtmId m : group_of(shard)) {
    if (ltms_[m].alive && ltms_[m].copies.contains(shard)) return m;
  }
  return std::nullopt;
}

TxnCluster::ShardState* TxnCluster::copy_on(LtmId node, LtmId shard) {
  if (!ltms_[node].alive) return nullptr;
  auto it = ltms_[node].copies.find(shard);
  return it == ltms_[node].copies.end() ? nullptr : &it->second;
}

const TxnCluster::ShardState* TxnCluster::copy_on(LtmId node, LtmId shard) const {
  if (!ltms_[node].alive) return nullptr;
  auto it = ltms_[node].copies.find(shard);
  return it == ltms_[node].copies.end() ? nullptr : &it->second;
}

void TxnCluster::replicate(LtmId from, LtmId shard) {
  const ShardState& src = ltms_[from].copies.at(shard);
  for (LtmId m : group_of(shard)) {
    if (m != from && ltms_[m].alive) ltms_[m].copies[shard] = src;
  }
}

LtmId TxnCluster::owner_of(const ColumnPath& path) const {
  return static_cast<LtmId>(sim::hash_key(path.to_string()) % config_.ltm_count);
}

bool TxnCluster::ltm_alive(LtmId id) const {
  if (id >= ltms_.size()) throw Error(ErrorCode::kOutOfRange, "no ltm " + std::to_string(id));
  return ltms_[id].alive;
}

TxnCluster::CoordRecord& TxnCluster::client_record(const TxnId& txn, LtmId& node) {
  if (txn.ltm >= config_.ltm_count) throw Error(ErrorCode::kUnknownTxn, txn.to_string());
  auto a = acting_for(txn.ltm);
  if (!a) throw Error(ErrorCode::kLtmDown, "no live copy of " + label(txn.ltm));
  auto& coord = ltms_[*a].copies.at(txn.ltm).coord;
  auto it = coord.find(txn);
  if (it == coord.end()) throw Error(ErrorCode::kUnknownTxn, txn.to_string());
  node = *a;
  return it->second;
}

const TxnCluster::CoordRecord* TxnCluster::find_record(const TxnId& txn) const {
  if (txn.ltm >= config_.ltm_count) return nullptr;
  auto a = acting_for(txn.ltm);
  if (!a) return nullptr;
  const auto& coord = ltms_[*a].copies.at(txn.ltm).coord;
  auto it = coord.find(txn);
  return it == coord.end() ? nullptr : &it->second;
}

TxnId TxnCluster::begin(LtmId coordinator) {
  if (coordinator >= config_.ltm_count) throw Error(ErrorCode::kOutOfRange, "no ltm " + std::to_string(coordinator));
  ShardState* s = copy_on(coordinator, coordinator);
  if (s == nullptr) throw Error(ErrorCode::kLtmDown, label(coordinator) + " is down");
  TxnId id{coordinator, s->next_seq++};
  issued_[coordinator] = id.seq;
  s->coord[id].id = id;
  replicate(coordinator, coordinator);
  trace_.add(loop_.now(), label(coordinator), "BEGIN " + id.to_string());
  return id;
}

std::optional<Cell> TxnCluster::t_read(const TxnId& txn, const ColumnPath& path) {
  LtmId node = 0;
  CoordRecord& rec = client_record(txn, node);
  if (rec.state != TxnState::kActive) throw Error(ErrorCode::kTxnNotActive, txn.to_string());
  const std::string key = path.to_string();
  std::optional<Cell> result;
  if (auto w = rec.writes.find(key); w != rec.writes.end()) {
    result = Cell{w->second, Timestamp{}, false};
    trace_.add(loop_.now(), label(node), "READ " + txn.to_string() + " " + key + " -> " + escape_component(w->second) +
                                             " own-write");
    return result;
  }
  const auto head = store_->head(path);
  result = store_->get_latest(path);
  rec.reads.try_emplace(key, ReadEntry{head ? head->ts : Timestamp{}, result});
  replicate(node, txn.ltm);
  trace_.add(loop_.now(), label(node),
             "READ " + txn.to_string() + " " + key + " -> " +
                 (result ? escape_component(result->value) + " ts=" + result->ts.to_string() : std::string("ABSENT")));
  return result;
}

void TxnCluster::t_write(const TxnId& txn, const ColumnPath& path, Bytes value) {
  LtmId node = 0;
  CoordRecord& rec = client_record(txn, node);
  if (rec.state != TxnState::kActive) throw Error(ErrorCode::kTxnNotActive, txn.to_string());
  auto schema = store_->schema(path.table);
  if (!schema) throw Error(ErrorCode::kUnknownTable, path.table);
  const FamilySpec* fam = schema->find_family(path.family);
  if (fam == nullptr || fam->is_super != path.super_key.has_value()) {
    throw Error(ErrorCode::kUnknownFamily, path.table + "/" + path.family);
  }
  const std::string key = path.to_string();
  trace_.add(loop_.now(), label(node), "WRITE " + txn.to_string() + " " + key + " " + escape_component(value));
  rec.writes[key] = std::move(value);
  replicate(node, txn.ltm);
}

void TxnCluster::commit_async(const TxnId& txn) {
  LtmId node = 0;
  CoordRecord& rec = client_record(txn, node);
  if (rec.state != TxnState::kActive) throw Error(ErrorCode::kTxnNotActive, txn.to_string());

  std::map<LtmId, PrepareMsg> msgs;
  for (const auto& [path, entry] : rec.reads) {
    auto& m = msgs[owner_of(parse_path(path))];
    m.reads[path] = entry.snapshot;
  }
  for (const auto& [path, value] : rec.writes) msgs[owner_of(parse_path(path))].writes[path] = value;

  rec.state = TxnState::kPrepared;
  rec.prepare_started = loop_.now();
  std::string names;
  for (auto& [p, m] : msgs) {
    rec.participants.insert(p);
    m.id = txn;
    names += (names.empty() ? "" : ",") + label(p);
  }
  trace_.add(loop_.now(), label(node), "COMMIT-REQUEST " + txn.to_string() + " participants=" +
                                           (names.empty() ? std::string("-") : names));
  if (msgs.empty()) {
    decide(node, rec, true, "empty");
    return;
  }
  replicate(node, txn.ltm);
  for (auto& [p, m] : msgs) {
    send(txn.ltm, p, [this, p, m = std::move(m)](LtmId to) { on_prepare(to, p, m); });
  }
}

void TxnCluster::send(LtmId from_shard, LtmId to_shard, std::function<void(LtmId)> handler) {
  auto from = acting_for(from_shard);
  auto to = acting_for(to_shard);
  if (!from || !to) return;
  const LtmId dst = *to;
  net_.send(*from, dst, [dst, h = std::move(handler)] { h(dst); });
}

void TxnCluster::on_prepare(LtmId node, LtmId shard, const PrepareMsg& msg) {
  ShardState* s = copy_on(node, shard);
  if (s == nullptr) return;
  const std::string tag = msg.id.to_string();

  auto report_for = [&](const std::vector<std::string>& items) {
    uint128 r = 0;
    for (const auto& item : items) {
      if (auto h = store_->head(parse_path(item))) r = std::max(r, h->ts.value());
      if (auto it = s->read_ts.find(item); it != s->read_ts.end()) r = std::max(r, it->second);
    }
    return r;
  };
  auto vote = [&](bool yes, uint128 reported, std::string_view why) {
    trace_.add(loop_.now(), label(node),
               "VOTE " + tag + (yes ? " YES" : " NO") + (why.empty() ? "" : " " + std::string(why)));
    const TxnId id = msg.id;
    send(shard, id.ltm, [this, id, shard, yes, reported](LtmId to) { on_vote(to, id, shard, yes, reported); });
  };

  trace_.add(loop_.now(), label(node), "PREPARE " + tag);
  if (auto it = s->part.find(msg.id); it != s->part.end()) {
    const bool yes = it->second.state != TxnState::kAborted;
    vote(yes, yes ? report_for(it->second.items) : 0, yes ? "" : "already-aborted");
    return;
  }

  PartRecord rec;
  rec.coordinator = msg.id.ltm;
  rec.writes = msg.writes;
  for (const auto& [path, _] : msg.reads) {
    rec.items.push_back(path);
    rec.reads.push_back(path);
  }
  for (const auto& [path, _] : msg.writes) {
    if (!msg.reads.contains(path)) rec.items.push_back(path);
  }

  std::string why;
  for (const auto& item : rec.items) {
    auto lock = s->locks.find(item);
    if (lock != s->locks.end() && lock->second != msg.id) {
      why = "locked-by=" + lock->second.to_string();
      break;
    }
  }
  if (why.empty()) {
    for (const auto& [path, snapshot] : msg.reads) {
      const auto head = store_->head(parse_path(path));
      if ((head ? head->ts : Timestamp{}) != snapshot) {
        why = "stale-read=" + path;
        break;
      }
    }
  }
  if (!why.empty()) {
    rec.state = TxnState::kAborted;
    s->part[msg.id] = std::move(rec);
    replicate(node, shard);
    vote(false, 0, why);
    return;
  }
  for (const auto& item : rec.items) s->locks[item] = msg.id;
  const uint128 reported = report_for(rec.items);
  s->part[msg.id] = std::move(rec);
  replicate(node, shard);
  vote(true, reported, "");
}

void TxnCluster::on_vote(LtmId node, const TxnId& txn, LtmId from, bool yes, uint128 reported) {
  ShardState* s = copy_on(node, txn.ltm);
  if (s == nullptr) return;
  auto it = s->coord.find(txn);
  if (it == s->coord.end() || it->second.state != TxnState::kPrepared) return;
  CoordRecord& rec = it->second;
  if (!yes) {
    decide(node, rec, false, "vote");
    return;
  }
  rec.yes.insert(from);
  rec.max_reported = std::max(rec.max_reported, reported);
  if (rec.yes == rec.participants) {
    decide(node, rec, true, "votes");
  } else {
    replicate(node, txn.ltm);
  }
}

void TxnCluster::decide(LtmId node, CoordRecord& rec, bool commit, std::string_view why) {
  ShardState& s = ltms_[node].copies.at(rec.id.ltm);
  std::string event = "DECIDE " + rec.id.to_string();
  if (commit) {
    const uint128 logical = std::max({static_cast<uint128>(loop_.now()) * 1000, s.last_logical + 1,
                                      (rec.max_reported >> 8) + 1});
    s.last_logical = logical;
    rec.commit_ts = Timestamp((logical << 8) | rec.id.ltm);
    rec.state = TxnState::kCommitted;
    event += " COMMIT ts=" + rec.commit_ts.to_string();

    CommitRecord h{rec.id, rec.commit_ts, loop_.now(), std::nullopt, {}, rec.writes};
    for (const auto& [path, entry] : rec.reads) h.reads[path] = entry.seen;
    history_index_[rec.id] = history_.size();
    history_.push_back(std::move(h));
  } else {
    rec.state = TxnState::kAborted;
    event += " ABORT " + std::string(why);
  }
  decisions_.push_back({rec.id, commit, loop_.now(), std::nullopt});
  rec.complete = rec.participants.empty();
  if (rec.complete && commit) history_[history_index_.at(rec.id)].completed_at = loop_.now();
  replicate(node, rec.id.ltm);
  trace_.add(loop_.now(), label(node), event);
  for (LtmId p : rec.participants) send_decision(rec.id.ltm, rec, p);
}

void TxnCluster::send_decision(LtmId shard, const CoordRecord& rec, LtmId participant) {
  const TxnId id = rec.id;
  const bool commit = rec.state == TxnState::kCommitted;
  const Timestamp ts = rec.commit_ts;
  send(shard, participant,
       [this, participant, id, commit, ts](LtmId to) { on_decision(to, participant, id, commit, ts); });
}

void TxnCluster::on_decision(LtmId node, LtmId shard, const TxnId& txn, bool commit, Timestamp ts) {
  ShardState* s = copy_on(node, shard);
  if (s == nullptr) return;
  auto [it, fresh] = s->part.try_emplace(txn);
  PartRecord& rec = it->second;
  if (fresh) {
    rec.coordinator = txn.ltm;
    rec.state = TxnState::kAborted;
  }
  auto release = [&] {
    for (const auto& item : rec.items) {
      auto lock = s->locks.find(item);
      if (lock != s->locks.end() && lock->second == txn) s->locks.erase(lock);
    }
  };

  if (rec.state == TxnState::kPrepared) {
    if (commit) {
      for (const auto& [path, value] : rec.writes) store_->put(parse_path(path), value, ts);
      for (const auto& item : rec.reads) {
        auto& r = s->read_ts[item];
        r = std::max(r, ts.value());
      }
      rec.state = TxnState::kCommitted;
    } else {
      rec.state = TxnState::kAborted;
    }
    release();
    decisions_.push_back({txn, commit, loop_.now(), shard});
    trace_.add(loop_.now(), label(node), "APPLY " + txn.to_string() + (commit ? " COMMIT" : " ABORT"));
  } else if (fresh) {
    decisions_.push_back({txn, commit, loop_.now(), shard});
    trace_.add(loop_.now(), label(node), "APPLY " + txn.to_string() + " ABORT unprepared");
  }
  replicate(node, shard);
  send(shard, txn.ltm, [this, txn, shard](LtmId to) { on_ack(to, txn, shard); });
}

void TxnCluster::on_ack(LtmId node, const TxnId& txn, LtmId from) {
  ShardState* s = copy_on(node, txn.ltm);
  if (s == nullptr) return;
  auto it = s->coord.find(txn);
  if (it == s->coord.end()) return;
  CoordRecord& rec = it->second;
  if (rec.complete || (rec.state != TxnState::kCommitted && rec.state != TxnState::kAborted)) return;
  rec.acked.insert(from);
  if (std::includes(rec.acked.begin(), rec.acked.end(), rec.participants.begin(), rec.participants.end())) {
    rec.complete = true;
    if (rec.state == TxnState::kCommitted) history_[history_index_.at(txn)].completed_at = loop_.now();
    trace_.add(loop_.now(), label(node), "DONE " + txn.to_string());
  }
  replicate(node, txn.ltm);
}

void TxnCluster::pump() {
  for (LtmId shard = 0; shard < config_.ltm_count; ++shard) {
    auto a = acting_for(shard);
    if (!a) continue;
    ShardState& s = ltms_[*a].copies.at(shard);
    for (auto& [id, rec] : s.coord) {
      if (rec.state == TxnState::kPrepared) {
        if (loop_.now() - rec.prepare_started >= config_.prepare_timeout) decide(*a, rec, false, "timeout");
      } else if (!rec.complete && rec.state != TxnState::kActive) {
        for (LtmId p : rec.participants) {
          if (!rec.acked.contains(p)) send_decision(shard, rec, p);
        }
      }
    }
  }
  loop_.schedule_after(config_.retry_interval, [this] { pump(); });
}

TxnState TxnCluster::commit(const TxnId& txn) {
  commit_async(txn);
  await(txn, loop_.now() + config_.op_deadline);
  return state(txn);
}

bool TxnCluster::await(const TxnId& txn, Tick deadline) {
  return loop_.run_until_true(
      [&] {
        const CoordRecord* rec = find_record(txn);
        return rec != nullptr && rec->complete;
      },
      deadline);
}

TxnState TxnCluster::state(const TxnId& txn) const {
  if (txn.ltm >= config_.ltm_count) throw Error(ErrorCode::kUnknownTxn, txn.to_string());
  if (!acting_for(txn.ltm)) throw Error(ErrorCode::kLtmDown, "no live copy of " + label(txn.ltm));
  const CoordRecord* rec = find_record(txn);
  if (rec == nullptr) throw Error(ErrorCode::kUnknownTxn, txn.to_string());
  return rec->state;
}

std::optional<Cell> TxnCluster::consistent_read(const ColumnPath& path) const { return store_->get_latest(path); }

void TxnCluster::crash_ltm(LtmId id) {
  if (!ltm_alive(id)) return;
  ltms_[id].alive = false;
  ltms_[id].copies.clear();
  net_.set_alive(id, false);
  trace_.add(loop_.now(), label(id), "CRASH");
}

void TxnCluster::recover_ltm(LtmId id) {
  if (ltm_alive(id)) return;
  std::string lost;
  for (LtmId shard = 0; shard < config_.ltm_count; ++shard) {
    if (!member_of(id, shard)) continue;
    if (auto src = acting_for(shard)) {
      ltms_[id].copies[shard] = ltms_[*src].copies.at(shard);
    } else {
      // Every copy is gone; only the id counter survives.
      ltms_[id].copies[shard].next_seq = issued_[shard] + 1;
      lost += " lost=" + label(shard);
    }
  }
  ltms_[id].alive = true;
  net_.set_alive(id, true);
  trace_.add(loop_.now(), label(id), "RECOVER" + lost);
}

void TxnCluster::partition(const std::vector<std::vector<LtmId>>& groups) {
  net_.partition(groups);
  std::string spec;
  for (const auto& g : groups) {
    if (!spec.empty()) spec += '|';
    for (std::size_t i = 0; i < g.size(); ++i) spec += (i ? "," : "") + std::to_string(g[i]);
  }
  trace_.add(loop_.now(), "sim", "PARTITION " + spec);
}

void TxnCluster::heal() {
  net_.heal();
  trace_.add(loop_.now(), "sim", "HEAL");
}

void TxnCluster::tick(Tick n) { loop_.run_until(loop_.now() + n); }

bool TxnCluster::all_complete() const {
  for (LtmId shard = 0; shard < config_.ltm_count; ++shard) {
    auto a = acting_for(shard);
    if (!a) continue;
    for (const auto& [_, rec] : ltms_[*a].copies.at(shard).coord) {
      if (rec.state != TxnState::kActive && !rec.complete) return false;
    }
  }
  return true;
}

bool TxnCluster::quiesce(Tick deadline) {
  return loop_.run_until_true([this] { return all_complete(); }, deadline);
}

std::optional<std::string> TxnCluster::shard_digest(LtmId holder, LtmId shard) const {
  const ShardState* s = copy_on(holder, shard);
  if (s == nullptr) return std::nullopt;
  std::ostringstream out;
  out << "seq=" << s->next_seq << " logical=" << u128(s->last_logical) << '\n';
  for (const auto& [id, r] : s->coord) {
    out << "coord " << id.to_string() << ' ' << to_string(r.state) << " ts=" << r.commit_ts.to_string()
        << " complete=" << r.complete << " started=" << r.prepare_started << " max=" << u128(r.max_reported);
    for (const auto& [p, e] : r.reads) out << " r:" << p << '@' << e.snapshot.to_string();
    for (const auto& [p, v] : r.writes) out << " w:" << p << '=' << escape_component(v);
    for (LtmId p : r.participants) out << " p:" << p;
    for (LtmId p : r.yes) out << " y:" << p;
    for (LtmId p : r.acked) out << " a:" << p;
    out << '\n';
  }
  for (const auto& [id, r] : s->part) {
    out << "part " << id.to_string() << ' ' << to_string(r.state);
    for (const auto& i : r.items) out << " i:" << i;
    out << '\n';
  }
  for (const auto& [item, id] : s->locks) out << "lock " << item << ' ' << id.to_string() << '\n';
  for (const auto& [item, ts] : s->read_ts) out << "rts " << item << ' ' << u128(ts) << '\n';
  return out.str();
}

}  // namespace robostore::txn
