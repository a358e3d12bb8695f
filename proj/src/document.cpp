#include "robostore/document.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "robostore/error.hpp"

namespace robostore {

namespace {

constexpr std::string_view kTimeStampKey = "Time stamp";

// Minimal ordered JSON tree. Numbers keep their source text so 128-bit
// timestamps survive intact.
struct Node {
  enum class Kind { kObject, kArray, kString, kNumber, kBool, kNull } kind = Kind::kNull;
  std::string text;  // string contents or number digits
  bool boolean = false;
  std::vector<std::pair<std::string, Node>> members;
  std::vector<Node> items;

  const Node* get(std::string_view key) const {
    for (const auto& [k, v] : members) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kParseError, what); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Node parse_document() {
    Node root = parse_value(0);
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters at offset " + std::to_string(pos_));
    return root;
  }

 private:
  static constexpr int kMaxDepth = 64;

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\t' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  char peek() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "' at offset " + std::to_string(pos_));
    ++pos_;
  }

  Node parse_value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    const char c = peek();
    if (c == '{') return parse_object(depth);
    if (c == '[') return parse_array(depth);
    if (c == '"') {
      Node n;
      n.kind = Node::Kind::kString;
      n.text = parse_string();
      return n;
    }
    if (c >= '0' && c <= '9') {
      Node n;
      n.kind = Node::Kind::kNumber;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') n.text.push_back(text_[pos_++]);
      return n;
    }
    if (text_.substr(pos_, 4) == "true" || text_.substr(pos_, 5) == "false") {
      Node n;
      n.kind = Node::Kind::kBool;
      n.boolean = text_[pos_] == 't';
      pos_ += n.boolean ? 4 : 5;
      return n;
    }
    if (text_.substr(pos_, 4) == "null") {
      pos_ += 4;
      return Node{};
    }
    fail("unexpected character at offset " + std::to_string(pos_));
  }

  Node parse_object(int depth) {
    Node n;
    n.kind = Node::Kind::kObject;
    expect('{');
    if (peek() == '}') {
      ++pos_;
      return n;
    }
    std::set<std::string> keys;
    while (true) {
      if (peek() != '"') fail("expected object key at offset " + std::to_string(pos_));
      std::string key = parse_string();
      if (!keys.insert(key).second) fail("duplicate key \"" + key + "\"");
      expect(':');
      n.members.emplace_back(std::move(key), parse_value(depth + 1));
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return n;
    }
  }

  Node parse_array(int depth) {
    Node n;
    n.kind = Node::Kind::kArray;
    expect('[');
    if (peek() == ']') {
      ++pos_;
      return n;
    }
    while (true) {
      n.items.push_back(parse_value(depth + 1));
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      return n;
    }
  }

  static void append_code_point(std::string& out, std::uint32_t cp) {
    // Code points up to 0xFF stand for single raw bytes.
    if (cp <= 0xFF) {
      out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= text_.size()) fail("unterminated escape");
      const char e = text_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case '/': out.push_back('/'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'u': {
          if (pos_ + 4 > text_.size()) fail("short \\u escape");
          std::uint32_t cp = 0;
          for (int i = 0; i < 4; ++i) {
            const char h = text_[pos_++];
            cp <<= 4;
            if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
            else fail("bad hex digit in \\u escape");
          }
          append_code_point(out, cp);
          break;
        }
        default: fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void open(char brace) {
    out_.push_back(brace);
    first_.push_back(true);
  }

  void close(char brace) {
    const bool empty = first_.back();
    first_.pop_back();
    if (!empty) {
      out_.push_back('\n');
      indent();
    }
    out_.push_back(brace);
  }

  void key(std::string_view k) {
    item();
    out_ += quote_bytes(k);
    out_ += ": ";
  }

  // Starts an array element or object member on its own line.
  void item() {
    if (!first_.back()) out_.push_back(',');
    first_.back() = false;
    out_.push_back('\n');
    indent();
  }

  void raw(std::string_view text) { out_ += text; }
  std::string take() { return std::move(out_); }

 private:
  void indent() { out_.append(first_.size() * 2, ' '); }

  std::string out_;
  std::vector<bool> first_;
};

std::string version_line(const Cell& cell) {
  std::string line = "{";
  if (cell.tombstone) {
    line += "\"tombstone\": true";
  } else {
    line += "\"value\": " + quote_bytes(cell.value);
  }
  line += ", \"Time stamp\": " + cell.ts.to_string() + "}";
  return line;
}

Timestamp parse_ts(const Node* node, const std::string& where) {
  if (node == nullptr || node->kind != Node::Kind::kNumber) fail("missing numeric \"Time stamp\" in " + where);
  auto ts = Timestamp::parse(node->text);
  if (!ts || !ts->is_set()) fail("invalid timestamp \"" + node->text + "\" in " + where);
  return *ts;
}

const std::string& expect_string(const Node* node, const std::string& where) {
  if (node == nullptr || node->kind != Node::Kind::kString) fail("expected string for " + where);
  return node->text;
}

void load_versions(const Node& list, const ColumnPath& path, Store& store) {
  const std::string where = path.to_string();
  if (list.kind != Node::Kind::kArray) fail("version list must be an array at " + where);
  for (const Node& v : list.items) {
    if (v.kind != Node::Kind::kObject) fail("version must be an object at " + where);
    Cell cell;
    cell.ts = parse_ts(v.get(kTimeStampKey), where);
    if (const Node* tomb = v.get("tombstone")) {
      if (tomb->kind != Node::Kind::kBool) fail("tombstone must be boolean at " + where);
      cell.tombstone = tomb->boolean;
    }
    if (!cell.tombstone) cell.value = expect_string(v.get("value"), "value at " + where);
    store.insert_version(path, std::move(cell));
  }
}

void load_table(const std::string& name, const Node& body, Database& db) {
  if (body.kind != Node::Kind::kObject) fail("table \"" + name + "\" must be an object");
  const Node* fams = body.get("column families");
  if (fams == nullptr || fams->kind != Node::Kind::kObject) fail("table \"" + name + "\" lacks column families");
  std::vector<FamilySpec> families;
  for (const auto& [fname, kind] : fams->members) {
    const std::string& k = expect_string(&kind, "family kind");
    if (k != "super" && k != "standard") fail("family kind must be super or standard: " + k);
    families.push_back({fname, k == "super"});
  }
  db.store.create_table(name, families);

  if (const Node* rows = body.get("rows")) {
    if (rows->kind != Node::Kind::kObject) fail("rows must be an object");
    for (const auto& [row_key, row] : rows->members) {
      if (row.kind != Node::Kind::kObject) fail("row must be an object");
      for (const auto& [family, content] : row.members) {
        const auto spec = std::find_if(families.begin(), families.end(),
                                        [&](const FamilySpec& f) { return f.name == family; });
        if (spec == families.end()) throw Error(ErrorCode::kUnknownFamily, name + "/" + family);
        if (content.kind != Node::Kind::kObject) fail("family content must be an object");
        if (spec->is_super) {
          for (const auto& [super_key, columns] : content.members) {
            if (columns.kind != Node::Kind::kObject) fail("super column must be an object");
            for (const auto& [column, list] : columns.members) {
              load_versions(list, ColumnPath{name, row_key, family, super_key, column}, db.store);
            }
          }
        } else {
          for (const auto& [column, list] : content.members) {
            load_versions(list, ColumnPath{name, row_key, family, std::nullopt, column}, db.store);
          }
        }
      }
    }
  }

  if (const Node* index = body.get("timestamp index")) {
    if (index->kind != Node::Kind::kObject) fail("timestamp index must be an object");
    for (const auto& [block_name, block] : index->members) {
      if (block.kind != Node::Kind::kObject) fail("index block must be an object");
      IndexOwner owner{name, expect_string(block.get("row"), block_name + " row"),
                       expect_string(block.get("family"), block_name + " family")};
      for (const auto& [label, entry] : block.members) {
        if (label == "row" || label == "family") continue;
        if (entry.kind != Node::Kind::kObject) fail("index entry must be an object");
        const Timestamp ts = parse_ts(entry.get(kTimeStampKey), block_name + "/" + label);
        IndexTarget target;
        if (const Node* value = entry.get("Value")) {
          target = expect_string(value, "index Value");
        } else {
          auto path = ColumnPath::parse(expect_string(entry.get("Path"), "index Path"));
          if (!path) fail("bad index Path in " + block_name);
          target = *path;
        }
        db.index.record(owner, label, ts, std::move(target));
      }
    }
  }
}

}  // namespace

std::string quote_bytes(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "\"";
  for (char ch : bytes) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '"': out += "\\\""; continue;
      case '\\': out += "\\\\"; continue;
      case '\n': out += "\\n"; continue;
      case '\t': out += "\\t"; continue;
      case '\r': out += "\\r"; continue;
      default: break;
    }
    if (c < 0x20 || c >= 0x7f) {
      out += "\\u00";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  out += '"';
  return out;
}

std::string dump_document(const Database& db) {
  Writer w;
  w.open('{');
  for (const auto& table : db.store.table_names()) {
    const TableSchema schema = *db.store.schema(table);
    w.key(table);
    w.open('{');

    w.key("column families");
    w.open('{');
    for (const auto& f : schema.families) {
      w.key(f.name);
      w.raw(f.is_super ? "\"super\"" : "\"standard\"");
    }
    w.close('}');

    w.key("rows");
    w.open('{');
    // for_each_column visits columns grouped by row, family, super key.
    std::optional<ColumnPath> prev;
    db.store.for_each_column(table, [&](const ColumnPath& path, std::span<const Cell> versions) {
      const bool new_row = !prev || prev->row_key != path.row_key;
      const bool new_family = new_row || prev->family != path.family;
      const bool new_super = new_family || prev->super_key != path.super_key;
      if (prev) {
        w.close(']');
        if (new_super && prev->super_key) w.close('}');
        if (new_family) w.close('}');
        if (new_row) w.close('}');
      }
      if (new_row) {
        w.key(path.row_key);
        w.open('{');
      }
      if (new_family) {
        w.key(path.family);
        w.open('{');
      }
      if (new_super && path.super_key) {
        w.key(*path.super_key);
        w.open('{');
      }
      w.key(path.column);
      w.open('[');
      for (const Cell& c : versions) {
        w.item();
        w.raw(version_line(c));
      }
      prev = path;
    });
    if (prev) {
      w.close(']');
      if (prev->super_key) w.close('}');
      w.close('}');
      w.close('}');
    }
    w.close('}');

    std::vector<const TimestampIndex*> indexes;
    for (const auto* idx : db.index.all()) {
      if (idx->owner().table == table) indexes.push_back(idx);
    }
    if (!indexes.empty()) {
      w.key("timestamp index");
      w.open('{');
      std::size_t n = 0;
      for (const auto* idx : indexes) {
        w.key("Timestamp super " + std::to_string(++n));
        w.open('{');
        w.key("row");
        w.raw(quote_bytes(idx->owner().row_key));
        w.key("family");
        w.raw(quote_bytes(idx->owner().family));
        for (const auto& e : idx->entries()) {
          w.key(e.label);
          std::string line = "{\"Time stamp\": " + e.ts.to_string();
          if (const auto* value = std::get_if<Bytes>(&e.target)) {
            line += ", \"Value\": " + quote_bytes(*value);
          } else {
            line += ", \"Path\": " + quote_bytes(std::get<ColumnPath>(e.target).to_string());
          }
          w.raw(line + "}");
        }
        w.close('}');
      }
      w.close('}');
    }

    w.close('}');
  }
  w.close('}');
  std::string out = w.take();
  out.push_back('\n');
  return out;
}

void load_document(std::string_view text, Database& db) {
  Node root = Parser(text).parse_document();
  if (root.kind != Node::Kind::kObject) fail("document root must be an object");
  for (const auto& [name, body] : root.members) load_table(name, body, db);
}

}  // namespace robostore
