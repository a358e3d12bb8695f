#pragma once

#include <string>
#include <string_view>

#include "robostore/storage.hpp"
#include "robostore/timestamp_index.hpp"

namespace robostore {

// A store together with its timestamp indexes; the unit the data file
// describes.
struct Database {
  Store store;
  TimestampIndexRegistry index{store};
};

// Braces-delimited, JSON-compatible text mirroring the super-column layout:
//
//   { "<table>": { "column families": {...}, "created": N,
//                  "rows": { "<row>": { "<family>": { ["<super key>": {]
//                      "<column>": [ {"value": "...", "Time stamp": N}, ... ]
//                  [}] } } },
//                  "timestamp index": { "Timestamp super 1": {...} } } }
//
// "Time stamp" values are unsigned decimal microseconds (up to 128 bits).
// Bytes outside printable ASCII are written as \u00XX, so dump output is
// canonical and dump(load(dump(db))) == dump(db).
std::string dump_document(const Database& db);

// Loads into db; tables in the text must not already exist. Throws
// Error(kParseError) on malformed input.
void load_document(std::string_view text, Database& db);

// JSON string literal with the escaping rules above.
std::string quote_bytes(std::string_view bytes);

}  // namespace robostore
