#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace attrforge {

using Json = nlohmann::json;

// One JSON object per line; blank lines are rejected. Errors carry the path
// and 1-based line number.
std::vector<Json> read_jsonl(const std::string& path);

// Writes one compact line per row. nlohmann objects keep keys sorted, so the
// same rows always produce the same bytes.
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Field accessors that name the offending record in the error message.
std::string require_string(const Json& j, const std::string& key,
                           const std::string& where);
const Json& require_field(const Json& j, const std::string& key,
                          const std::string& where);

}  // namespace attrforge
