#include "attrforge/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace attrforge {

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::vector<Json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": blank line in JSONL input");
    }
    Json row = Json::parse(line, nullptr, false);
    if (row.is_discarded()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": invalid JSON");
    }
    if (!row.is_object()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected a JSON object");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<Json>& rows) {
  std::ostringstream out;
  for (const Json& row : rows) {
    out << row.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for " + path);
  }
}

std::string require_string(const Json& j, const std::string& key,
                           const std::string& where) {
  const Json& field = require_field(j, key, where);
  if (!field.is_string()) {
    throw std::runtime_error(where + ": field '" + key + "' must be a string");
  }
  return field.get<std::string>();
}

const Json& require_field(const Json& j, const std::string& key,
                          const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::runtime_error(where + ": missing field '" + key + "'");
  }
  return *it;
}

}  // namespace attrforge
