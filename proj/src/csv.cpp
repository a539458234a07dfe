#include "ipla/csv.hpp"

#include <charconv>
#include <fstream>

#include "ipla/errors.hpp"

namespace ipla::csv {

std::string field(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string field(std::uint64_t v) { return std::to_string(v); }
std::string field(long v) { return std::to_string(v); }
std::string field(int v) { return std::to_string(v); }

std::string quote(const std::string& raw) {
  if (raw.find_first_of(",\"\n\r") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size())
    throw Error("csv row has " + std::to_string(fields.size()) + " fields, header has " +
                std::to_string(header_.size()));
  rows_.push_back(std::move(fields));
}

std::string Table::to_string() const {
  std::string out = "# schema_version,1\n";
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += quote(header_[i]);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote(row[i]);
    }
    out += '\n';
  }
  return out;
}

void Table::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_string();
}

}  // namespace ipla::csv
