#ifndef IPLA_CSV_HPP
#define IPLA_CSV_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ipla::csv {

/// Shortest round-trip decimal representation (deterministic).
std::string field(double v);
std::string field(std::uint64_t v);
std::string field(long v);
std::string field(int v);

/// RFC-4180 quoting: fields containing comma, quote or newline are wrapped
/// in double quotes with embedded quotes doubled.
std::string quote(const std::string& raw);

/// A small CSV document: one `# schema_version,1` comment line, a header
/// row, then data rows.
class Table {
 public:
  explicit Table(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  std::string to_string() const;
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace ipla::csv

#endif  // IPLA_CSV_HPP
