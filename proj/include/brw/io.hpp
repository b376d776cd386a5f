#pragma once

#include "brw/law.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace brw {

/// Schema violation; `field` is a JSON path such as atoms[0].offspring[1].phi.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Parses a law document. Numbers may be decimal strings ("0.25", "1/3"),
/// which are kept exact, or plain JSON numbers.
BranchLaw parse_law(const nlohmann::json& doc);

/// Reads, parses and validates a law file.
BranchLaw load_law(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip text; infinities print as "inf"/"-inf" and NaN is
/// refused with std::logic_error.
std::string format_number(double v);

/// JSON value for a double: a number when finite, the string "inf"/"-inf"
/// otherwise; NaN is refused.
nlohmann::json json_number(double v);
nlohmann::json json_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string str() const;
};

std::string sha256_hex(const std::string& bytes);

/// Writes bytes atomically enough for our purposes; throws on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Pretty JSON with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace brw
