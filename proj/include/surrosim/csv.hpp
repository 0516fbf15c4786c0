#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV for the stage files: comma separated, no quoting, '.' decimal,
// doubles in shortest round-trip form.
namespace surrosim::csv {

void append_field(std::string& out, double v);
void append_field(std::string& out, int v);
void append_field(std::string& out, long long v);
void append_field(std::string& out, std::size_t v);
void append_field(std::string& out, bool v);
void append_field(std::string& out, std::string_view v);
inline void append_field(std::string& out, const char* v) { append_field(out, std::string_view(v)); }
inline void append_field(std::string& out, const std::string& v) { append_field(out, std::string_view(v)); }

class Builder {
 public:
  explicit Builder(const std::vector<std::string>& columns);

  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((first ? void(first = false) : void(buffer_ += ','), append_field(buffer_, fields)), ...);
    buffer_ += '\n';
  }

  const std::string& text() const { return buffer_; }
  /// Writes to a temporary sibling and renames it into place.
  void write(const std::filesystem::path& path) const;

 private:
  std::string buffer_;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

class Document {
 public:
  /// Throws std::runtime_error naming the file when it is missing or malformed.
  static Document read(const std::filesystem::path& path);
  static Document parse(std::string text, std::string source = "<memory>");

  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  std::size_t rows() const { return ncol_ == 0 ? 0 : cells_.size() / ncol_; }
  const std::vector<std::string>& header() const { return header_; }

  std::string_view field(std::size_t row, std::size_t col) const { return cells_[row * ncol_ + col]; }
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;

 private:
  std::string source_;
  std::string text_;
  std::vector<std::string> header_;
  std::vector<std::string_view> cells_;
  std::size_t ncol_ = 0;
};

}  // namespace surrosim::csv
