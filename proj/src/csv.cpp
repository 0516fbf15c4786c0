#include "surrosim/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace surrosim::csv {

void append_field(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_field(std::string& out, long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_field(std::string& out, int v) { append_field(out, static_cast<long long>(v)); }
void append_field(std::string& out, std::size_t v) { append_field(out, static_cast<long long>(v)); }
void append_field(std::string& out, bool v) { out += v ? '1' : '0'; }
void append_field(std::string& out, std::string_view v) { out.append(v); }

Builder::Builder(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += columns[i];
  }
  buffer_ += '\n';
}

void Builder::write(const std::filesystem::path& path) const { write_file_atomic(path, buffer_); }

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("missing file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Document Document::read(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

Document Document::parse(std::string text, std::string source) {
  Document d;
  d.source_ = std::move(source);
  d.text_ = std::move(text);
  std::string_view all(d.text_);
  std::size_t line_no = 0;
  while (!all.empty()) {
    const std::size_t eol = all.find('\n');
    std::string_view line = all.substr(0, eol);
    all = eol == std::string_view::npos ? std::string_view{} : all.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (line_no++ == 0) {
      for (auto f : fields) d.header_.emplace_back(f);
      d.ncol_ = fields.size();
      continue;
    }
    if (fields.size() != d.ncol_)
      throw std::runtime_error(d.source_ + ": line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(d.ncol_));
    d.cells_.insert(d.cells_.end(), fields.begin(), fields.end());
  }
  if (d.header_.empty()) throw std::runtime_error(d.source_ + ": empty CSV file");
  return d;
}

bool Document::has_column(std::string_view name) const {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

std::size_t Document::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw std::runtime_error(source_ + ": missing column '" + std::string(name) + "'");
}

double Document::number(std::size_t row, std::size_t col) const {
  const std::string_view f = field(row, col);
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size())
    throw std::runtime_error(source_ + ": bad number '" + std::string(f) + "' in column '" +
                             header_[col] + "'");
  return v;
}

long long Document::integer(std::size_t row, std::size_t col) const {
  const std::string_view f = field(row, col);
  long long v = 0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size())
    throw std::runtime_error(source_ + ": bad integer '" + std::string(f) + "' in column '" +
                             header_[col] + "'");
  return v;
}

}  // namespace surrosim::csv
