#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"
#include "surrosim/csv.hpp"
#include "surrosim/random.hpp"

using namespace surrosim;
namespace fs = std::filesystem;

TEST_CASE("numbers round-trip exactly") {
  Stream s = derive_stream(51, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = s.normal() * std::pow(10.0, s.normal() * 5);
    std::string text = "x\n";
    csv::append_field(text, v);
    const auto doc = csv::Document::parse(text);
    CHECK(doc.number(0, 0) == v);
  }
}

TEST_CASE("field formatting") {
  std::string t;
  csv::append_field(t, 0.1);
  CHECK(t == "0.1");
  t.clear();
  csv::append_field(t, -0.0);
  CHECK(t == "0");
  t.clear();
  csv::append_field(t, std::numeric_limits<double>::quiet_NaN());
  CHECK(t == "nan");
  t.clear();
  csv::append_field(t, 42);
  csv::append_field(t, true);
  csv::append_field(t, "s");
  CHECK(t == "421s");

  csv::Builder b({"a", "b", "c"});
  b.row(1, 2.5, "x");
  b.row(std::size_t{3}, -1.0, std::string("y"));
  CHECK(b.text() == "a,b,c\n1,2.5,x\n3,-1,y\n");
}

TEST_CASE("document access and errors") {
  const auto doc = csv::Document::parse("a,b\r\n1,x\n\n2,3.5\n", "demo.csv");
  CHECK(doc.rows() == 2);
  CHECK(doc.column("b") == 1);
  CHECK(doc.has_column("a"));
  CHECK_FALSE(doc.has_column("z"));
  CHECK(doc.integer(1, 0) == 2);
  CHECK(doc.number(1, 1) == 3.5);
  CHECK(std::isnan(csv::Document::parse("a\nnan\n").number(0, 0)));

  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([&] { (void)doc.number(0, 1); }).find("column 'b'") != std::string::npos);
  CHECK(message([&] { (void)doc.column("z"); }).find("demo.csv") != std::string::npos);
  CHECK(message([] { csv::Document::parse("a,b\n1\n", "short.csv"); }).find("short.csv") !=
        std::string::npos);
  CHECK(message([] { csv::Document::read("/nonexistent/file.csv"); }).find("/nonexistent/file.csv") !=
        std::string::npos);
}

TEST_CASE("atomic writes") {
  const fs::path dir = fs::temp_directory_path() / "surrosim_csv_test";
  fs::remove_all(dir);
  csv::Builder b({"v"});
  b.row(1.25);
  b.write(dir / "sub" / "out.csv");
  CHECK(csv::read_file(dir / "sub" / "out.csv") == "v\n1.25\n");
  CHECK_FALSE(fs::exists(dir / "sub" / "out.csv.partial"));
  fs::remove_all(dir);
}
