#include "lifespan/csv.hpp"

#include <doctest.h>

#include <limits>
#include <sstream>

using namespace lifespan::csv;

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 6.02214076e23, 1.0 / 3.0}) CHECK(std::stod(format(v)) == v);
  CHECK(format(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("quoting") {
  CHECK(quote("plain") == "plain");
  CHECK(quote("a,b") == "\"a,b\"");
  CHECK(quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("writer output splits back into fields") {
  std::ostringstream os;
  Writer w(os);
  w.header({"name", "note"});
  w.row({"x,y", "he said \"no\""});
  w.numbers({1.5, -0.25});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(split_record(line) == std::vector<std::string>{"name", "note"});
  std::getline(is, line);
  CHECK(split_record(line) == std::vector<std::string>{"x,y", "he said \"no\""});
  std::getline(is, line);
  CHECK(split_record(line) == std::vector<std::string>{"1.5", "-0.25"});
  CHECK(split_record("a,,b\r") == std::vector<std::string>{"a", "", "b"});
}
