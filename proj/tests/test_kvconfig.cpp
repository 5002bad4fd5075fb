#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "symkit/kvconfig.hpp"

using namespace symkit;

TEST_CASE("kvconfig: parse skips blanks and comments, trims whitespace") {
  std::stringstream ss(
      "# a comment\n"
      "\n"
      "alpha = 1\n"
      "  beta.gamma=hello world \n"
      "# another\n"
      "delta = -2.5\n");
  KvMap kv = parse_kv(ss);
  CHECK(kv.size() == 3);
  CHECK(kv.at("alpha") == "1");
  CHECK(kv.at("beta.gamma") == "hello world");
  CHECK(kv.at("delta") == "-2.5");
}

TEST_CASE("kvconfig: malformed line throws with its number") {
  std::stringstream ss("ok = 1\nnot a pair\n");
  CHECK_THROWS_WITH_AS(parse_kv(ss), doctest::Contains("line 2"),
                       std::runtime_error);
}

TEST_CASE("kvconfig: canonical write sorts keys") {
  KvMap kv;
  kv["zeta"] = "1";
  kv["alpha"] = "2";
  kv["mid"] = "3";
  std::string text = kv_to_string(kv);
  CHECK(text == "alpha=2\nmid=3\nzeta=1\n");
  std::stringstream back(text);
  CHECK(parse_kv(back) == kv);
}

TEST_CASE("kvconfig: typed lookups with fallbacks") {
  KvMap kv;
  kv["d"] = "2.5";
  kv["i"] = "-7";
  kv["u"] = "12345678901234567890";
  kv["b1"] = "true";
  kv["b0"] = "false";
  kv["s"] = "text";
  CHECK(kv_get(kv, "d", 0.0) == 2.5);
  CHECK(kv_get(kv, "i", 0) == -7);
  CHECK(kv_get(kv, "u", std::uint64_t{0}) == 12345678901234567890ull);
  CHECK(kv_get(kv, "b1", false) == true);
  CHECK(kv_get(kv, "b0", true) == false);
  CHECK(kv_get(kv, "s", std::string("x")) == "text");
  CHECK(kv_get(kv, "missing", 3.25) == 3.25);
  CHECK(kv_get(kv, "missing", 42) == 42);
  CHECK(kv_get(kv, "missing", std::string("fb")) == "fb");
  CHECK_THROWS_AS(kv_get(kv, "s", 1.0), std::runtime_error);
  CHECK_THROWS_AS(kv_get(kv, "d", 1), std::runtime_error);
  CHECK_THROWS_AS(kv_get(kv, "s", true), std::runtime_error);
}

TEST_CASE("kvconfig: format_double round trips") {
  double values[] = {0.0,  1.0,       -2.5, 0.1,
                     1e-9, 1.0 / 3.0, 1e17, -0.0001,
                     5.0,  0.53588673, 1e300};
  for (double v : values) {
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
}
