#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtco/error.hpp"
#include "dtco/netlist.hpp"

using namespace dtco;

namespace {

int error_line(const std::string& text) {
  try {
    parse_netlist(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("engineering suffixes") {
  CHECK(parse_value("1k") == 1e3);
  CHECK(parse_value("2.5MEG") == 2.5e6);
  CHECK(parse_value("3m") == doctest::Approx(3e-3));
  CHECK(parse_value("10ns") == doctest::Approx(10e-9));
  CHECK(parse_value("1f") == doctest::Approx(1e-15));
  CHECK(parse_value("-0.5") == -0.5);
  CHECK(parse_value("1e-12") == 1e-12);
  CHECK_THROWS(parse_value("abc"));
}

TEST_CASE("full grammar") {
  const auto nl = parse_netlist(
      "* an inverter\n"
      "Vdd vdd 0 dc 0.9\n"
      "Vin in 0 pwl 0 0 1n 0 1.1n 0.9\n"
      "M1 out in 0 tn\n"
      "M2 out in vdd tp\n"
      "R1 out x 1k\n"
      "C1 x 0 1f\n"
      ".model tn ntfet_ref c_gd=0\n"
      ".model tp nn file=Models/P.json polarity=p vref=0.9\n"
      ".op\n.dc vin 0 0.9 0.01\n.tran 1p 2n\n"
      ".print v(out) i(vdd)\n"
      ".END\n");
  CHECK(nl.nodes.front() == "0");
  CHECK(nl.has_node("vdd"));
  CHECK(nl.elements.size() == 6);
  const Element* m1 = nl.find_element("m1");
  REQUIRE(m1);
  CHECK(m1->nodes == std::vector<std::string>{"out", "in", "0"});
  CHECK(m1->model == "tn");
  const Element* vin = nl.find_element("vin");
  REQUIRE(vin);
  CHECK(vin->wave.is_pwl());
  CHECK(vin->wave.at(1.05e-9) == doctest::Approx(0.45));
  CHECK(vin->wave.at(5e-9) == doctest::Approx(0.9));
  CHECK(nl.models.at("tn").params.at("c_gd") == 0.0);
  CHECK(nl.models.at("tp").file == "Models/P.json");
  CHECK(nl.models.at("tp").polarity == "p");
  CHECK(nl.models.at("tp").vref == 0.9);
  REQUIRE(nl.analyses.size() == 3);
  CHECK(nl.analyses[1].source == "vin");
  CHECK(nl.analyses[1].step == doctest::Approx(0.01));
  CHECK(nl.analyses[2].tstop == doctest::Approx(2e-9));
  REQUIRE(nl.prints.size() == 2);
  CHECK(nl.prints[0].label() == "v(out)");
  CHECK(nl.prints[1].label() == "i(vdd)");
}

TEST_CASE("errors carry line numbers") {
  CHECK(error_line("V1 a 0 dc 1\nR1 a 0\n.op\n.end\n") == 2);
  CHECK(error_line("V1 a 0 dc 1\nM1 a a 0 nomodel\n.op\n.end\n") == 2);
  CHECK(error_line("V1 a 0 dc 1\nR1 a 0 1k\n.model x bogus_kind\n.end\n") == 3);
  CHECK(error_line("V1 a 0 dc 1\nR1 a 0 1k\n.dc V9 0 1 0.1\n.end\n") == 3);
  CHECK(error_line("V1 a 0 dc 1\nR1 a 0 1k\n.print v(zz)\n.end\n") == 3);
  CHECK(error_line("V1 a 0 dc 1\nQ1 a 0 1k\n.end\n") == 2);
  CHECK(error_line("V1 a 0 pwl 1n 0 0.5n 1\nR1 a 0 1k\n.end\n") == 1);
  CHECK_THROWS_AS(parse_netlist("V1 a 0 dc 1\nR1 a 0 1k\n"), ParseError);
  CHECK_THROWS_AS(parse_netlist("V1 a b dc 1\nR1 a b 1k\n.end\n"), ParseError);
}
