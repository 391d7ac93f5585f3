#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace dtco {

struct PwlPoint {
  double t = 0.0;
  double v = 0.0;
};

/// DC level or piecewise-linear waveform (held flat outside its breakpoints).
struct Waveform {
  double dc = 0.0;
  std::vector<PwlPoint> pwl;

  bool is_pwl() const { return !pwl.empty(); }
  double at(double t) const;
};

enum class ElementKind { Resistor, Capacitor, VSource, Device3 };

struct Element {
  ElementKind kind = ElementKind::Resistor;
  std::string name;                // lower-cased, including the type letter
  std::vector<std::string> nodes;  // 2 for R/C/V, (d, g, s) for devices
  double value = 0.0;              // ohms or farads
  Waveform wave;                   // voltage sources
  std::string model;               // devices
  int line = 0;
};

/// `.model <id> <kind> [file=<path>] [polarity=n|p] [vref=<volts>] [<param>=<value> ...]`
struct ModelCard {
  std::string id;
  std::string kind;  // nfin_ref | pfin_ref | ntfet_ref | ptfet_ref | nn
  std::string file;
  std::string polarity;  // empty when not given
  double vref = 0.0;
  std::map<std::string, double> params;
  int line = 0;
};

struct Analysis {
  enum class Kind { Op, Dc, Tran };
  Kind kind = Kind::Op;
  std::string source;  // .dc
  double start = 0.0, stop = 0.0, step = 0.0;
  double tstep = 0.0, tstop = 0.0;
};

struct PrintItem {
  enum class Kind { Voltage, Current };
  Kind kind = Kind::Voltage;
  std::string name;  // node or source name

  std::string label() const { return (kind == Kind::Voltage ? "v(" : "i(") + name + ")"; }
};

struct Netlist {
  std::vector<std::string> nodes;  // "0" first, then in order of appearance
  std::vector<Element> elements;
  std::map<std::string, ModelCard> models;
  std::vector<Analysis> analyses;
  std::vector<PrintItem> prints;

  const Element* find_element(const std::string& name) const;
  bool has_node(const std::string& name) const;
};

/// Number with optional engineering suffix (f p n u m k meg g t); trailing unit
/// letters are ignored ("10ns", "1kohm").
double parse_value(const std::string& token);

/// Throws ParseError carrying the offending line number.
Netlist parse_netlist(const std::string& text);
Netlist parse_netlist_file(const std::string& path);

}  // namespace dtco
