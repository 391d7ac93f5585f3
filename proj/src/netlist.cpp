#include "dtco/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dtco/error.hpp"

namespace dtco {

double Waveform::at(double t) const {
  if (pwl.empty()) return dc;
  if (t <= pwl.front().t) return pwl.front().v;
  if (t >= pwl.back().t) return pwl.back().v;
  const auto it = std::upper_bound(pwl.begin(), pwl.end(), t, [](double x, const PwlPoint& p) { return x < p.t; });
  const PwlPoint& b = *it;
  const PwlPoint& a = *(it - 1);
  if (b.t == a.t) return b.v;
  return a.v + (b.v - a.v) * (t - a.t) / (b.t - a.t);
}

const Element* Netlist::find_element(const std::string& name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

bool Netlist::has_node(const std::string& name) const {
  return std::find(nodes.begin(), nodes.end(), name) != nodes.end();
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool try_parse_value(const std::string& token, double& out) {
  if (token.empty()) return false;
  const char* begin = token.c_str();
  char* end = nullptr;
  const double base = std::strtod(begin, &end);
  if (end == begin) return false;
  std::string rest = lower(std::string(end));
  double mult = 1.0;
  std::size_t used = 0;
  if (rest.rfind("meg", 0) == 0) {
    mult = 1e6;
    used = 3;
  } else if (!rest.empty()) {
    switch (rest[0]) {
      case 'f': mult = 1e-15; used = 1; break;
      case 'p': mult = 1e-12; used = 1; break;
      case 'n': mult = 1e-9; used = 1; break;
      case 'u': mult = 1e-6; used = 1; break;
      case 'm': mult = 1e-3; used = 1; break;
      case 'k': mult = 1e3; used = 1; break;
      case 'g': mult = 1e9; used = 1; break;
      case 't': mult = 1e12; used = 1; break;
      default: break;
    }
  }
  for (std::size_t i = used; i < rest.size(); ++i) {
    if (!std::isalpha(static_cast<unsigned char>(rest[i]))) return false;
  }
  out = base * mult;
  return std::isfinite(out);
}

double value_at(const std::vector<std::string>& tok, std::size_t i, int line, const char* what) {
  if (i >= tok.size()) throw ParseError(line, std::string("missing ") + what);
  double v;
  if (!try_parse_value(tok[i], v)) throw ParseError(line, std::string("bad ") + what + " '" + tok[i] + "'");
  return v;
}

const std::set<std::string> kModelKinds = {"nfin_ref", "pfin_ref", "ntfet_ref", "ptfet_ref", "nn"};

}  // namespace

double parse_value(const std::string& token) {
  double v;
  if (!try_parse_value(token, v)) throw ConfigError("bad numeric value '" + token + "'");
  return v;
}

Netlist parse_netlist(const std::string& text) {
  Netlist nl;
  nl.nodes.push_back("0");
  auto use_node = [&](const std::string& n) {
    if (!nl.has_node(n)) nl.nodes.push_back(n);
  };

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool ended = false;
  bool ground_seen = false;
  std::map<std::size_t, int> analysis_lines;
  std::vector<int> print_lines;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '*') continue;

    const auto orig = tokenize(raw);
    std::vector<std::string> tok(orig.size());
    std::transform(orig.begin(), orig.end(), tok.begin(), lower);
    const std::string& head = tok[0];

    if (head[0] == '.') {
      if (head == ".end") {
        ended = true;
        break;
      } else if (head == ".model") {
        if (tok.size() < 3) throw ParseError(lineno, ".model needs an id and a kind");
        ModelCard card;
        card.id = tok[1];
        card.kind = tok[2];
        card.line = lineno;
        if (!kModelKinds.count(card.kind)) throw ParseError(lineno, "unknown model kind '" + card.kind + "'");
        for (std::size_t i = 3; i < tok.size(); ++i) {
          const auto eq = tok[i].find('=');
          if (eq == std::string::npos || eq == 0) throw ParseError(lineno, "expected key=value, got '" + orig[i] + "'");
          const std::string key = tok[i].substr(0, eq);
          if (key == "file") {
            card.file = orig[i].substr(eq + 1);
          } else if (key == "polarity") {
            card.polarity = tok[i].substr(eq + 1);
            if (card.polarity != "n" && card.polarity != "p") throw ParseError(lineno, "polarity must be n or p");
          } else {
            double v;
            if (!try_parse_value(tok[i].substr(eq + 1), v)) throw ParseError(lineno, "bad value for '" + key + "'");
            if (key == "vref") {
              card.vref = v;
            } else {
              card.params[key] = v;
            }
          }
        }
        if (card.kind == "nn" && card.file.empty()) throw ParseError(lineno, "nn model '" + card.id + "' needs file=");
        if (nl.models.count(card.id)) throw ParseError(lineno, "model '" + card.id + "' defined twice");
        nl.models[card.id] = card;
      } else if (head == ".op") {
        nl.analyses.push_back({});
      } else if (head == ".dc") {
        Analysis a;
        a.kind = Analysis::Kind::Dc;
        if (tok.size() != 5) throw ParseError(lineno, ".dc expects <source> <start> <stop> <step>");
        a.source = tok[1];
        a.start = value_at(tok, 2, lineno, "start");
        a.stop = value_at(tok, 3, lineno, "stop");
        a.step = value_at(tok, 4, lineno, "step");
        if (!(a.step > 0.0)) throw ParseError(lineno, ".dc step must be positive");
        analysis_lines[nl.analyses.size()] = lineno;
        nl.analyses.push_back(a);
      } else if (head == ".tran") {
        Analysis a;
        a.kind = Analysis::Kind::Tran;
        if (tok.size() != 3) throw ParseError(lineno, ".tran expects <tstep> <tstop>");
        a.tstep = value_at(tok, 1, lineno, "tstep");
        a.tstop = value_at(tok, 2, lineno, "tstop");
        if (!(a.tstep > 0.0) || !(a.tstop >= a.tstep)) throw ParseError(lineno, ".tran needs 0 < tstep <= tstop");
        nl.analyses.push_back(a);
      } else if (head == ".print") {
        for (std::size_t i = 1; i < tok.size(); ++i) {
          const std::string& t = tok[i];
          if (t.size() < 4 || t[1] != '(' || t.back() != ')' || (t[0] != 'v' && t[0] != 'i')) {
            throw ParseError(lineno, "bad print item '" + orig[i] + "'");
          }
          PrintItem p;
          p.kind = t[0] == 'v' ? PrintItem::Kind::Voltage : PrintItem::Kind::Current;
          p.name = t.substr(2, t.size() - 3);
          print_lines.push_back(lineno);
          nl.prints.push_back(p);
        }
      } else {
        throw ParseError(lineno, "unknown control card '" + orig[0] + "'");
      }
      continue;
    }

    Element e;
    e.name = head;
    e.line = lineno;
    switch (head[0]) {
      case 'r':
      case 'c': {
        if (tok.size() != 4) throw ParseError(lineno, "expected " + orig[0] + " <n1> <n2> <value>");
        e.kind = head[0] == 'r' ? ElementKind::Resistor : ElementKind::Capacitor;
        e.nodes = {tok[1], tok[2]};
        e.value = value_at(tok, 3, lineno, "value");
        if (e.kind == ElementKind::Resistor && !(e.value > 0.0)) throw ParseError(lineno, "resistance must be positive");
        if (e.kind == ElementKind::Capacitor && !(e.value >= 0.0)) throw ParseError(lineno, "capacitance must be >= 0");
        break;
      }
      case 'v': {
        if (tok.size() < 5) throw ParseError(lineno, "expected " + orig[0] + " <n+> <n-> dc <v> | pwl <t0> <v0> ...");
        e.kind = ElementKind::VSource;
        e.nodes = {tok[1], tok[2]};
        if (tok[3] == "dc") {
          if (tok.size() != 5) throw ParseError(lineno, "dc source takes one value");
          e.wave.dc = value_at(tok, 4, lineno, "dc value");
        } else if (tok[3] == "pwl") {
          if ((tok.size() - 4) % 2 != 0) throw ParseError(lineno, "pwl needs (time, value) pairs");
          for (std::size_t i = 4; i < tok.size(); i += 2) {
            PwlPoint p{value_at(tok, i, lineno, "pwl time"), value_at(tok, i + 1, lineno, "pwl value")};
            if (!e.wave.pwl.empty() && p.t < e.wave.pwl.back().t) throw ParseError(lineno, "pwl times must be nondecreasing");
            e.wave.pwl.push_back(p);
          }
          e.wave.dc = e.wave.pwl.front().v;
        } else {
          throw ParseError(lineno, "source type must be dc or pwl, got '" + orig[3] + "'");
        }
        break;
      }
      case 'm': {
        if (tok.size() != 5) throw ParseError(lineno, "expected " + orig[0] + " <d> <g> <s> <model>");
        e.kind = ElementKind::Device3;
        e.nodes = {tok[1], tok[2], tok[3]};
        e.model = tok[4];
        break;
      }
      default:
        throw ParseError(lineno, "unknown element '" + orig[0] + "'");
    }
    if (nl.find_element(e.name)) throw ParseError(lineno, "duplicate element name '" + orig[0] + "'");
    for (const auto& n : e.nodes) {
      if (n == "0") ground_seen = true;
      use_node(n);
    }
    nl.elements.push_back(std::move(e));
  }

  if (!ended) throw ParseError(lineno, "missing .end");
  if (!ground_seen) throw ParseError(lineno, "no element connects to ground node 0");
  for (const auto& e : nl.elements) {
    if (e.kind == ElementKind::Device3 && !nl.models.count(e.model)) {
      throw ParseError(e.line, "undefined model '" + e.model + "'");
    }
  }
  for (std::size_t k = 0; k < nl.analyses.size(); ++k) {
    const auto& a = nl.analyses[k];
    if (a.kind == Analysis::Kind::Dc) {
      const Element* src = nl.find_element(a.source);
      if (!src || src->kind != ElementKind::VSource) {
        throw ParseError(analysis_lines.at(k), ".dc source '" + a.source + "' not found");
      }
    }
  }
  for (std::size_t k = 0; k < nl.prints.size(); ++k) {
    const auto& p = nl.prints[k];
    lineno = print_lines[k];
    if (p.kind == PrintItem::Kind::Voltage && !nl.has_node(p.name)) {
      throw ParseError(lineno, "print references unknown node '" + p.name + "'");
    }
    if (p.kind == PrintItem::Kind::Current) {
      const Element* src = nl.find_element(p.name);
      if (!src || src->kind != ElementKind::VSource) throw ParseError(lineno, "print references unknown source '" + p.name + "'");
    }
  }
  return nl;
}

Netlist parse_netlist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open netlist " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str());
}

}  // namespace dtco
