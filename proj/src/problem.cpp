#include "tsvar/problem.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "tsvar/errors.hpp"

namespace tsvar {

TimeScale TimescaleSpec::build() const {
  switch (kind) {
    case ScaleKind::Uniform:
      return TimeScale::uniform(a, b, count);
    case ScaleKind::Geometric:
      return TimeScale::geometric(t0, ratio, count);
    case ScaleKind::Explicit:
      return TimeScale::from_points(points);
  }
  throw InputError("unknown timescale kind");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw InputError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& text, const std::string& origin, int line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    fail(origin, line, "expected a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& origin, int line) {
  if (text == "true") return true;
  if (text == "false") return false;
  fail(origin, line, "expected true or false, got '" + text + "'");
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string header;  // e.g. "timescale" or "generator g1"
  int line = 0;
  std::map<std::string, Entry> entries;
};

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
      return false;
  }
  return !std::isdigit(static_cast<unsigned char>(key[0]));
}

std::vector<Section> split_sections(const std::string& text,
                                    const std::string& origin) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      Section s;
      s.header = trim(line.substr(1, line.size() - 2));
      s.line = line_no;
      if (s.header.empty()) fail(origin, line_no, "empty section header");
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, line_no, "expected 'key = value' or a [section] header");
    }
    if (sections.empty()) {
      fail(origin, line_no, "key outside any section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      fail(origin, line_no, "keys must be lower-case identifiers, got '" + key + "'");
    }
    auto& entries = sections.back().entries;
    if (entries.count(key)) {
      fail(origin, line_no, "duplicate key '" + key + "' in [" +
                                sections.back().header + "] (first at line " +
                                std::to_string(entries[key].line) + ")");
    }
    entries[key] = Entry{value, line_no};
  }
  return sections;
}

class SectionReader {
public:
  SectionReader(const Section& s, const std::string& origin)
      : section_(s), origin_(origin) {}

  const Entry& require(const std::string& key) const {
    auto it = section_.entries.find(key);
    if (it == section_.entries.end()) {
      fail(origin_, section_.line,
           "section [" + section_.header + "] is missing key '" + key + "'");
    }
    return it->second;
  }

  const Entry* find(const std::string& key) const {
    auto it = section_.entries.find(key);
    return it == section_.entries.end() ? nullptr : &it->second;
  }

  double number(const std::string& key) const {
    const Entry& e = require(key);
    return parse_number(e.value, origin_, e.line);
  }

  Expression expression(const std::string& key, const Alphabet& alphabet) const {
    const Entry& e = require(key);
    try {
      return parse_expression(e.value, alphabet);
    } catch (const InputError& err) {
      fail(origin_, e.line, err.what());
    }
  }

  void check_known(std::initializer_list<const char*> known) const {
    for (const auto& [key, entry] : section_.entries) {
      bool ok = false;
      for (const char* k : known) {
        if (key == k) { ok = true; break; }
      }
      if (!ok) fail(origin_, entry.line, "unknown key '" + key + "' in [" +
                                             section_.header + "]");
    }
  }

private:
  const Section& section_;
  const std::string& origin_;
};

TimescaleSpec read_timescale(const Section& s, const std::string& origin) {
  SectionReader r(s, origin);
  TimescaleSpec spec;
  const Entry& kind = r.require("kind");
  if (kind.value == "uniform") {
    spec.kind = ScaleKind::Uniform;
    r.check_known({"kind", "a", "b", "count"});
    spec.a = r.number("a");
    spec.b = r.number("b");
    spec.count = static_cast<std::size_t>(r.number("count"));
  } else if (kind.value == "geometric") {
    spec.kind = ScaleKind::Geometric;
    r.check_known({"kind", "t0", "ratio", "count"});
    spec.t0 = r.number("t0");
    spec.ratio = r.number("ratio");
    spec.count = static_cast<std::size_t>(r.number("count"));
  } else if (kind.value == "explicit") {
    spec.kind = ScaleKind::Explicit;
    r.check_known({"kind", "points"});
    const Entry& pts = r.require("points");
    std::istringstream in(pts.value);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      spec.points.push_back(parse_number(tok, origin, pts.line));
    }
    if (spec.points.size() < 2) {
      fail(origin, pts.line, "explicit timescale needs at least 2 points");
    }
  } else {
    fail(origin, kind.line,
         "timescale kind must be uniform, geometric or explicit");
  }
  return spec;
}

}  // namespace

ProblemSpec parse_problem(const std::string& text, const std::string& origin) {
  const std::vector<Section> sections = split_sections(text, origin);

  ProblemSpec spec;
  bool have_timescale = false, have_lagrangian = false;
  for (const Section& s : sections) {
    SectionReader r(s, origin);
    if (s.header == "timescale") {
      if (have_timescale) fail(origin, s.line, "duplicate [timescale] section");
      spec.timescale = read_timescale(s, origin);
      have_timescale = true;
    } else if (s.header == "lagrangian") {
      if (have_lagrangian) fail(origin, s.line, "duplicate [lagrangian] section");
      r.check_known({"expr"});
      spec.lagrangian = r.expression("expr", lagrangian_alphabet());
      have_lagrangian = true;
    } else if (s.header == "acceleration") {
      if (spec.acceleration) fail(origin, s.line, "duplicate [acceleration] section");
      r.check_known({"expr"});
      spec.acceleration = r.expression("expr", acceleration_alphabet());
    } else if (s.header.rfind("generator ", 0) == 0) {
      std::string name = trim(s.header.substr(10));
      if (name.empty()) fail(origin, s.line, "generator section needs a name");
      for (const auto& g : spec.generators) {
        if (g.name == name) fail(origin, s.line, "duplicate generator '" + name + "'");
      }
      r.check_known({"tau", "xi"});
      GeneratorSpec gen;
      gen.name = std::move(name);
      gen.tau = r.expression("tau", generator_alphabet());
      gen.xi = r.expression("xi", generator_alphabet());
      spec.generators.push_back(std::move(gen));
    } else if (s.header == "initial") {
      if (spec.initial) fail(origin, s.line, "duplicate [initial] section");
      r.check_known({"q0", "v0"});
      spec.initial = {r.number("q0"), r.number("v0")};
    } else if (s.header == "boundary") {
      if (spec.boundary) fail(origin, s.line, "duplicate [boundary] section");
      r.check_known({"a", "b"});
      spec.boundary = {r.number("a"), r.number("b")};
    } else if (s.header == "tolerances") {
      r.check_known({"residual_tol", "drift_tol"});
      if (r.find("residual_tol")) spec.residual_tol = r.number("residual_tol");
      if (r.find("drift_tol")) spec.drift_tol = r.number("drift_tol");
    } else if (s.header == "flags") {
      r.check_known({"include_gauge", "dubois_variant", "discrete_variant"});
      if (const Entry* e = r.find("include_gauge")) {
        spec.include_gauge = parse_bool(e->value, origin, e->line);
      }
      if (const Entry* e = r.find("dubois_variant")) {
        if (e->value == "printed") spec.dubois_variant = DuboisVariant::Printed;
        else if (e->value == "sigma") spec.dubois_variant = DuboisVariant::SigmaForm;
        else fail(origin, e->line, "dubois_variant must be printed or sigma");
      }
      if (const Entry* e = r.find("discrete_variant")) {
        if (e->value == "printed") spec.discrete_variant = DiscreteElVariant::Printed;
        else if (e->value == "reconciled") spec.discrete_variant = DiscreteElVariant::Reconciled;
        else fail(origin, e->line, "discrete_variant must be printed or reconciled");
      }
    } else {
      fail(origin, s.line, "unknown section [" + s.header + "]");
    }
  }

  if (!have_timescale) throw InputError(origin + ": missing [timescale] section");
  if (!have_lagrangian) throw InputError(origin + ": missing [lagrangian] section");
  if (spec.initial && spec.boundary) {
    throw InputError(origin + ": [initial] and [boundary] are mutually exclusive");
  }
  if (!spec.initial && !spec.boundary) {
    throw InputError(origin + ": exactly one of [initial] or [boundary] is required");
  }
  return spec;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str(), path);
}

SearchBasis load_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open basis file '" + path + "'");
  SearchBasis basis;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(path, line_no, "expected 'tau = <expr>' or 'xi = <expr>'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "tau") {
        basis.tau.push_back(parse_expression(value, generator_alphabet()));
      } else if (key == "xi") {
        basis.xi.push_back(parse_expression(value, generator_alphabet()));
      } else {
        fail(path, line_no, "basis keys are tau or xi, got '" + key + "'");
      }
    } catch (const InputError& err) {
      fail(path, line_no, err.what());
    }
  }
  if (basis.tau.empty() && basis.xi.empty()) {
    throw InputError(path + ": basis file declares no tau or xi elements");
  }
  return basis;
}

}  // namespace tsvar
