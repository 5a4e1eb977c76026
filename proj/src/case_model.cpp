#include "gridsentry/case_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace gridsentry {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// ---------------------------------------------------------------------------
// MATPOWER .m subset: `mpc.<field> = <scalar|'string'|[matrix]>;` statements
// plus an optional `function mpc = <name>` header. Anything else is rejected
// with a position-annotated error.
// ---------------------------------------------------------------------------

class MScanner {
 public:
  explicit MScanner(std::string_view src) : src_(src) {}

  void skip_ws() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        ++pos_;
      } else if (c == '.' && pos_ + 2 < src_.size() && src_[pos_ + 1] == '.' &&
                 src_[pos_ + 2] == '.') {
        pos_ += 3;  // MATLAB line continuation
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= src_.size();
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  void advance() { ++pos_; }
  int line() const { return line_; }

  bool consume(char c) {
    skip_ws();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c))
      throw ParseError(std::string("expected '") + c + "' " + what, line_);
  }

  std::string identifier() {
    skip_ws();
    std::string out;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_' || src_[pos_] == '.')) {
      out.push_back(src_[pos_++]);
    }
    return out;
  }

  double number() {
    skip_ws();
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("expected a number", line_);
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  bool at_number() {
    skip_ws();
    const char c = peek();
    return c == '-' || c == '+' || c == '.' ||
           std::isdigit(static_cast<unsigned char>(c));
  }

  std::string quoted_string() {
    skip_ws();
    expect('\'', "to open string");
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '\'') out.push_back(src_[pos_++]);
    expect('\'', "to close string");
    return out;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

struct MatpowerDoc {
  std::string name = "case";
  bool has_base = false;
  double base_MVA = 0.0;
  std::vector<std::vector<double>> bus, branch, gen;
};

// Rows end at ';' or at a line break. Rows may be ragged while scanning;
// rectangularity of the tables we consume is enforced by the column checks
// below.
std::vector<std::vector<double>> parse_matrix_lines(MScanner& s) {
  std::vector<std::vector<double>> rows;
  s.expect('[', "to open matrix");
  std::vector<double> row;
  int row_line = -1;
  while (true) {
    if (s.consume(']')) break;
    if (s.consume(';')) {
      if (!row.empty()) rows.push_back(std::move(row));
      row.clear();
      row_line = -1;
      continue;
    }
    if (!s.at_number()) {
      if (s.eof()) throw ParseError("unterminated matrix", s.line());
      throw ParseError(std::string("unexpected character '") + s.peek() +
                           "' in matrix",
                       s.line());
    }
    const int line_now = s.line();
    if (row_line >= 0 && line_now != row_line && !row.empty()) {
      rows.push_back(std::move(row));
      row.clear();
    }
    row_line = line_now;
    row.push_back(s.number());
  }
  if (!row.empty()) rows.push_back(std::move(row));
  return rows;
}

MatpowerDoc parse_matpower(std::string_view text) {
  MatpowerDoc doc;
  MScanner s(text);
  while (!s.eof()) {
    const int stmt_line = s.line();
    std::string ident = s.identifier();
    if (ident.empty())
      throw ParseError(std::string("unexpected character '") + s.peek() + "'",
                       s.line());
    if (ident == "function") {
      // function mpc = case14
      (void)s.identifier();
      s.expect('=', "after function output");
      doc.name = s.identifier();
      if (doc.name.empty())
        throw ParseError("expected case name after 'function mpc ='",
                         s.line());
      continue;
    }
    if (ident.rfind("mpc.", 0) != 0)
      throw ParseError("expected 'mpc.<field> = ...', got '" + ident + "'",
                       stmt_line);
    const std::string field = ident.substr(4);
    s.expect('=', ("after " + ident).c_str());
    s.skip_ws();
    if (s.peek() == '[') {
      auto rows = parse_matrix_lines(s);
      if (field == "bus")
        doc.bus = std::move(rows);
      else if (field == "branch")
        doc.branch = std::move(rows);
      else if (field == "gen")
        doc.gen = std::move(rows);
      // other numeric tables (gencost, ...) are parsed and dropped
    } else if (s.peek() == '\'') {
      std::string v = s.quoted_string();
      (void)v;  // mpc.version and friends
    } else if (s.at_number()) {
      const double v = s.number();
      if (field == "baseMVA") {
        doc.base_MVA = v;
        doc.has_base = true;
      }
    } else if (s.peek() == '{') {
      throw ParseError("cell arrays are not supported (field mpc." + field +
                           ")",
                       stmt_line);
    } else {
      throw ParseError("unsupported value for mpc." + field, stmt_line);
    }
    s.expect(';', "to end statement");
  }
  if (!doc.has_base) throw ParseError("missing mpc.baseMVA");
  if (doc.bus.empty()) throw ParseError("missing or empty mpc.bus");
  if (doc.branch.empty()) throw ParseError("missing or empty mpc.branch");
  return doc;
}

double col(const std::vector<double>& row, std::size_t idx, const char* table,
           std::size_t row_no) {
  if (idx >= row.size())
    throw ParseError("mpc." + std::string(table) + " row " +
                     std::to_string(row_no + 1) + " has " +
                     std::to_string(row.size()) + " columns, need at least " +
                     std::to_string(idx + 1));
  return row[idx];
}

int icol(const std::vector<double>& row, std::size_t idx, const char* table,
         std::size_t row_no) {
  const double v = col(row, idx, table, row_no);
  return static_cast<int>(std::llround(v));
}

CaseData case_from_matpower(const MatpowerDoc& doc, bool strict) {
  std::vector<Bus> buses;
  buses.reserve(doc.bus.size());
  for (std::size_t i = 0; i < doc.bus.size(); ++i) {
    const auto& r = doc.bus[i];
    Bus b;
    b.id = icol(r, 0, "bus", i);
    const int type = icol(r, 1, "bus", i);
    switch (type) {
      case 1: b.type = BusType::PQ; break;
      case 2: b.type = BusType::PV; break;
      case 3: b.type = BusType::Slack; break;
      default:
        throw ValidationError("bus " + std::to_string(b.id) +
                              ": unsupported bus type " + std::to_string(type));
    }
    b.Pd = col(r, 2, "bus", i);
    b.Qd = col(r, 3, "bus", i);
    b.Gs = col(r, 4, "bus", i);
    b.Bs = col(r, 5, "bus", i);
    b.Vm = col(r, 7, "bus", i);
    b.Va = col(r, 8, "bus", i) * kDegToRad;
    b.base_kV = col(r, 9, "bus", i);
    if (b.base_kV <= 0.0) b.base_kV = 1.0;  // MATPOWER uses 0 for unspecified
    buses.push_back(b);
  }

  std::vector<Branch> branches;
  branches.reserve(doc.branch.size());
  for (std::size_t i = 0; i < doc.branch.size(); ++i) {
    const auto& r = doc.branch[i];
    Branch br;
    br.from_bus = icol(r, 0, "branch", i);
    br.to_bus = icol(r, 1, "branch", i);
    br.r = col(r, 2, "branch", i);
    br.x = col(r, 3, "branch", i);
    br.b = col(r, 4, "branch", i);
    const double tap = col(r, 8, "branch", i);
    br.tap_ratio = tap == 0.0 ? 1.0 : tap;
    br.phase_shift = col(r, 9, "branch", i) * kDegToRad;
    br.status = icol(r, 10, "branch", i) != 0 ? BranchStatus::InService
                                              : BranchStatus::OutOfService;
    branches.push_back(br);
  }

  std::vector<Generator> gens;
  gens.reserve(doc.gen.size());
  for (std::size_t i = 0; i < doc.gen.size(); ++i) {
    const auto& r = doc.gen[i];
    Generator g;
    g.bus = icol(r, 0, "gen", i);
    g.Pg = col(r, 1, "gen", i);
    g.Qg = col(r, 2, "gen", i);
    g.Vg = col(r, 5, "gen", i);
    g.in_service = icol(r, 7, "gen", i) > 0;
    gens.push_back(g);
  }

  return finalize_case(doc.name, doc.base_MVA, std::move(buses),
                       std::move(branches), std::move(gens), strict);
}

// ---------------------------------------------------------------------------
// Native JSON
// ---------------------------------------------------------------------------

using nlohmann::json;

BusType bus_type_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(c)));
  if (t == "slack" || t == "ref") return BusType::Slack;
  if (t == "pv") return BusType::PV;
  if (t == "pq") return BusType::PQ;
  throw ParseError("unknown bus type \"" + s + "\"");
}

std::string bus_type_to_string(BusType t) {
  switch (t) {
    case BusType::Slack: return "slack";
    case BusType::PV: return "PV";
    case BusType::PQ: return "PQ";
  }
  return "PQ";
}

CaseData case_from_json(std::string_view text, bool strict) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    CaseData out;
    std::vector<Bus> buses;
    for (const auto& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.type = bus_type_from_string(jb.at("type").get<std::string>());
      b.Pd = jb.value("Pd", 0.0);
      b.Qd = jb.value("Qd", 0.0);
      b.Gs = jb.value("Gs", 0.0);
      b.Bs = jb.value("Bs", 0.0);
      b.Vm = jb.value("Vm", 1.0);
      // Va_rad, when present, is the exact stored angle; Va_deg is the
      // human-readable field.
      if (jb.contains("Va_rad"))
        b.Va = jb.at("Va_rad").get<double>();
      else
        b.Va = jb.value("Va_deg", 0.0) * kDegToRad;
      b.base_kV = jb.value("base_kV", 1.0);
      buses.push_back(b);
    }
    std::vector<Branch> branches;
    for (const auto& jr : doc.at("branches")) {
      Branch br;
      br.from_bus = jr.at("from").get<int>();
      br.to_bus = jr.at("to").get<int>();
      br.r = jr.value("r", 0.0);
      br.x = jr.at("x").get<double>();
      br.b = jr.value("b", 0.0);
      br.tap_ratio = jr.value("tap", 1.0);
      if (br.tap_ratio == 0.0) br.tap_ratio = 1.0;
      if (jr.contains("shift_rad"))
        br.phase_shift = jr.at("shift_rad").get<double>();
      else
        br.phase_shift = jr.value("shift_deg", 0.0) * kDegToRad;
      br.status = jr.value("status", 1) != 0 ? BranchStatus::InService
                                             : BranchStatus::OutOfService;
      branches.push_back(br);
    }
    std::vector<Generator> gens;
    if (doc.contains("gens")) {
      for (const auto& jg : doc.at("gens")) {
        Generator g;
        g.bus = jg.at("bus").get<int>();
        g.Pg = jg.value("Pg", 0.0);
        g.Qg = jg.value("Qg", 0.0);
        g.Vg = jg.value("Vg", 1.0);
        g.in_service = jg.value("status", 1) != 0;
        gens.push_back(g);
      }
    }
    return finalize_case(doc.value("name", "case"), doc.at("base_MVA"),
                         std::move(buses), std::move(branches), std::move(gens),
                         strict);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

std::string to_native_json(const CaseData& c) {
  json doc;
  doc["name"] = c.name;
  doc["base_MVA"] = c.base_MVA;
  json jbuses = json::array();
  for (const auto& b : c.buses) {
    json jb;
    jb["id"] = b.id;
    jb["type"] = bus_type_to_string(b.type);
    jb["Pd"] = b.Pd;
    jb["Qd"] = b.Qd;
    jb["Gs"] = b.Gs;
    jb["Bs"] = b.Bs;
    jb["Vm"] = b.Vm;
    jb["Va_deg"] = b.Va * kRadToDeg;
    jb["Va_rad"] = b.Va;
    jb["base_kV"] = b.base_kV;
    jbuses.push_back(std::move(jb));
  }
  doc["buses"] = std::move(jbuses);
  json jbranches = json::array();
  for (const auto& br : c.branches) {
    json jr;
    jr["from"] = br.from_bus;
    jr["to"] = br.to_bus;
    jr["r"] = br.r;
    jr["x"] = br.x;
    jr["b"] = br.b;
    jr["tap"] = br.tap_ratio;
    jr["shift_deg"] = br.phase_shift * kRadToDeg;
    jr["shift_rad"] = br.phase_shift;
    jr["status"] = br.in_service() ? 1 : 0;
    jbranches.push_back(std::move(jr));
  }
  doc["branches"] = std::move(jbranches);
  if (!c.gens.empty()) {
    json jgens = json::array();
    for (const auto& g : c.gens) {
      json jg;
      jg["bus"] = g.bus;
      jg["Pg"] = g.Pg;
      jg["Qg"] = g.Qg;
      jg["Vg"] = g.Vg;
      jg["status"] = g.in_service ? 1 : 0;
      jgens.push_back(std::move(jg));
    }
    doc["gens"] = std::move(jgens);
  }
  return doc.dump(2) + "\n";
}

int CaseData::internal_index(int external_id) const {
  auto it = index_of_.find(external_id);
  if (it == index_of_.end())
    throw ValidationError("unknown bus id " + std::to_string(external_id));
  return it->second;
}

double CaseData::total_Pg(int idx) const {
  const int id = buses.at(idx).id;
  double total = 0.0;
  for (const auto& g : gens)
    if (g.in_service && g.bus == id) total += g.Pg;
  return total;
}

double CaseData::total_Qg(int idx) const {
  const int id = buses.at(idx).id;
  double total = 0.0;
  for (const auto& g : gens)
    if (g.in_service && g.bus == id) total += g.Qg;
  return total;
}

double CaseData::voltage_setpoint(int idx) const {
  const int id = buses.at(idx).id;
  for (const auto& g : gens)
    if (g.in_service && g.bus == id) return g.Vg;
  return buses.at(idx).Vm;
}

CaseData finalize_case(std::string name, double base_MVA, std::vector<Bus> buses,
                       std::vector<Branch> branches, std::vector<Generator> gens,
                       bool strict) {
  if (buses.size() < 2)
    throw ValidationError("a case needs at least 2 buses, got " +
                          std::to_string(buses.size()));
  if (!(base_MVA > 0.0)) throw ValidationError("base_MVA must be positive");

  CaseData c;
  c.name = std::move(name);
  c.base_MVA = base_MVA;
  c.N = static_cast<int>(buses.size());

  int slack_count = 0;
  for (int i = 0; i < c.N; ++i) {
    const Bus& b = buses[i];
    if (b.id <= 0)
      throw ValidationError("bus ids must be positive, got " +
                            std::to_string(b.id));
    if (!c.index_of_.emplace(b.id, i).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    if (!(b.Vm > 0.0))
      throw ValidationError("bus " + std::to_string(b.id) +
                            ": Vm must be positive");
    if (!(b.base_kV > 0.0))
      throw ValidationError("bus " + std::to_string(b.id) +
                            ": base_kV must be positive");
    if (b.type == BusType::Slack) {
      c.slack = i;
      ++slack_count;
    }
  }
  if (slack_count == 0) throw ValidationError("no slack bus");
  if (slack_count > 1)
    throw ValidationError("multiple slack buses (" +
                          std::to_string(slack_count) + ")");

  for (std::size_t k = 0; k < branches.size(); ++k) {
    Branch& br = branches[k];
    auto require_bus = [&](int id) {
      if (c.index_of_.find(id) == c.index_of_.end())
        throw ValidationError("unknown bus id " + std::to_string(id));
    };
    require_bus(br.from_bus);
    require_bus(br.to_bus);
    if (br.from_bus == br.to_bus)
      throw ValidationError("branch " + std::to_string(k + 1) +
                            " connects bus " + std::to_string(br.from_bus) +
                            " to itself");
    if (!(br.tap_ratio > 0.0))
      throw ValidationError("branch " + std::to_string(k + 1) +
                            ": tap ratio must be positive");
    if (br.in_service()) {
      ++c.K;
      if (br.r == 0.0 && br.x == 0.0)
        throw ValidationError("branch " + std::to_string(k + 1) + " (" +
                              std::to_string(br.from_bus) + "-" +
                              std::to_string(br.to_bus) +
                              ") has zero series impedance");
      if (br.x < 0.0) {
        if (strict)
          throw ValidationError(
              "branch " + std::to_string(k + 1) + " (" +
              std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) +
              ") has negative series reactance (strict mode)");
        c.negative_reactance_branches.push_back(static_cast<int>(k));
      }
    }
  }

  for (const auto& g : gens) {
    if (c.index_of_.find(g.bus) == c.index_of_.end())
      throw ValidationError("generator references unknown bus id " +
                            std::to_string(g.bus));
  }

  // Connectivity flag (disconnected cases stay legal, K >= N-1 not required).
  {
    std::vector<int> parent(c.N);
    for (int i = 0; i < c.N; ++i) parent[i] = i;
    auto find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (const auto& br : branches)
      if (br.in_service())
        parent[find(c.index_of_.at(br.from_bus))] =
            find(c.index_of_.at(br.to_bus));
    const int root = find(0);
    for (int i = 1; i < c.N; ++i)
      if (find(i) != root) {
        c.connected = false;
        break;
      }
  }

  c.buses = std::move(buses);
  c.branches = std::move(branches);
  c.gens = std::move(gens);
  return c;
}

CaseData load_case(std::istream& source, CaseFormat format, bool strict) {
  std::ostringstream ss;
  ss << source.rdbuf();
  const std::string text = ss.str();
  if (format == CaseFormat::MatpowerM)
    return case_from_matpower(parse_matpower(text), strict);
  return case_from_json(text, strict);
}

CaseData load_case_file(const std::string& path, CaseFormat format,
                        bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open case file: " + path);
  return load_case(in, format, strict);
}

}  // namespace gridsentry
