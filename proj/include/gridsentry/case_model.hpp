#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridsentry/errors.hpp"

namespace gridsentry {

enum class BusType { Slack, PV, PQ };
enum class BranchStatus { InService, OutOfService };
enum class CaseFormat { MatpowerM, NativeJson };

struct Bus {
  int id = 0;             // external bus number, unique, positive
  BusType type = BusType::PQ;
  double Pd = 0.0;        // MW
  double Qd = 0.0;        // MVAr
  double Gs = 0.0;        // MW at V = 1 p.u.
  double Bs = 0.0;        // MVAr at V = 1 p.u.
  double Vm = 1.0;        // p.u.
  double Va = 0.0;        // radians (converted from degrees on load)
  double base_kV = 0.0;
};

struct Branch {
  int from_bus = 0;       // external ids
  int to_bus = 0;
  double r = 0.0;         // series resistance, p.u.
  double x = 0.0;         // series reactance, p.u.
  double b = 0.0;         // total line charging susceptance, p.u.
  double tap_ratio = 1.0;
  double phase_shift = 0.0;  // radians
  BranchStatus status = BranchStatus::InService;

  bool in_service() const { return status == BranchStatus::InService; }
};

// Per-bus aggregate of the MATPOWER gen table. Only what the power flow
// needs: net injection and the voltage setpoint at PV/slack buses.
struct Generator {
  int bus = 0;            // external id
  double Pg = 0.0;        // MW
  double Qg = 0.0;        // MVAr
  double Vg = 1.0;        // p.u. setpoint
  bool in_service = true;
};

// Immutable after load_case; safe to share across threads.
struct CaseData {
  std::string name;
  double base_MVA = 100.0;
  std::vector<Bus> buses;         // internal index = position
  std::vector<Branch> branches;
  std::vector<Generator> gens;

  int N = 0;                      // bus count
  int K = 0;                      // in-service branch count
  int slack = 0;                  // internal index of the slack bus
  bool connected = true;          // in-service branches span all buses

  // Branches (by position in `branches`) whose in-service series reactance
  // is negative; nonempty voids the resistance-distance metric guarantee.
  std::vector<int> negative_reactance_branches;

  // Dense 0-based index for an external bus id; throws ValidationError on
  // unknown ids. Bijective with the ids in `buses`.
  int internal_index(int external_id) const;
  int external_id(int internal_index) const { return buses.at(internal_index).id; }

  // In-service generation aggregated per internal bus index, MW/MVAr.
  double total_Pg(int internal_index) const;
  double total_Qg(int internal_index) const;
  // Voltage setpoint for PV/slack buses: the first in-service generator's
  // Vg, falling back to the bus Vm when the bus has no generator.
  double voltage_setpoint(int internal_index) const;

 private:
  friend CaseData finalize_case(std::string name, double base_MVA,
                                std::vector<Bus> buses,
                                std::vector<Branch> branches,
                                std::vector<Generator> gens, bool strict);
  std::unordered_map<int, int> index_of_;
};

// Validates and freezes a parsed case: checks id uniqueness, referential
// integrity, slack uniqueness, positive Vm/base quantities; converts nothing
// (angle conversion is the parsers' job). strict makes negative in-service
// series reactance fatal instead of flagged.
CaseData finalize_case(std::string name, double base_MVA, std::vector<Bus> buses,
                       std::vector<Branch> branches, std::vector<Generator> gens,
                       bool strict);

CaseData load_case(std::istream& source, CaseFormat format, bool strict = false);
CaseData load_case_file(const std::string& path, CaseFormat format,
                        bool strict = false);

// Native JSON, schema documented in the README. Parsing the output yields an
// identical CaseData.
std::string to_native_json(const CaseData& c);

}  // namespace gridsentry
