#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cqed {

struct CheckResult {
    std::string name;
    double residual = 0;
    double tolerance = 0;
    bool pass = false;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    bool pass = true;

    void add(const std::string& name, double residual, double tolerance) {
        CheckResult c{name, residual, tolerance, residual <= tolerance};
        pass = pass && c.pass;
        checks.push_back(std::move(c));
    }
    void add_flag(const std::string& name, bool ok) { add(name, ok ? 0.0 : 1.0, 0.5); }
};

SuiteReport run_suite_brackets(std::uint64_t seed);
SuiteReport run_suite_spinors(std::uint64_t seed);
SuiteReport run_suite_amplitudes(std::uint64_t seed);

struct LatticeFamilyInfo {
    std::string name;
    int members = 0;
    std::string cls;
};

struct LatticeCheckReport {
    int n = 0;
    double spacing = 1.0;
    double coupling = 0.3;
    double mass = 1.0;
    bool exact_mode = true;

    bool consistency_closed_no_gauge = false;
    bool consistency_closed_gauge = false;
    std::vector<LatticeFamilyInfo> families_no_gauge;
    std::vector<LatticeFamilyInfo> families_gauge;
    int first_class_no_gauge = 0;
    int first_class_gauge = 0;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> multiplier_notes;

    double gdb_annihilation_residual = 0;
    double transverse_residual = 0;
    bool eom_ok = false;
    bool gauge_action_ok = false;
    bool pass = false;
};

LatticeCheckReport run_lattice_check(int n, std::uint64_t seed);

} // namespace cqed
