// Batch front end: verification suites, cross-section scans, lattice checks.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "cqed/observables.hpp"
#include "cqed/reports.hpp"

using json = nlohmann::ordered_json;
using namespace cqed;

namespace {

constexpr const char* kSchemaVersion = "1";
constexpr const char* kCsvHeader = "process,sqrt_s,cos_theta,value,mc_error,units";

struct RunConfig {
    std::string process = "eemumu";
    double sqrt_s = 3 * 0.105658;
    int angles = 19;
    std::uint64_t mc_samples = 0; // 0: angle scan; >0: MC total
    std::uint64_t seed = 1;
    double m_e = 0.000511;
    double m_mu = 0.105658;
    double alpha = 1.0 / 137.035999;
    std::string out;
    std::string format = "csv";
    std::string units = "gev2"; // or "nb"
};

int fail_usage(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return 2;
}

bool load_config(const std::string& path, RunConfig& cfg, std::string& err) {
    std::ifstream in(path);
    if (!in) {
        err = "cannot open config file " + path;
        return false;
    }
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        err = std::string("config parse error: ") + e.what();
        return false;
    }
    for (auto& [key, value] : j.items()) {
        if (key == "process") cfg.process = value.get<std::string>();
        else if (key == "sqrt_s") cfg.sqrt_s = value.get<double>();
        else if (key == "angles") cfg.angles = value.get<int>();
        else if (key == "mc_samples") cfg.mc_samples = value.get<std::uint64_t>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "m_e") cfg.m_e = value.get<double>();
        else if (key == "m_mu") cfg.m_mu = value.get<double>();
        else if (key == "alpha") cfg.alpha = value.get<double>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "format") cfg.format = value.get<std::string>();
        else if (key == "units") cfg.units = value.get<std::string>();
        else {
            err = "unknown config key: " + key;
            return false;
        }
    }
    return true;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

int write_output(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream f(out);
    if (!f) {
        std::cerr << "error: cannot write " << out << "\n";
        return 1;
    }
    f << text;
    return 0;
}

json suite_to_json(const SuiteReport& rep) {
    json checks = json::array();
    for (auto& c : rep.checks)
        checks.push_back({{"name", c.name},
                          {"max_residual", c.residual},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    return json{{"schema_version", kSchemaVersion},
                {"suite", rep.suite},
                {"checks", checks},
                {"pass", rep.pass}};
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out) {
    std::vector<SuiteReport> reports;
    if (suite == "brackets") {
        reports.push_back(run_suite_brackets(seed));
    } else if (suite == "spinors") {
        reports.push_back(run_suite_spinors(seed));
    } else if (suite == "amplitudes") {
        reports.push_back(run_suite_amplitudes(seed));
    } else if (suite == "all") {
        reports.push_back(run_suite_brackets(seed));
        reports.push_back(run_suite_spinors(seed));
        reports.push_back(run_suite_amplitudes(seed));
    } else {
        return fail_usage("unknown suite '" + suite + "' (brackets|spinors|amplitudes|all)");
    }
    bool pass = true;
    json jr = json::array();
    for (auto& r : reports) {
        pass = pass && r.pass;
        jr.push_back(suite_to_json(r));
        for (auto& c : r.checks)
            std::cerr << (c.pass ? "ok   " : "FAIL ") << r.suite << "." << c.name
                      << "  residual=" << c.residual << " tol=" << c.tolerance << "\n";
    }
    json top{{"schema_version", kSchemaVersion}, {"suites", jr}, {"pass", pass}};
    int rc = write_output(out, top.dump(2) + "\n");
    if (rc != 0) return rc;
    return pass ? 0 : 1;
}

int cmd_scan(const RunConfig& cfg) {
    ProcessParams par;
    par.m_e = cfg.m_e;
    par.m_mu = cfg.m_mu;
    par.e = coupling_for_alpha(cfg.alpha);

    ScatterProcess proc;
    if (cfg.process == "compton") proc = ScatterProcess::Compton;
    else if (cfg.process == "eemumu") proc = ScatterProcess::EeToMuMu;
    else return fail_usage("unknown process '" + cfg.process + "' (compton|eemumu)");
    if (cfg.format != "csv" && cfg.format != "json")
        return fail_usage("unknown format '" + cfg.format + "' (csv|json)");
    if (cfg.units != "gev2" && cfg.units != "nb")
        return fail_usage("unknown units '" + cfg.units + "' (gev2|nb)");
    const double unit_scale = cfg.units == "nb" ? gev2_to_nb : 1.0;
    const std::string unit_label = cfg.units == "nb" ? "nb" : "GeV^-2";

    std::vector<CrossSectionPoint> points;
    try {
        // validate thresholds before entering any parallel region
        if (proc == ScatterProcess::EeToMuMu && cfg.sqrt_s < 2 * par.m_mu)
            throw KinematicsError("below the muon pair threshold");
        if (proc == ScatterProcess::Compton && cfg.sqrt_s <= par.m_e)
            throw KinematicsError("Compton CM energy below the electron mass");
        if (cfg.mc_samples > 0) {
            auto r = total_sigma(proc, par, cfg.sqrt_s, cfg.mc_samples, cfg.seed);
            CrossSectionPoint pt;
            pt.process = cfg.process;
            pt.sqrt_s = cfg.sqrt_s;
            pt.total = true;
            pt.value = r.sigma;
            pt.mc_error = r.mc_error;
            points.push_back(pt);
        } else {
            if (cfg.angles < 1) return fail_usage("angle count must be positive");
            points.resize(cfg.angles);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < cfg.angles; ++i) {
                double c = cfg.angles == 1 ? 0.0 : -1.0 + 2.0 * i / double(cfg.angles - 1);
                // keep strictly inside the physical range for the endpoints
                c = std::clamp(c, -0.999999, 0.999999);
                points[i] = dsigma_domega(proc, par, cfg.sqrt_s, c);
                points[i].process = cfg.process;
            }
        }
    } catch (const KinematicsError& e) {
        std::cerr << "kinematics: " << e.what() << "\n";
        return 1;
    }

    std::string text;
    if (cfg.format == "csv") {
        std::ostringstream os;
        os << kCsvHeader << "\n";
        for (auto& p : points)
            os << p.process << "," << fmt(p.sqrt_s) << ","
               << (p.total ? std::string("total") : fmt(p.cos_theta)) << ","
               << fmt(p.value * unit_scale) << "," << fmt(p.mc_error * unit_scale) << ","
               << unit_label << "\n";
        text = os.str();
    } else {
        json rows = json::array();
        for (auto& p : points)
            rows.push_back({{"process", p.process},
                            {"sqrt_s", p.sqrt_s},
                            {"cos_theta", p.total ? json("total") : json(p.cos_theta)},
                            {"value", p.value * unit_scale},
                            {"mc_error", p.mc_error * unit_scale},
                            {"units", unit_label}});
        json top{{"schema_version", kSchemaVersion}, {"points", rows}};
        text = top.dump(2) + "\n";
    }
    return write_output(cfg.out, text);
}

int cmd_lattice_check(int n, std::uint64_t seed, const std::string& out) {
    LatticeCheckReport rep;
    try {
        rep = run_lattice_check(n, seed);
    } catch (const std::invalid_argument& e) {
        return fail_usage(e.what());
    }
    auto fams = [](const std::vector<LatticeFamilyInfo>& fs) {
        json a = json::array();
        for (auto& f : fs)
            a.push_back({{"name", f.name}, {"members", f.members}, {"class", f.cls}});
        return a;
    };
    json pairs = json::array();
    for (auto& [a, b] : rep.pairs) pairs.push_back({a, b});
    json top{{"schema_version", kSchemaVersion},
             {"n", rep.n},
             {"spacing", rep.spacing},
             {"coupling", rep.coupling},
             {"mass", rep.mass},
             {"arithmetic", rep.exact_mode ? "exact" : "float"},
             {"consistency",
              {{"closed_no_gauge", rep.consistency_closed_no_gauge},
               {"closed_coulomb", rep.consistency_closed_gauge},
               {"multiplier_notes", rep.multiplier_notes}}},
             {"classification",
              {{"no_gauge", fams(rep.families_no_gauge)},
               {"first_class_no_gauge", rep.first_class_no_gauge},
               {"coulomb", fams(rep.families_gauge)},
               {"first_class_coulomb", rep.first_class_gauge},
               {"pairs", pairs}}},
             {"residuals",
              {{"dirac_bracket_annihilation", rep.gdb_annihilation_residual},
               {"transverse_commutator", rep.transverse_residual}}},
             {"equations_of_motion", rep.eom_ok},
             {"gauge_action", rep.gauge_action_ok},
             {"pass", rep.pass}};
    int rc = write_output(out, top.dump(2) + "\n");
    if (rc != 0) return rc;
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coulomb-gauge QED toolkit: constraint algebra on the lattice and "
                 "tree-level scattering checks"};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    std::string suite = "all";
    std::uint64_t vseed = 1;
    std::string vout;
    verify->add_option("--suite", suite, "brackets|spinors|amplitudes|all");
    verify->add_option("--seed", vseed, "seed for randomized checks");
    verify->add_option("--out", vout, "write the JSON report here");

    // scan
    auto* scan = app.add_subcommand("scan", "cross-section scan or MC total");
    RunConfig cfg;
    std::string config_path;
    scan->add_option("--config", config_path, "JSON config file (flat keys)");
    auto* o_process = scan->add_option("--process", cfg.process, "compton|eemumu");
    auto* o_sqrt_s = scan->add_option("--sqrt-s", cfg.sqrt_s, "CM energy in GeV");
    auto* o_angles = scan->add_option("--angles", cfg.angles, "number of cos(theta) points");
    auto* o_mc = scan->add_option("--mc-samples", cfg.mc_samples, "MC samples for a total");
    auto* o_seed = scan->add_option("--seed", cfg.seed, "MC seed");
    auto* o_out = scan->add_option("--out", cfg.out, "output path (default stdout)");
    auto* o_format = scan->add_option("--format", cfg.format, "csv|json");
    auto* o_me = scan->add_option("--m-e", cfg.m_e, "electron mass, GeV");
    auto* o_mmu = scan->add_option("--m-mu", cfg.m_mu, "muon mass, GeV");
    auto* o_alpha = scan->add_option("--alpha", cfg.alpha, "fine-structure constant");
    auto* o_units = scan->add_option("--units", cfg.units, "gev2|nb");

    // lattice-check
    auto* lat = app.add_subcommand("lattice-check", "constraint-algebra report");
    int n = 4;
    std::uint64_t lseed = 1;
    std::string lout;
    lat->add_option("--n", n, "lattice sites per axis (2..6)");
    lat->add_option("--seed", lseed, "seed for sampled residuals");
    lat->add_option("--out", lout, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (verify->parsed()) return cmd_verify(suite, vseed, vout);

    if (scan->parsed()) {
        RunConfig from_file;
        if (!config_path.empty()) {
            std::string err;
            if (!load_config(config_path, from_file, err)) return fail_usage(err);
        }
        // flags override file values
        RunConfig merged = from_file;
        if (o_process->count()) merged.process = cfg.process;
        if (o_sqrt_s->count()) merged.sqrt_s = cfg.sqrt_s;
        if (o_angles->count()) merged.angles = cfg.angles;
        if (o_mc->count()) merged.mc_samples = cfg.mc_samples;
        if (o_seed->count()) merged.seed = cfg.seed;
        if (o_out->count()) merged.out = cfg.out;
        if (o_format->count()) merged.format = cfg.format;
        if (o_me->count()) merged.m_e = cfg.m_e;
        if (o_mmu->count()) merged.m_mu = cfg.m_mu;
        if (o_alpha->count()) merged.alpha = cfg.alpha;
        if (o_units->count()) merged.units = cfg.units;
        return cmd_scan(merged);
    }

    if (lat->parsed()) return cmd_lattice_check(n, lseed, lout);
    return 2;
}
