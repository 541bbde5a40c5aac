// Command-line front end.  Every number it prints is produced by a library
// call; the CLI itself does no arithmetic.
//
// Exit codes: 0 success / all checks pass, 1 check failures, 2 usage or
// applicability errors (including parse errors), 3 enumeration infeasible.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ustat/common.hpp"
#include "ustat/exact.hpp"
#include "ustat/generate.hpp"
#include "ustat/json_io.hpp"
#include "ustat/mc.hpp"
#include "ustat/params.hpp"
#include "ustat/suite.hpp"

using namespace ustat;

namespace {

nlohmann::ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-") {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(output);
    if (!out) throw ApplicabilityError("cannot write '" + output + "'");
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

ExpBoundForm parse_form(const std::string& name) {
    if (name == "bernstein") return ExpBoundForm::Bernstein;
    if (name == "three-regime") return ExpBoundForm::ThreeRegime;
    if (name == "four-regime") return ExpBoundForm::FourRegime;
    if (name == "iid-four-regime") return ExpBoundForm::IidFourRegime;
    throw ApplicabilityError("unknown bound form '" + name + "'");
}

struct Common {
    int threads = 1;
    std::uint64_t cap = 10'000'000;
    EnumOptions enum_opts() const { return EnumOptions{cap, threads}; }
};

int cmd_gen(const std::string& family, int m, int n, int atoms, std::uint64_t seed,
            const std::string& output) {
    auto inst = generate_instance(family, m, n, atoms, seed);
    emit(serialize_instance(inst), output);
    return 0;
}

int cmd_bounds(const std::string& input, double p, std::optional<double> q,
               const Common& com, const std::string& output) {
    auto inst = parse_instance_file(input);
    nlohmann::ordered_json j;
    j["instance"] = inst.id;
    j["m"] = inst.m();
    j["n"] = inst.n();
    j["p"] = p;
    if (inst.m() == 1) {
        auto xi = xi_laws(inst);
        BoundParams bp = m1_params(xi);
        j["A"] = num(bp.A);
        j["C"] = num(bp.C);
        if (kernels_nonnegative(inst)) {
            j["delta0"] = num(delta0(xi));
            j["v0"] = num(v0(xi));
        }
    } else if (inst.m() == 2) {
        // the parameters presume degenerate kernels; for anything else report
        // the parameters of the degenerate part
        bool canonical = is_canonical(inst);
        BoundParams bp = canonical ? abcd_params(inst) : abcd_params(hoeffding_projection(inst));
        if (!canonical) j["projected"] = true;
        j["A"] = num(bp.A);
        j["B"] = num(bp.B);
        j["C"] = num(bp.C);
        j["D"] = num(bp.D);
        if (canonical && is_iid_instance(inst)) {
            BoundParams ip = iid_params(inst);
            j["iid"] = {{"A", num(ip.A)}, {"B", num(ip.B)}, {"C", num(ip.C)}, {"D", num(ip.D)}};
        }
    }
    if (q) {
        auto law = exact_distribution(inst, com.enum_opts());
        j["q"] = *q;
        j["t0"] = num(quantile_t0(law.abs(), *q)); // level-q upper quantile of |U|
    }
    emit(j.dump(2), output);
    return 0;
}

int cmd_verify(const std::string& input, const std::string& ineq, double p,
               std::optional<double> r, std::optional<double> constant,
               std::optional<double> x, const Common& com, const std::string& output) {
    auto inst = parse_instance_file(input);
    CheckOptions o;
    o.p = p;
    o.r = r;
    o.constant = constant;
    o.x = x;
    o.enumeration = com.enum_opts();
    auto reports = check_inequality(ineq, inst, o);
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw ApplicabilityError("cannot write '" + output + "'");
        if (ends_with(output, ".csv"))
            write_reports_csv(reports, out);
        else
            write_reports_jsonl(reports, out);
    }
    bool all_pass = true;
    for (const auto& rep : reports) {
        std::string row = rep.case_id;
        if (!rep.link.empty()) row += "." + rep.link;
        char buf[256];
        if (rep.x)
            std::snprintf(buf, sizeof buf, " x=%.17g", *rep.x);
        else
            std::snprintf(buf, sizeof buf, " p=%.17g", rep.p);
        row += buf;
        if (rep.r) {
            std::snprintf(buf, sizeof buf, " r=%.17g", *rep.r);
            row += buf;
        }
        std::snprintf(buf, sizeof buf, " lhs=%.17g rhs=%.17g constant=%.17g ratio=%.17g",
                      rep.lhs, rep.rhs, rep.constant, rep.ratio);
        row += buf;
        row += rep.vacuous ? " VACUOUS" : (rep.pass ? " PASS" : " FAIL");
        std::cout << row << '\n';
        if (!rep.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}

int cmd_fit(const std::vector<std::string>& inputs, const std::string& ineq, double p,
            std::optional<double> r, std::optional<double> x, const Common& com,
            const std::string& output) {
    std::vector<UStatInstance> corpus;
    for (const auto& path : inputs) corpus.push_back(parse_instance_file(path));
    CheckOptions o;
    o.p = p;
    o.r = r;
    o.x = x;
    o.enumeration = com.enum_opts();
    double c = fit_constant(ineq, corpus, o);
    nlohmann::ordered_json j;
    j["case"] = ineq;
    j["p"] = p;
    if (r) j["r"] = *r;
    if (x) j["x"] = *x;
    j["instances"] = corpus.size();
    j["constant"] = num(c);
    emit(j.dump(2), output);
    return 0;
}

int cmd_simulate(const std::string& input, const std::string& family, int n,
                 std::uint64_t reps, std::uint64_t seed, int grid_points, double confidence,
                 const std::string& form_name, std::optional<double> constant,
                 const Common& com, const std::string& output) {
    McOptions mo;
    mo.threads = com.threads;
    SampleSummary summary;
    std::optional<UStatInstance> inst;
    if (!input.empty()) {
        inst = parse_instance_file(input);
        summary = sample_ustat(*inst, reps, seed, mo);
    } else if (family == "gaussian-chaos") {
        std::vector<double> coeffs(static_cast<std::size_t>(n) * n, 1.0);
        summary = sample_gaussian_chaos(coeffs, n, reps, seed, mo);
    } else if (family == "bernoulli-product") {
        summary = sample_bernoulli_product(n, reps, seed, mo);
    } else {
        throw ApplicabilityError("simulate needs an instance file or --family "
                                 "gaussian-chaos|bernoulli-product");
    }
    auto grid = default_grid(summary, grid_points);
    if (grid.empty()) throw ApplicabilityError("simulate: degenerate sample, empty grid");
    auto curve = empirical_tail(summary, grid, confidence);

    nlohmann::ordered_json j;
    j["summary"] = nlohmann::ordered_json::parse(sample_summary_json(summary));
    if (!form_name.empty()) {
        if (!inst) throw ApplicabilityError("--form requires an instance file for parameters");
        ExpBoundForm form = parse_form(form_name);
        BoundParams bp;
        if (inst->m() == 1)
            bp = m1_params(xi_laws(*inst));
        else if (form == ExpBoundForm::IidFourRegime)
            bp = iid_params(*inst);
        else
            bp = abcd_params(*inst);
        auto tc = tail_vs_bound(curve, bp, form, constant);
        j["curve"] = nlohmann::ordered_json::parse(tail_curve_json(tc));
    } else {
        TailComparison plain;
        plain.curve = curve;
        j["curve"] = nlohmann::ordered_json::parse(tail_curve_json(plain));
    }
    if (auto slope = log_tail_slope(curve)) j["log_tail_slope"] = num(*slope);
    emit(j.dump(2), output);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact verification of moment and tail bounds for generalized "
                 "U-statistics over finite discrete models"};
    app.require_subcommand(1);

    Common com;
    app.add_option("--threads", com.threads, "worker cap (never changes results)");
    app.add_option("--cap", com.cap, "enumeration size cap");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a seeded instance file");
    std::string family = "nonneg";
    int m = 2, n = 2, atoms = 2;
    std::uint64_t seed = 0;
    std::string output;
    gen->add_option("--family", family,
                    "nonneg | canonical | symmetric-undecoupled | gaussian-chaos-analog | "
                    "bernoulli-product");
    gen->add_option("--m", m, "kernel order");
    gen->add_option("--n", n, "index range per coordinate");
    gen->add_option("--atoms", atoms, "atoms per law");
    gen->add_option("--seed", seed, "generator seed")->required();
    gen->add_option("-o,--output", output, "output path (default stdout)");

    // bounds
    auto* bounds = app.add_subcommand("bounds", "print bound parameters for an instance");
    std::string b_input;
    double b_p = 2.0;
    std::optional<double> b_q;
    std::string b_output;
    bounds->add_option("input", b_input, "instance file")->required();
    bounds->add_option("--p", b_p, "moment order to record");
    bounds->add_option("--q", b_q, "tail level for the quantile t0");
    bounds->add_option("-o,--output", b_output, "output path (default stdout)");

    // verify
    auto* verify = app.add_subcommand("verify", "check one registered inequality");
    std::string v_input, v_ineq, v_output;
    double v_p = 2.0;
    std::optional<double> v_r, v_c, v_x;
    verify->add_option("input", v_input, "instance file")->required();
    verify->add_option("--ineq", v_ineq, "case id (see README)")->required();
    verify->add_option("--p", v_p, "moment order");
    verify->add_option("--r", v_r, "secondary order where the case takes one");
    verify->add_option("--constant", v_c, "override the constant in the constant slot");
    verify->add_option("--x", v_x, "tail abscissa for tail cases");
    verify->add_option("-o,--output", v_output, "report file (.csv for CSV, else JSON lines)");

    // fit
    auto* fit = app.add_subcommand("fit", "fit the minimal constant over instance files");
    std::vector<std::string> f_inputs;
    std::string f_ineq, f_output;
    double f_p = 2.0;
    std::optional<double> f_r, f_x;
    fit->add_option("inputs", f_inputs, "instance files")->required()->expected(-1);
    fit->add_option("--ineq", f_ineq, "case id")->required();
    fit->add_option("--p", f_p, "moment order");
    fit->add_option("--r", f_r, "secondary order where the case takes one");
    fit->add_option("--x", f_x, "tail abscissa (tail cases; default grid otherwise)");
    fit->add_option("-o,--output", f_output, "output path (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "seeded Monte Carlo tail study");
    std::string s_input, s_family, s_form, s_output;
    int s_n = 50, s_grid = 32;
    std::uint64_t s_reps = 0, s_seed = 0;
    double s_conf = 0.95;
    std::optional<double> s_c;
    sim->add_option("input", s_input, "instance file (omit when using --family)");
    sim->add_option("--family", s_family, "gaussian-chaos | bernoulli-product");
    sim->add_option("--n", s_n, "size parameter for analytic families");
    sim->add_option("--reps", s_reps, "replicates")->required();
    sim->add_option("--seed", s_seed, "stream seed")->required();
    sim->add_option("--grid", s_grid, "points in the default comparison grid");
    sim->add_option("--confidence", s_conf, "Wilson interval confidence");
    sim->add_option("--form", s_form,
                    "bernstein | three-regime | four-regime | iid-four-regime");
    sim->add_option("--constant", s_c, "bound constant (fitted when omitted)");
    sim->add_option("-o,--output", s_output, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(family, m, n, atoms, seed, output);
        if (*bounds) return cmd_bounds(b_input, b_p, b_q, com, b_output);
        if (*verify) return cmd_verify(v_input, v_ineq, v_p, v_r, v_c, v_x, com, v_output);
        if (*fit) return cmd_fit(f_inputs, f_ineq, f_p, f_r, f_x, com, f_output);
        if (*sim)
            return cmd_simulate(s_input, s_family, s_n, s_reps, s_seed, s_grid, s_conf,
                                s_form, s_c, com, s_output);
    } catch (const EnumerationCapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ApplicabilityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
