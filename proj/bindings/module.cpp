// Python bindings for the main operations: instance generation and IO, the
// exact enumeration engine, bound parameters, the inequality registry, and
// the seeded sampler.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "ustat/common.hpp"
#include "ustat/exact.hpp"
#include "ustat/generate.hpp"
#include "ustat/instance.hpp"
#include "ustat/json_io.hpp"
#include "ustat/mc.hpp"
#include "ustat/params.hpp"
#include "ustat/suite.hpp"

namespace py = pybind11;
using namespace ustat;

namespace {

EnumOptions enum_opts(std::uint64_t cap, int threads) {
    EnumOptions o;
    o.cap = cap;
    o.threads = threads;
    return o;
}

CheckOptions check_opts(double p, std::optional<double> r, std::optional<double> constant,
                        std::optional<double> x, std::uint64_t cap, int threads) {
    CheckOptions o;
    o.p = p;
    o.r = r;
    o.constant = constant;
    o.x = x;
    o.enumeration = enum_opts(cap, threads);
    return o;
}

py::dict report_dict(const VerificationReport& r) {
    py::dict d;
    d["case"] = r.case_id;
    if (!r.link.empty()) d["link"] = r.link;
    d["instance"] = r.instance_id;
    d["m"] = r.m;
    d["n"] = r.n;
    d["p"] = r.p;
    if (r.r) d["r"] = *r.r;
    if (r.x) d["x"] = *r.x;
    d["lhs"] = r.lhs;
    d["rhs"] = r.rhs;
    d["constant"] = r.constant;
    d["ratio"] = r.ratio;
    d["pass"] = r.pass;
    d["vacuous"] = r.vacuous;
    if (!r.terms.empty()) {
        py::dict t;
        for (const auto& [k, v] : r.terms) t[py::str(k)] = v;
        d["terms"] = t;
    }
    if (!r.note.empty()) d["note"] = r.note;
    return d;
}

py::dict params_dict(const BoundParams& bp) {
    py::dict d;
    d["A"] = bp.A;
    d["B"] = bp.B;
    d["C"] = bp.C;
    d["D"] = bp.D;
    return d;
}

} // namespace

PYBIND11_MODULE(pyustat, mod) {
    mod.doc() = "exact verification of moment and tail bounds for generalized "
                "U-statistics over finite discrete models";

    py::register_exception<ApplicabilityError>(mod, "ApplicabilityError");
    py::register_exception<EnumerationCapError>(mod, "EnumerationCapError");

    py::class_<UStatInstance>(mod, "Instance")
        .def_property_readonly("id", [](const UStatInstance& i) { return i.id; })
        .def_property_readonly("m", &UStatInstance::m)
        .def_property_readonly("n", &UStatInstance::n)
        .def_property_readonly("mode",
                               [](const UStatInstance& i) {
                                   return i.mode == Mode::Decoupled ? "decoupled"
                                                                    : "undecoupled";
                               })
        .def("to_json", &serialize_instance)
        .def_static("from_json", &parse_instance_json, py::arg("text"))
        .def("__repr__", [](const UStatInstance& i) {
            std::ostringstream os;
            os << "Instance(id='" << i.id << "', m=" << i.m() << ", n=" << i.n() << ", "
               << (i.mode == Mode::Decoupled ? "decoupled" : "undecoupled") << ")";
            return os.str();
        });

    mod.def("generate_instance", &generate_instance, py::arg("family"), py::arg("m"),
            py::arg("n"), py::arg("atoms"), py::arg("seed"),
            "deterministic seeded instance from one of the built-in families");
    mod.def("load_instance", &parse_instance_file, py::arg("path"));
    mod.def("save_instance", &write_instance_file, py::arg("instance"), py::arg("path"));

    mod.def(
        "exact_distribution",
        [](const UStatInstance& inst, std::uint64_t cap, int threads) {
            auto law = exact_distribution(inst, enum_opts(cap, threads));
            std::vector<std::pair<double, double>> out;
            out.reserve(law.size());
            for (std::size_t i = 0; i < law.size(); ++i)
                out.emplace_back(law.values[i], law.probs[i]);
            return out;
        },
        py::arg("instance"), py::arg("cap") = 10'000'000, py::arg("threads") = 1,
        "full law of U as sorted (value, probability) pairs");

    mod.def(
        "exact_moment",
        [](const UStatInstance& inst, double p, bool absolute, std::uint64_t cap,
           int threads) {
            auto law = exact_distribution(inst, enum_opts(cap, threads));
            return moment(law, p, absolute ? MomentKind::Absolute : MomentKind::Raw);
        },
        py::arg("instance"), py::arg("p"), py::arg("absolute") = true,
        py::arg("cap") = 10'000'000, py::arg("threads") = 1, "E|U|^p (or E U^p)");

    mod.def(
        "bound_params",
        [](const UStatInstance& inst) {
            if (inst.m() == 1) {
                auto xi = xi_laws(inst);
                py::dict d = params_dict(m1_params(xi));
                if (kernels_nonnegative(inst)) {
                    d["delta0"] = delta0(xi);
                    d["v0"] = v0(xi);
                }
                return d;
            }
            if (inst.m() != 2)
                throw ApplicabilityError("bound_params: tail parameters are defined for "
                                         "m = 1 and m = 2 instances");
            bool canonical = is_canonical(inst);
            py::dict d = params_dict(canonical ? abcd_params(inst)
                                               : abcd_params(hoeffding_projection(inst)));
            if (!canonical) d["projected"] = true;
            if (canonical && is_iid_instance(inst)) d["iid"] = params_dict(iid_params(inst));
            return d;
        },
        py::arg("instance"),
        "moment/variance/operator-norm parameters entering the exponential bounds; "
        "non-degenerate order-2 kernels are projected to their degenerate part first");

    mod.def(
        "quantile_t0",
        [](const UStatInstance& inst, double q, std::uint64_t cap, int threads) {
            auto law = exact_distribution(inst, enum_opts(cap, threads));
            return quantile_t0(law.abs(), q);
        },
        py::arg("instance"), py::arg("q"), py::arg("cap") = 10'000'000,
        py::arg("threads") = 1, "level-q upper quantile of |U|");

    mod.def(
        "registry",
        []() {
            py::list out;
            for (const auto& ci : registry()) {
                py::dict d;
                d["id"] = ci.id;
                d["mode"] = ci.mode == CaseMode::ExactConstant ? "exact"
                            : ci.mode == CaseMode::FitConstant ? "fit"
                            : ci.mode == CaseMode::Tail        ? "tail"
                                                               : "report";
                d["side"] = ci.side == CaseSide::Upper   ? "upper"
                            : ci.side == CaseSide::Lower ? "lower"
                                                         : "two-sided";
                d["summary"] = ci.summary;
                d["requirements"] = ci.requirements;
                d["needs_r"] = ci.needs_r;
                d["empirical"] = ci.empirical;
                if (ci.fixed_m) d["fixed_m"] = ci.fixed_m;
                out.append(d);
            }
            return out;
        },
        "every registered inequality check");

    mod.def(
        "check",
        [](const std::string& id, const UStatInstance& inst, double p,
           std::optional<double> r, std::optional<double> constant, std::optional<double> x,
           std::uint64_t cap, int threads) {
            auto reports =
                check_inequality(id, inst, check_opts(p, r, constant, x, cap, threads));
            py::list out;
            for (const auto& rep : reports) out.append(report_dict(rep));
            return out;
        },
        py::arg("case_id"), py::arg("instance"), py::arg("p") = 2.0,
        py::arg("r") = py::none(), py::arg("constant") = py::none(),
        py::arg("x") = py::none(), py::arg("cap") = 10'000'000, py::arg("threads") = 1,
        "evaluate one registered case; one dict per claim checked");

    mod.def(
        "fit",
        [](const std::string& id, const std::vector<UStatInstance>& corpus, double p,
           std::optional<double> r, std::optional<double> x, std::uint64_t cap,
           int threads) {
            return fit_constant(id, corpus, check_opts(p, r, std::nullopt, x, cap, threads));
        },
        py::arg("case_id"), py::arg("corpus"), py::arg("p") = 2.0, py::arg("r") = py::none(),
        py::arg("x") = py::none(), py::arg("cap") = 10'000'000, py::arg("threads") = 1,
        "minimal constant making the case pass on every corpus element");

    mod.def(
        "run_suite",
        [](const std::vector<UStatInstance>& corpus, std::optional<std::vector<std::string>> cases,
           std::optional<std::vector<double>> p_grid, std::uint64_t cap, int threads) {
            SuiteOptions so;
            if (cases) so.cases = *cases;
            if (p_grid) so.p_grid = *p_grid;
            so.enumeration = enum_opts(cap, threads);
            SuiteResult res = run_suite(corpus, so);
            py::list reports;
            for (const auto& rep : res.reports) reports.append(report_dict(rep));
            py::list summaries;
            for (const auto& s : res.summaries) {
                py::dict d;
                d["case"] = s.case_id;
                d["reports"] = s.reports;
                d["passed"] = s.passed;
                d["vacuous"] = s.vacuous;
                d["max_ratio"] = s.max_ratio;
                d["min_ratio"] = s.min_ratio;
                if (s.fitted_constant) d["fitted_constant"] = *s.fitted_constant;
                summaries.append(d);
            }
            py::dict out;
            out["reports"] = reports;
            out["summaries"] = summaries;
            out["all_passed"] = res.all_passed();
            return out;
        },
        py::arg("corpus"), py::arg("cases") = py::none(), py::arg("p_grid") = py::none(),
        py::arg("cap") = 10'000'000, py::arg("threads") = 1,
        "fit-then-check every selected case over the corpus");

    mod.def(
        "sample_ustat",
        [](const UStatInstance& inst, std::uint64_t reps, std::uint64_t seed, int threads) {
            McOptions mo;
            mo.threads = threads;
            SampleSummary s = sample_ustat(inst, reps, seed, mo);
            py::dict d;
            d["family"] = s.family;
            d["source"] = s.source_id;
            d["reps"] = s.reps;
            d["seed"] = s.seed;
            d["samples"] = s.samples;
            return d;
        },
        py::arg("instance"), py::arg("reps"), py::arg("seed"), py::arg("threads") = 1,
        "seeded replicates of U, sorted ascending; bit-identical for fixed "
        "(instance, reps, seed)");
}
