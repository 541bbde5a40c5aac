"""Smoke tests for the python module: import, generate, round-trip, exact
engine, registry checks, fitting, and seeded sampling."""

import math
import sys

import pyustat


def check(cond, what):
    if not cond:
        print(f"FAIL: {what}")
        sys.exit(1)


def main():
    inst = pyustat.generate_instance("nonneg", 2, 2, 2, 7)
    check(inst.m == 2 and inst.n == 2, "generated instance shape")
    check(inst.mode == "decoupled", "generated instance mode")

    text = inst.to_json()
    again = pyustat.Instance.from_json(text)
    check(again.to_json() == text, "json round trip is byte-identical")

    law = pyustat.exact_distribution(inst)
    total = math.fsum(p for _, p in law)
    check(abs(total - 1.0) < 1e-12, "exact law sums to one")
    m2 = pyustat.exact_moment(inst, 2.0)
    check(m2 > 0.0, "second moment positive")

    params = pyustat.bound_params(inst)
    for key in ("A", "B", "C", "D"):
        check(params[key] >= 0.0, f"bound parameter {key}")
    check(params["D"] <= params["C"] + 1e-12, "operator norm at most the L2 norm")

    t0 = pyustat.quantile_t0(inst, 0.25)
    check(t0 >= 0.0, "quantile is nonnegative")

    reg = pyustat.registry()
    check(len(reg) == 47, "registry size")
    check(any(c["id"] == "PROP21_UPPER" for c in reg), "registry contains PROP21_UPPER")

    reports = pyustat.check("PROP21_UPPER", inst, p=3.0)
    check(len(reports) == 1 and reports[0]["pass"], "two-sided moment comparison passes")

    try:
        pyustat.check("PROP21_UPPER", pyustat.generate_instance("canonical", 2, 2, 2, 3),
                      p=3.0)
        check(False, "signed kernels must be rejected")
    except pyustat.ApplicabilityError:
        pass

    corpus = [pyustat.generate_instance("nonneg", 2, 2, 2, s) for s in (1, 2, 3)]
    c = pyustat.fit("COR22_UPPER", corpus, p=3.0)
    check(math.isfinite(c) and c > 0.0, "fitted constant finite and positive")
    for member in corpus:
        rep = pyustat.check("COR22_UPPER", member, p=3.0, constant=c)[0]
        check(rep["pass"], "fitted constant certifies the corpus")

    result = pyustat.run_suite(corpus[:2], cases=["COR22_UPPER", "PROP21_UPPER"],
                               p_grid=[2.0, 3.0])
    check(result["all_passed"], "mini suite passes")
    check(len(result["summaries"]) == 2, "one summary per selected case")

    s1 = pyustat.sample_ustat(inst, reps=5000, seed=42)
    s2 = pyustat.sample_ustat(inst, reps=5000, seed=42, threads=4)
    check(s1["samples"] == s2["samples"], "sampling is thread-count independent")
    mean = math.fsum(s1["samples"]) / len(s1["samples"])
    exact_mean = pyustat.exact_moment(inst, 1.0, absolute=False)
    check(abs(mean - exact_mean) < 0.25, "sample mean near the exact mean")

    print("ok")


if __name__ == "__main__":
    main()
