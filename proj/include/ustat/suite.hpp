#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ustat/exact.hpp"
#include "ustat/generate.hpp"
#include "ustat/instance.hpp"
#include "ustat/params.hpp"

namespace ustat {

/// How a registry case treats its multiplicative constant.
///   ExactConstant  the displayed constant is explicit; checks use it as is
///   FitConstant    the constant is unspecified ("universal"); checks need a
///                  supplied or fitted value
///   Tail           probability-vs-exponential-bound comparison at a given x
///   Report         two-sided envelope or comparison; ratios are recorded,
///                  nothing is asserted
enum class CaseMode { ExactConstant, FitConstant, Tail, Report };

enum class CaseSide { Upper, Lower, TwoSided };

/// Registry entry.  `id` is the stable lookup key used by the CLI; the
/// summary says what the check computes.  Cases with `empirical` set operate
/// on ScoreClass inputs (bounded empirical processes) instead of instances.
struct CaseInfo {
    std::string id;
    CaseMode mode = CaseMode::ExactConstant;
    CaseSide side = CaseSide::Upper;
    std::string summary;
    std::string requirements; // human-readable applicability conditions
    bool needs_r = false;     // secondary exponent r (or α) required
    bool empirical = false;
    int fixed_m = 0;          // 0 = any order
};

const std::vector<CaseInfo>& registry();
/// Throws ApplicabilityError for unknown ids.
const CaseInfo& case_info(const std::string& id);

struct CheckOptions {
    double p = 2.0;
    std::optional<double> r;        // inner exponent / α where required
    std::optional<double> constant; // overrides the case's constant slot
    std::optional<double> x;        // abscissa for tail cases
    EnumOptions enumeration;
};

/// One normalized claim "lhs <= constant-adjusted rhs".  Chain cases emit one
/// report per link; `link` then holds "L1".."L4" and the CSV case column
/// shows "ID.L1".  Tail reports carry the abscissa in `x` (and mirror it into
/// the CSV p column).
struct VerificationReport {
    std::string case_id;
    std::string link;
    std::string instance_id;
    int m = 0;
    int n = 0;
    double p = 0.0;
    std::optional<double> r;
    std::optional<double> x;
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 1.0;
    double ratio = 0.0; // lhs / rhs; 0 when vacuous
    bool pass = false;
    bool vacuous = false;                              // lhs == rhs == 0
    std::optional<double> q;                           // quantile level behind t0
    std::vector<std::pair<std::string, double>> terms; // named rhs pieces
    std::string note;
};

/// Evaluate one registry case on one instance.  Throws ApplicabilityError
/// when the instance or (p, r, x) violates the case's requirements, and
/// EnumerationCapError when exact evaluation would exceed the budget.
std::vector<VerificationReport> check_inequality(const std::string& id,
                                                 const UStatInstance& inst,
                                                 const CheckOptions& opts);

/// Empirical-process cases (TALAGRAND36, ROSEMP37, PROP31EMP).
std::vector<VerificationReport> check_empirical(const std::string& id, const ScoreClass& sc,
                                                const CheckOptions& opts);

/// Minimal constant making the case pass on every corpus element (max of the
/// per-instance minima; monotone in the corpus).  Vacuous elements are
/// skipped; an all-vacuous or empty corpus is an error ("no binding
/// instance").  For tail cases the fit covers opts.x when given, otherwise a
/// per-instance grid at tail levels {0.5, 0.25, 0.1, 0.02} of the exact law.
double fit_constant(const std::string& id, const std::vector<UStatInstance>& corpus,
                    const CheckOptions& opts);
double fit_empirical_constant(const std::string& id, const std::vector<ScoreClass>& corpus,
                              const CheckOptions& opts);

struct CaseSummary {
    std::string case_id;
    int reports = 0;
    int passed = 0;
    int vacuous = 0;
    double max_ratio = 0.0; // over non-vacuous reports
    double min_ratio = std::numeric_limits<double>::infinity();
    std::optional<double> fitted_constant; // largest fit across (p, r) runs
};

struct SuiteOptions {
    std::vector<std::string> cases;               // empty = every non-tail instance case
    std::vector<double> p_grid = {1.5, 2.0, 3.0, 4.0};
    std::vector<double> r_grid = {0.5, 1.0};
    std::vector<double> tail_levels = {0.5, 0.25, 0.1, 0.02};
    EnumOptions enumeration;
};

struct SuiteResult {
    std::vector<VerificationReport> reports;
    std::vector<CaseSummary> summaries;
    bool all_passed() const;
};

/// Run the selected cases over the corpus for every applicable (p, r) pair.
/// Fit-mode cases are fitted per (p, r) first and then checked with the
/// fitted constant; inapplicable (case, instance, p, r) combinations are
/// skipped.  Tail cases run only when named explicitly in `cases`.  Output
/// order is fixed: registry order, then p, r, instance, link, x.
SuiteResult run_suite(const std::vector<UStatInstance>& corpus, const SuiteOptions& opts = {});

/// Fixed columns: case,instance,m,n,p,r,lhs,rhs,constant,ratio,pass,vacuous.
/// Tail rows carry x in the p column; chain links append ".Lk" to the case.
void write_reports_csv(const std::vector<VerificationReport>& reports, std::ostream& os);
/// One JSON object per line with every report field including q, the named
/// rhs terms and notes.
void write_reports_jsonl(const std::vector<VerificationReport>& reports, std::ostream& os);

} // namespace ustat
