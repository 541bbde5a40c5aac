#include "ustat/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <tuple>

#include "json.hpp"
#include "ustat/common.hpp"

namespace ustat {

namespace {

constexpr double kTol = 1e-9;

enum class Cid {
    R1, R2, H, HR,
    MAX23_UPPER, MAX23_LOWER, SUMMAX25, ALPHA26,
    PROP21_UPPER, PROP21_LOWER, PROP21_LOGP, PROP21_M2, KN27,
    COR22_UPPER, COR22_LOWER, COR22_LOGP, COR22_LR,
    PZ213, THM23_UPPER, THM23_LOWER, THM23_M2,
    KHIN216, KHIN218, RAND24,
    PROP24_UPPER, PROP24_LOWER, THM25_UPPER, THM25_LOWER,
    PROP26_UPPER, PROP26_LOWER, THM27_UPPER, THM27_LOWER,
    KN28, KN28T, DEC25,
    PINELIS31, BERN32, M2MOM33, TAIL35,
    THM32, THM33MOM, THM33TAIL, COR34MOM, COR34TAIL,
    TALAGRAND36, ROSEMP37, PROP31EMP,
};

/// How the tunable constant c enters the right side.
///   PowerP   rhs = c^p · T         PowerMP  rhs = c^{mp} · T
///   Linear   rhs = c · T (or lhs = c · T for lower sides)
///   Bisect   c sits inside a quantile level or an exponent; fit by bisection
///   None     the claim holds for every constant; fitting is undefined
enum class FitKind { PowerP, PowerMP, Linear, Bisect, None };

struct CaseDef {
    Cid cid;
    CaseInfo info;
    FitKind fit;
};

std::vector<CaseDef> build_registry() {
    std::vector<CaseDef> v;
    auto add = [&](Cid cid, const char* id, CaseMode mode, CaseSide side, FitKind fit,
                   const char* summary, const char* req, bool needs_r = false,
                   bool empirical = false, int fixed_m = 0) {
        v.push_back({cid, CaseInfo{id, mode, side, summary, req, needs_r, empirical, fixed_m}, fit});
    };
    using M = CaseMode;
    using S = CaseSide;
    using F = FitKind;

    add(Cid::R1, "R1", M::ExactConstant, S::Upper, F::PowerP,
        "moment of a nonnegative sum against the explicit two-term max: "
        "(e/p)p^p-weighted sum of p-th moments vs e^p times the p-th power of the mean sum",
        "m = 1, nonnegative kernels, p > 1", false, false, 1);
    add(Cid::R2, "R2", M::FitConstant, S::Upper, F::PowerP,
        "two-term max bound at the (p/log p)^p constant scale; base constant fitted",
        "m = 1, nonnegative kernels, p > 1", false, false, 1);
    add(Cid::H, "H", M::ExactConstant, S::Upper, F::Linear,
        "sum moment vs median-level quantile power plus expected maximum, explicit prefactor "
        "2^{p-2}·2^{(p-1)∨0}·(p+1)^{p+1}",
        "m = 1, nonnegative kernels, p > 0", false, false, 1);
    add(Cid::HR, "HR", M::ExactConstant, S::Upper, F::Linear,
        "variant of H with the quantile replaced by the r-th-moment bound 2^{p/r}(E S^r)^{p/r}",
        "m = 1, nonnegative kernels, 0 < r < p", true, false, 1);
    add(Cid::MAX23_UPPER, "MAX23_UPPER", M::ExactConstant, S::Upper, F::Linear,
        "expected maximum power vs crossing-threshold power plus above-threshold moments",
        "m = 1, nonnegative kernels, p > 0", false, false, 1);
    add(Cid::MAX23_LOWER, "MAX23_LOWER", M::ExactConstant, S::Lower, F::Linear,
        "half of max(threshold power, above-threshold moments) below the expected maximum power",
        "m = 1, nonnegative kernels, p > 0", false, false, 1);
    add(Cid::SUMMAX25, "SUMMAX25", M::ExactConstant, S::Upper, F::Linear,
        "sum of p-th absolute moments vs expected-maximum terms with an r-moment cross term",
        "m = 1, 0 < r < p", true, false, 1);
    add(Cid::ALPHA26, "ALPHA26", M::ExactConstant, S::Upper, F::Linear,
        "p^{αp}-weighted moment sum vs 2(1+p^α)·max(weighted expected maximum, mean-sum power); "
        "α is passed through the r slot (default 1)",
        "m = 1, p > 1, α >= 0", false, false, 1);
    add(Cid::PROP21_UPPER, "PROP21_UPPER", M::ExactConstant, S::Upper, F::PowerMP,
        "sum moment of a nonnegative kernel array vs the subset sum of conditional mixed "
        "moments with explicit constant (2e²)^{mp}",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::PROP21_LOWER, "PROP21_LOWER", M::ExactConstant, S::Lower, F::Linear,
        "largest conditional mixed moment below the sum moment",
        "nonnegative kernels, decoupled (or m = 1), p >= 1");
    add(Cid::PROP21_LOGP, "PROP21_LOGP", M::FitConstant, S::Upper, F::PowerMP,
        "largest mixed moment scaled by (p/log p)^{mp}; base constant fitted",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::PROP21_M2, "PROP21_M2", M::ExactConstant, S::Upper, F::PowerMP,
        "explicit four-term order-2 expansion of the sum-moment bound, constant (2e²)^{2p}",
        "m = 2, nonnegative kernels, decoupled, p > 1", false, false, 2);
    add(Cid::KN27, "KN27", M::FitConstant, S::Upper, F::PowerP,
        "order-2 bound with expectation-of-maximum blocks at the explicit (2e²)^p·p⁴ scale; "
        "base constant fitted",
        "m = 2, nonnegative kernels, decoupled, p > 1", false, false, 2);
    add(Cid::COR22_UPPER, "COR22_UPPER", M::FitConstant, S::Upper, F::PowerP,
        "sum moment vs subset sum of expectation-of-maximum mixed moments; constant fitted",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::COR22_LOWER, "COR22_LOWER", M::ExactConstant, S::Lower, F::Linear,
        "largest expectation-of-maximum mixed moment below the sum moment",
        "nonnegative kernels, decoupled (or m = 1), p >= 1");
    add(Cid::COR22_LOGP, "COR22_LOGP", M::FitConstant, S::Upper, F::PowerP,
        "largest expectation-of-maximum mixed moment at the (p/log p)^{mp} scale; constant fitted",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::COR22_LR, "COR22_LR", M::FitConstant, S::Upper, F::Linear,
        "largest r-mean inner mixed moment; constant fitted (depends on p and r)",
        "nonnegative kernels, decoupled (or m = 1), p > 1, 0 < r < p", true);
    add(Cid::PZ213, "PZ213", M::ExactConstant, S::Lower, F::Linear,
        "anti-concentration: displayed lower bound for P(S > ‖S‖_r / 2) from the r- and p-norms",
        "nonnegative kernels, 0 < r <= 1, r < p", true);
    add(Cid::THM23_UPPER, "THM23_UPPER", M::FitConstant, S::Upper, F::Bisect,
        "sum moment vs quantile power plus nonempty-subset max moments; the constant also "
        "sets the quantile level (bisection fit)",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::THM23_LOWER, "THM23_LOWER", M::ExactConstant, S::Lower, F::None,
        "quantile power and nonempty-subset max moments below the sum moment; valid for every "
        "constant choice, level recorded",
        "nonnegative kernels, decoupled (or m = 1), p > 1");
    add(Cid::THM23_M2, "THM23_M2", M::FitConstant, S::Upper, F::Bisect,
        "order-2 max-of-four form (three max moments and a quantile power) with a single "
        "constant fitted by bisection",
        "m = 2, nonnegative kernels, decoupled, p > 1", false, false, 2);
    add(Cid::KHIN216, "KHIN216", M::ExactConstant, S::TwoSided, F::Linear,
        "four-link randomization / square-function chain for sums of independent centered "
        "variables, explicit constants",
        "m = 1, centered kernels, p >= 2", false, false, 1);
    add(Cid::KHIN218, "KHIN218", M::ExactConstant, S::TwoSided, F::Linear,
        "four-link randomization / square-function chain for canonical kernel arrays, "
        "explicit constants",
        "canonical kernels, p >= 2");
    add(Cid::RAND24, "RAND24", M::ExactConstant, S::TwoSided, F::Linear,
        "randomized and plain absolute moments agree for separately symmetric kernels",
        "separately symmetric kernels, p > 0");
    add(Cid::PROP24_UPPER, "PROP24_UPPER", M::FitConstant, S::Upper, F::PowerP,
        "absolute moment of a canonical array vs the subset sum of squared-kernel max moments "
        "at p/2; constant fitted",
        "canonical kernels, decoupled (or m = 1), p > 2");
    add(Cid::PROP24_LOWER, "PROP24_LOWER", M::ExactConstant, S::Lower, F::Linear,
        "largest squared-kernel max moment, scaled 2^{-mp}, below the absolute moment",
        "canonical kernels, decoupled (or m = 1), p > 2");
    add(Cid::THM25_UPPER, "THM25_UPPER", M::FitConstant, S::Upper, F::Bisect,
        "canonical-array bound joining a quantile power (level depends on the constant) with "
        "squared-kernel max moments; bisection fit",
        "canonical kernels, decoupled (or m = 1), p > 2");
    add(Cid::THM25_LOWER, "THM25_LOWER", M::ExactConstant, S::Lower, F::None,
        "quantile power and squared-kernel terms below the absolute moment; valid for every "
        "constant choice, level recorded",
        "canonical kernels, decoupled (or m = 1), p > 2");
    add(Cid::PROP26_UPPER, "PROP26_UPPER", M::FitConstant, S::Upper, F::Linear,
        "low-order moments: sum moment vs largest r-mean mixed moment; constant fitted",
        "nonnegative kernels, decoupled (or m = 1), 0 < r < p <= 1", true);
    add(Cid::PROP26_LOWER, "PROP26_LOWER", M::ExactConstant, S::Lower, F::Linear,
        "largest r-mean mixed moment below the sum moment",
        "nonnegative kernels, decoupled (or m = 1), 0 < r < p <= 1", true);
    add(Cid::THM27_UPPER, "THM27_UPPER", M::FitConstant, S::Upper, F::Bisect,
        "low-order bound joining a quantile power at a constant-dependent level with r-mean "
        "terms; bisection fit",
        "nonnegative kernels, decoupled (or m = 1), 0 < r < p <= 1", true);
    add(Cid::THM27_LOWER, "THM27_LOWER", M::ExactConstant, S::Lower, F::None,
        "quantile power (coefficient taken at the tail level itself) and r-mean terms below "
        "the sum moment; the subset aggregation is read as a max",
        "nonnegative kernels, decoupled (or m = 1), 0 < r < p <= 1", true);
    add(Cid::KN28, "KN28", M::Report, S::TwoSided, F::Linear,
        "two-sided envelope: sum moment vs expected maximum plus fixed-point scale v0^p; "
        "ratios recorded, nothing asserted",
        "m = 1, nonnegative kernels, p > 0", false, false, 1);
    add(Cid::KN28T, "KN28T", M::Report, S::TwoSided, F::Linear,
        "envelope with v0 recomputed after truncating every variable at the median-level "
        "quantile of the sum",
        "m = 1, nonnegative kernels, p > 0", false, false, 1);
    add(Cid::DEC25, "DEC25", M::Report, S::TwoSided, F::Linear,
        "ratio of the undecoupled absolute moment to its decoupled twin; report only",
        "undecoupled instance, p > 0");
    add(Cid::PINELIS31, "PINELIS31", M::FitConstant, S::Upper, F::PowerP,
        "centered sums: absolute moment vs max(p^p · expected maximum, p^{p/2} · variance "
        "power); constant fitted",
        "m = 1, centered kernels, p >= 2", false, false, 1);
    add(Cid::BERN32, "BERN32", M::Tail, S::Upper, F::Bisect,
        "exponential tail for centered sums: exact strict tail vs e²·exp of the min of a "
        "linear and a quadratic regime; constant fitted",
        "m = 1, centered kernels, x > 0", false, false, 1);
    add(Cid::M2MOM33, "M2MOM33", M::FitConstant, S::Upper, F::PowerP,
        "order-2 canonical moments vs the max of four squared-kernel blocks; constant fitted",
        "m = 2, canonical kernels, decoupled, p >= 2", false, false, 2);
    add(Cid::TAIL35, "TAIL35", M::Tail, S::Upper, F::Bisect,
        "order-2 exponential tail with linear, two-thirds and half-power regimes; constant fitted",
        "m = 2, canonical kernels, decoupled, x > 0", false, false, 2);
    add(Cid::THM32, "THM32", M::FitConstant, S::Upper, F::PowerP,
        "order-2 canonical moments vs the five-term sum including the operator-norm block; "
        "constant fitted",
        "m = 2, canonical kernels, decoupled, p >= 2", false, false, 2);
    add(Cid::THM33MOM, "THM33MOM", M::FitConstant, S::Upper, F::PowerP,
        "order-2 moments against the A,B,C,D parameter polynomial; constant fitted",
        "m = 2, canonical kernels, decoupled, p >= 2", false, false, 2);
    add(Cid::THM33TAIL, "THM33TAIL", M::Tail, S::Upper, F::Bisect,
        "order-2 exponential tail with quadratic, linear, two-thirds and half-power regimes "
        "from A,B,C,D; constant fitted",
        "m = 2, canonical kernels, decoupled, x > 0", false, false, 2);
    add(Cid::COR34MOM, "COR34MOM", M::FitConstant, S::Upper, F::PowerP,
        "single-kernel parameter polynomial bound with closed-form A,B,C,D; constant fitted",
        "m = 2, canonical single-kernel instance with one common law, decoupled, p >= 2",
        false, false, 2);
    add(Cid::COR34TAIL, "COR34TAIL", M::Tail, S::Upper, F::Bisect,
        "single-kernel four-regime exponential tail; constant fitted",
        "m = 2, canonical single-kernel instance with one common law, decoupled, x > 0",
        false, false, 2);
    add(Cid::TALAGRAND36, "TALAGRAND36", M::Tail, S::Upper, F::Linear,
        "bounded empirical process: exact tail at threshold 2E|S| + σ√(8x) + 34.5·a·x vs "
        "e^{-x}, explicit constants",
        "score class with centered members, x > 0", false, true);
    add(Cid::ROSEMP37, "ROSEMP37", M::FitConstant, S::Upper, F::PowerP,
        "bounded empirical process moments vs mean, variance and sup-norm terms; constant fitted",
        "score class with centered members, p >= 1", false, true);
    add(Cid::PROP31EMP, "PROP31EMP", M::FitConstant, S::Upper, F::PowerP,
        "empirical process moments with the envelope-maximum term replacing the sup-norm; "
        "constant fitted",
        "score class with centered members, p >= 1", false, true);
    return v;
}

const std::vector<CaseDef>& defs() {
    static const std::vector<CaseDef> v = build_registry();
    return v;
}

const CaseDef& def_of(const std::string& id) {
    for (const auto& d : defs())
        if (d.info.id == id) return d;
    throw ApplicabilityError("unknown case id '" + id + "'");
}

// --------------------------------------------------------------- context ---

/// Lazy per-instance cache of every exact quantity the registry touches, so
/// that fit passes and re-checks do not repeat enumerations.
class Ctx {
public:
    Ctx(const UStatInstance& inst, const EnumOptions& eo) : inst_(inst), eo_(eo) {}

    const UStatInstance& inst() const { return inst_; }
    int m() const { return inst_.m(); }
    int n() const { return inst_.n(); }

    bool nonneg() {
        if (!nonneg_) nonneg_ = kernels_nonnegative(inst_);
        return *nonneg_;
    }
    bool canonical() {
        if (!canonical_) canonical_ = is_canonical(inst_);
        return *canonical_;
    }
    bool sepsym() {
        if (!sepsym_) sepsym_ = separately_symmetric(inst_);
        return *sepsym_;
    }

    const FiniteDistribution& law() {
        if (!law_) law_ = exact_distribution(inst_, eo_);
        return *law_;
    }
    const FiniteDistribution& abs_law() {
        if (!abs_law_) abs_law_ = law().abs();
        return *abs_law_;
    }
    double mom(double p, MomentKind k) {
        auto key = std::make_pair(p, k == MomentKind::Raw ? 0 : 1);
        auto it = mom_.find(key);
        if (it != mom_.end()) return it->second;
        double v = moment(law(), p, k);
        mom_.emplace(key, v);
        return v;
    }
    double chaos(double p) {
        auto it = chaos_.find(p);
        if (it != chaos_.end()) return it->second;
        double v = chaos_moment(inst_, p, eo_);
        chaos_.emplace(p, v);
        return v;
    }
    double mixed(IndexSubset J, double p) {
        auto key = std::make_pair(J.bits, p);
        auto it = mixed_.find(key);
        if (it != mixed_.end()) return it->second;
        double v = mixed_moment(inst_, J, p);
        mixed_.emplace(key, v);
        return v;
    }
    double maxm(IndexSubset J, double p) {
        auto key = std::make_pair(J.bits, p);
        auto it = maxm_.find(key);
        if (it != maxm_.end()) return it->second;
        double v = max_mixed_moment(inst_, J, p);
        maxm_.emplace(key, v);
        return v;
    }
    double lrm(IndexSubset J, double p, double r) {
        auto key = std::make_tuple(J.bits, p, r);
        auto it = lrm_.find(key);
        if (it != lrm_.end()) return it->second;
        double v = lr_mixed_moment(inst_, J, p, r);
        lrm_.emplace(key, v);
        return v;
    }
    Ctx& sq() {
        if (!sq_ctx_) {
            sq_inst_ = std::make_unique<UStatInstance>(square_kernels(inst_));
            sq_ctx_ = std::make_unique<Ctx>(*sq_inst_, eo_);
        }
        return *sq_ctx_;
    }
    const std::vector<FiniteDistribution>& xi() {
        if (!xi_) xi_ = xi_laws(inst_);
        return *xi_;
    }
    const std::vector<FiniteDistribution>& xi_abs() {
        if (!xi_abs_) {
            std::vector<FiniteDistribution> v;
            for (const auto& d : xi()) v.push_back(d.abs());
            xi_abs_ = std::move(v);
        }
        return *xi_abs_;
    }
    double d0() {
        if (!d0_) d0_ = delta0(xi());
        return *d0_;
    }
    double v0_plain() {
        if (!v0_) v0_ = v0(xi());
        return *v0_;
    }
    double emax(double p) {
        auto it = emax_.find(p);
        if (it != emax_.end()) return it->second;
        double v = expected_max_power(xi(), p);
        emax_.emplace(p, v);
        return v;
    }
    double emax_abs(double p) {
        auto it = emax_abs_.find(p);
        if (it != emax_abs_.end()) return it->second;
        double v = expected_max_power(xi_abs(), p);
        emax_abs_.emplace(p, v);
        return v;
    }
    const BoundParams& abcd() {
        if (!abcd_) abcd_ = abcd_params(inst_);
        return *abcd_;
    }
    const BoundParams& iid() {
        if (!iid_) iid_ = iid_params(inst_);
        return *iid_;
    }
    const BoundParams& m1p() {
        if (!m1_) m1_ = m1_params(xi());
        return *m1_;
    }
    const FiniteDistribution& twin_law() {
        if (!twin_law_) {
            twin_ = std::make_unique<UStatInstance>(decoupled_twin(inst_));
            twin_law_ = exact_distribution(*twin_, eo_);
        }
        return *twin_law_;
    }

private:
    const UStatInstance& inst_;
    EnumOptions eo_;
    std::optional<bool> nonneg_, canonical_, sepsym_;
    std::optional<FiniteDistribution> law_, abs_law_;
    std::map<std::pair<double, int>, double> mom_;
    std::map<double, double> chaos_, emax_, emax_abs_;
    std::map<std::pair<std::uint32_t, double>, double> mixed_, maxm_;
    std::map<std::tuple<std::uint32_t, double, double>, double> lrm_;
    std::unique_ptr<UStatInstance> sq_inst_;
    std::unique_ptr<Ctx> sq_ctx_;
    std::optional<std::vector<FiniteDistribution>> xi_, xi_abs_;
    std::optional<double> d0_, v0_;
    std::optional<BoundParams> abcd_, iid_, m1_;
    std::unique_ptr<UStatInstance> twin_;
    std::optional<FiniteDistribution> twin_law_;
};

// --------------------------------------------------------- applicability ---

bool j_structure_ok(const UStatInstance& inst) {
    return inst.mode == Mode::Decoupled || inst.m() == 1;
}

/// Empty string when the case applies; otherwise the violated requirement.
std::string violation(const CaseDef& cd, Ctx* cx, const CheckOptions& o) {
    const double p = o.p;
    const double r = o.r.value_or(std::numeric_limits<double>::quiet_NaN());
    auto need = [&](bool ok, const char* what) -> std::string {
        return ok ? std::string() : std::string(what);
    };
    if (cd.info.empirical) {
        if (cx) return "case takes a score class, not an instance";
        switch (cd.cid) {
        case Cid::TALAGRAND36:
            return need(o.x && *o.x > 0.0, "x > 0 required");
        default:
            return need(p >= 1.0, "p >= 1 required");
        }
    }
    if (!cx) return "case takes an instance, not a score class";
    Ctx& c = *cx;
    if (cd.info.fixed_m != 0 && c.m() != cd.info.fixed_m)
        return "m = " + std::to_string(cd.info.fixed_m) + " required";
    if (cd.info.needs_r && !o.r) return "r required";
    switch (cd.cid) {
    case Cid::R1:
    case Cid::R2:
        if (!c.nonneg()) return "nonnegative kernels required";
        return need(p > 1.0, "p > 1 required");
    case Cid::H:
    case Cid::MAX23_UPPER:
    case Cid::MAX23_LOWER:
    case Cid::KN28:
    case Cid::KN28T:
        if (!c.nonneg()) return "nonnegative kernels required";
        return need(p > 0.0, "p > 0 required");
    case Cid::HR:
        if (!c.nonneg()) return "nonnegative kernels required";
        return need(r > 0.0 && r < p, "0 < r < p required");
    case Cid::SUMMAX25:
        return need(r > 0.0 && r < p, "0 < r < p required");
    case Cid::ALPHA26: {
        double alpha = o.r.value_or(1.0);
        if (!(alpha >= 0.0)) return "α >= 0 required (passed through r)";
        return need(p > 1.0, "p > 1 required");
    }
    case Cid::PROP21_UPPER:
    case Cid::PROP21_LOGP:
    case Cid::PROP21_M2:
    case Cid::KN27:
    case Cid::COR22_UPPER:
    case Cid::COR22_LOGP:
    case Cid::THM23_UPPER:
    case Cid::THM23_LOWER:
    case Cid::THM23_M2:
        if (!c.nonneg()) return "nonnegative kernels required";
        if (!j_structure_ok(c.inst())) return "decoupled instance required";
        return need(p > 1.0, "p > 1 required");
    case Cid::PROP21_LOWER:
    case Cid::COR22_LOWER:
        if (!c.nonneg()) return "nonnegative kernels required";
        if (!j_structure_ok(c.inst())) return "decoupled instance required";
        return need(p >= 1.0, "p >= 1 required");
    case Cid::COR22_LR:
        if (!c.nonneg()) return "nonnegative kernels required";
        if (!j_structure_ok(c.inst())) return "decoupled instance required";
        if (!(p > 1.0)) return "p > 1 required";
        return need(r > 0.0 && r < p, "0 < r < p required");
    case Cid::PZ213:
        if (!c.nonneg()) return "nonnegative kernels required";
        if (!(r > 0.0 && r <= 1.0)) return "0 < r <= 1 required";
        return need(r < p, "r < p required");
    case Cid::KHIN216:
    case Cid::KHIN218:
        if (!c.canonical()) return "canonical kernels required";
        return need(p >= 2.0, "p >= 2 required");
    case Cid::RAND24:
        if (!c.sepsym()) return "separately symmetric kernels required";
        return need(p > 0.0, "p > 0 required");
    case Cid::PROP24_UPPER:
    case Cid::PROP24_LOWER:
    case Cid::THM25_UPPER:
    case Cid::THM25_LOWER:
        if (!c.canonical()) return "canonical kernels required";
        if (!j_structure_ok(c.inst())) return "decoupled instance required";
        return need(p > 2.0, "p > 2 required");
    case Cid::PROP26_UPPER:
    case Cid::PROP26_LOWER:
    case Cid::THM27_UPPER:
    case Cid::THM27_LOWER:
        if (!c.nonneg()) return "nonnegative kernels required";
        if (!j_structure_ok(c.inst())) return "decoupled instance required";
        return need(r > 0.0 && r < p && p <= 1.0, "0 < r < p <= 1 required");
    case Cid::DEC25:
        if (c.inst().mode != Mode::Undecoupled) return "undecoupled instance required";
        return need(p > 0.0, "p > 0 required");
    case Cid::PINELIS31:
        if (!c.canonical()) return "centered kernels required";
        return need(p >= 2.0, "p >= 2 required");
    case Cid::BERN32:
        if (!c.canonical()) return "centered kernels required";
        return {};
    case Cid::M2MOM33:
    case Cid::THM32:
    case Cid::THM33MOM:
        if (!c.canonical()) return "canonical kernels required";
        if (c.inst().mode != Mode::Decoupled) return "decoupled instance required";
        return need(p >= 2.0, "p >= 2 required");
    case Cid::TAIL35:
    case Cid::THM33TAIL:
        if (!c.canonical()) return "canonical kernels required";
        return need(c.inst().mode == Mode::Decoupled, "decoupled instance required");
    case Cid::COR34MOM:
        if (!c.canonical()) return "canonical kernels required";
        if (c.inst().mode != Mode::Decoupled) return "decoupled instance required";
        if (!is_iid_instance(c.inst())) return "single kernel with one common law required";
        return need(p >= 2.0, "p >= 2 required");
    case Cid::COR34TAIL:
        if (!c.canonical()) return "canonical kernels required";
        if (c.inst().mode != Mode::Decoupled) return "decoupled instance required";
        return need(is_iid_instance(c.inst()), "single kernel with one common law required");
    default:
        return {};
    }
}

// ------------------------------------------------------------ evaluation ---

struct Piece {
    std::string link;
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 1.0;
    std::optional<double> q;
    std::vector<std::pair<std::string, double>> terms;
    std::string note;
};

double hoffmann_prefactor(double p) {
    return std::pow(2.0, p - 2.0) * std::pow(2.0, std::max(p - 1.0, 0.0)) *
           std::pow(p + 1.0, p + 1.0);
}

double default_constant(const CaseDef& cd, double p, int m) {
    switch (cd.cid) {
    case Cid::R1: return 2.0 * M_E;
    case Cid::H:
    case Cid::HR: return hoffmann_prefactor(p);
    case Cid::MAX23_LOWER: return 0.5;
    case Cid::PROP21_UPPER:
    case Cid::PROP21_M2: return 2.0 * M_E * M_E;
    case Cid::PROP24_LOWER: return std::pow(2.0, -static_cast<double>(m) * p);
    default: return 1.0;
    }
}

double moment_above_fd(const FiniteDistribution& d, double p, double t) {
    KahanSum s;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.values[i] > t) s.add(d.probs[i] * std::pow(d.values[i], p));
    return s.value();
}

std::string jname(IndexSubset J, int m) { return "J=" + J.to_string(m); }

/// Evaluate one case on one instance at the effective constant c.  Tail cases
/// require x.  Returns one Piece per link.
std::vector<Piece> eval_case(const CaseDef& cd, Ctx& cx, const CheckOptions& o, double c) {
    const double p = o.p;
    const int m = cx.m();
    const double mp = static_cast<double>(m) * p;
    std::vector<Piece> out;
    auto single = [&]() -> Piece& {
        out.emplace_back();
        return out.back();
    };

    switch (cd.cid) {
    case Cid::R1:
    case Cid::R2: {
        Piece& pc = single();
        KahanSum sp, sm;
        for (const auto& d : cx.xi()) {
            sp.add(d.moment_raw(p));
            sm.add(d.mean());
        }
        double s_p = sp.value(), s_m = sm.value();
        double t;
        if (cd.cid == Cid::R1)
            t = std::max(M_E / p * std::pow(p, p) * s_p, std::pow(M_E, p) * std::pow(s_m, p));
        else
            t = std::pow(p / std::log(p), p) * std::max(s_p, std::pow(s_m, p));
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = std::pow(c, p) * t;
        pc.constant = c;
        pc.terms = {{"sum_pth_moments", s_p}, {"mean_sum_pth", std::pow(s_m, p)}};
        break;
    }
    case Cid::H:
    case Cid::HR: {
        Piece& pc = single();
        double em = cx.emax(p);
        double t;
        if (cd.cid == Cid::H) {
            double t0 = quantile_t0(cx.law(), 0.5);
            pc.q = 0.5;
            t = std::pow(t0, p) + em;
            pc.terms = {{"t0^p", std::pow(t0, p)}, {"E_max^p", em}};
        } else {
            double r = *o.r;
            double low = std::pow(cx.mom(r, MomentKind::Raw), p / r);
            t = std::pow(2.0, p / r) * low + em;
            pc.terms = {{"2^{p/r}(ES^r)^{p/r}", std::pow(2.0, p / r) * low}, {"E_max^p", em}};
        }
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = c * t;
        pc.constant = c;
        break;
    }
    case Cid::MAX23_UPPER:
    case Cid::MAX23_LOWER: {
        Piece& pc = single();
        double d0 = cx.d0();
        KahanSum above;
        for (const auto& d : cx.xi()) above.add(moment_above_fd(d, p, d0));
        double ab = above.value();
        double em = cx.emax(p);
        pc.terms = {{"delta0^p", std::pow(d0, p)}, {"above_threshold", ab}};
        pc.constant = c;
        if (cd.cid == Cid::MAX23_UPPER) {
            pc.lhs = em;
            pc.rhs = c * (std::pow(d0, p) + ab);
        } else {
            pc.lhs = c * std::max(std::pow(d0, p), ab);
            pc.rhs = em;
        }
        break;
    }
    case Cid::SUMMAX25: {
        Piece& pc = single();
        double r = *o.r;
        KahanSum sp, sr;
        for (const auto& d : cx.xi_abs()) {
            sp.add(d.moment_raw(p));
            sr.add(d.moment_raw(r));
        }
        double em = cx.emax_abs(p);
        pc.lhs = sp.value();
        pc.rhs = c * (2.0 * em + 2.0 * sr.value() * std::pow(em, (p - r) / p));
        pc.constant = c;
        pc.terms = {{"E_max_abs^p", em}, {"sum_rth_moments", sr.value()}};
        break;
    }
    case Cid::ALPHA26: {
        Piece& pc = single();
        double a = o.r.value_or(1.0);
        KahanSum sp, s1;
        for (const auto& d : cx.xi_abs()) {
            sp.add(d.moment_raw(p));
            s1.add(d.moment_raw(1.0));
        }
        double w = std::pow(p, a * p);
        double em = cx.emax_abs(p);
        pc.lhs = w * sp.value();
        pc.rhs = c * 2.0 * (1.0 + std::pow(p, a)) *
                 std::max(w * em, std::pow(s1.value(), p));
        pc.constant = c;
        pc.terms = {{"weighted_E_max", w * em}, {"mean_sum_pth", std::pow(s1.value(), p)}};
        break;
    }
    case Cid::PROP21_UPPER:
    case Cid::PROP21_LOWER:
    case Cid::PROP21_LOGP: {
        Piece& pc = single();
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            double v = cx.mixed(J, p);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(std::pow(p, J.count() * p) * v);
        }
        double full = cx.mom(p, MomentKind::Raw);
        pc.constant = c;
        if (cd.cid == Cid::PROP21_UPPER) {
            pc.lhs = full;
            pc.rhs = std::pow(c, mp) * sum.value();
        } else if (cd.cid == Cid::PROP21_LOWER) {
            pc.lhs = c * best;
            pc.rhs = full;
        } else {
            pc.lhs = full;
            pc.rhs = std::pow(c, mp) * std::pow(p / std::log(p), mp) * best;
        }
        break;
    }
    case Cid::PROP21_M2: {
        Piece& pc = single();
        double t0 = cx.mixed(IndexSubset{0}, p);
        double t1 = cx.mixed(IndexSubset{1}, p);
        double t2 = cx.mixed(IndexSubset{2}, p);
        double t3 = cx.mixed(IndexSubset{3}, p);
        double t = t0 + std::pow(p, p) * (t1 + t2) + std::pow(p, 2.0 * p) * t3;
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = std::pow(c, 2.0 * p) * t;
        pc.constant = c;
        pc.terms = {{"J={}", t0}, {"J={1}", t1}, {"J={2}", t2}, {"J={1,2}", t3}};
        break;
    }
    case Cid::KN27: {
        Piece& pc = single();
        double t0 = cx.maxm(IndexSubset{0}, p);
        double t1 = cx.maxm(IndexSubset{1}, p);
        double t2 = cx.maxm(IndexSubset{2}, p);
        double t3 = cx.maxm(IndexSubset{3}, p);
        double bracket = t0 + std::pow(p, p) * (t1 + t2) + std::pow(p, 2.0 * p) * t3;
        double t = std::pow(2.0 * M_E * M_E, p) * std::pow(p, 4.0) * bracket;
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = std::pow(c, p) * t;
        pc.constant = c;
        pc.terms = {{"J={}", t0}, {"J={1}", t1}, {"J={2}", t2}, {"J={1,2}", t3}};
        break;
    }
    case Cid::COR22_UPPER:
    case Cid::COR22_LOWER:
    case Cid::COR22_LOGP: {
        Piece& pc = single();
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            double v = cx.maxm(J, p);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(std::pow(p, J.count() * p) * v);
        }
        double full = cx.mom(p, MomentKind::Raw);
        pc.constant = c;
        if (cd.cid == Cid::COR22_UPPER) {
            pc.lhs = full;
            pc.rhs = std::pow(c, p) * sum.value();
        } else if (cd.cid == Cid::COR22_LOWER) {
            pc.lhs = c * best;
            pc.rhs = full;
        } else {
            pc.lhs = full;
            pc.rhs = std::pow(c, p) * std::pow(p / std::log(p), mp) * best;
        }
        break;
    }
    case Cid::COR22_LR: {
        Piece& pc = single();
        double r = *o.r;
        double best = 0.0;
        for (IndexSubset J : all_subsets(m)) {
            double v = cx.lrm(J, p, r);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
        }
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = c * best;
        pc.constant = c;
        break;
    }
    case Cid::PZ213: {
        Piece& pc = single();
        double r = *o.r;
        double ep = cx.mom(p, MomentKind::Raw);
        pc.constant = c;
        if (ep <= 0.0) {
            pc.note = "zero statistic";
            break; // vacuous: lhs = rhs = 0
        }
        double nr = std::pow(cx.mom(r, MomentKind::Raw), 1.0 / r);
        double np = std::pow(ep, 1.0 / p);
        pc.lhs = c * paley_zygmund_bound(0.5, r, p, nr, np);
        pc.rhs = cx.law().tail_gt(0.5 * nr);
        pc.terms = {{"norm_r", nr}, {"norm_p", np}};
        break;
    }
    case Cid::THM23_UPPER:
    case Cid::THM23_LOWER: {
        Piece& pc = single();
        double q = std::pow(2.0, -(p + 1.0) / (p - 1.0)) * std::pow(c, -p / (p - 1.0));
        double t0 = quantile_t0_unchecked(cx.law(), q);
        pc.q = q;
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            if (J.bits == 0) continue;
            double v = cx.maxm(J, p);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(std::pow(p, J.count() * p) * v);
        }
        pc.terms.emplace_back("t0^p", std::pow(t0, p));
        pc.constant = c;
        if (cd.cid == Cid::THM23_UPPER) {
            pc.lhs = cx.mom(p, MomentKind::Raw);
            pc.rhs = std::pow(4.0 * c, p) *
                     (std::pow(2.0, 1.0 + p) * std::pow(t0, p) + sum.value());
        } else {
            pc.lhs = std::max(std::pow(4.0 * c, -p / (p - 1.0)) * std::pow(t0, p), best);
            pc.rhs = cx.mom(p, MomentKind::Raw);
            pc.note = "holds for every constant; quantile level recorded";
        }
        break;
    }
    case Cid::THM23_M2: {
        Piece& pc = single();
        double q = std::pow(2.0, -(p + 1.0) / (p - 1.0)) * std::pow(c, -p / (p - 1.0));
        double t0 = quantile_t0_unchecked(cx.law(), q);
        pc.q = q;
        double m1v = cx.maxm(IndexSubset{1}, p);
        double m2v = cx.maxm(IndexSubset{2}, p);
        double m12 = cx.maxm(IndexSubset{3}, p);
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = c * std::max({m1v, m2v, m12, std::pow(t0, p)});
        pc.constant = c;
        pc.terms = {{"J={1}", m1v}, {"J={2}", m2v}, {"J={1,2}", m12}, {"t0^p", std::pow(t0, p)}};
        break;
    }
    case Cid::KHIN216:
    case Cid::KHIN218: {
        double sq_half = cx.sq().mom(p / 2.0, MomentKind::Raw);
        double ch = cx.chaos(p);
        double mo = cx.mom(p, MomentKind::Absolute);
        double two_mp = std::pow(2.0, mp);
        double khin = std::pow(p - 1.0, mp / 2.0);
        auto link = [&](const char* name, double lhs, double slot, double rhs) {
            Piece pc;
            pc.link = name;
            pc.lhs = lhs;
            pc.rhs = c * slot * rhs;
            pc.constant = c * slot;
            out.push_back(std::move(pc));
        };
        link("L1", sq_half, 1.0, ch);
        link("L2", ch, two_mp, mo);
        link("L3", mo, two_mp, ch);
        link("L4", ch, khin, sq_half);
        break;
    }
    case Cid::RAND24: {
        double ch = cx.chaos(p);
        double mo = cx.mom(p, MomentKind::Absolute);
        Piece a;
        a.link = "L1";
        a.lhs = ch;
        a.rhs = c * mo;
        a.constant = c;
        Piece b;
        b.link = "L2";
        b.lhs = mo;
        b.rhs = c * ch;
        b.constant = c;
        out.push_back(std::move(a));
        out.push_back(std::move(b));
        break;
    }
    case Cid::PROP24_UPPER:
    case Cid::PROP24_LOWER: {
        Piece& pc = single();
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            double v = cx.sq().maxm(J, p / 2.0);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(std::pow(p, (m + J.count()) * p / 2.0) * v);
        }
        double full = cx.mom(p, MomentKind::Absolute);
        pc.constant = c;
        if (cd.cid == Cid::PROP24_UPPER) {
            pc.lhs = full;
            pc.rhs = std::pow(c, p) * sum.value();
        } else {
            pc.lhs = c * best;
            pc.rhs = full;
        }
        break;
    }
    case Cid::THM25_UPPER:
    case Cid::THM25_LOWER: {
        Piece& pc = single();
        double q = std::pow(0.75, p / (p - 2.0)) *
                   std::pow(2.0 * std::pow(c, p) * std::pow(p, mp / 2.0), -1.0 / (p - 2.0));
        double t0 = quantile_t0_unchecked(cx.abs_law(), q);
        pc.q = q;
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            if (J.bits == 0) continue;
            double v = cx.sq().maxm(J, p / 2.0);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(std::pow(p, (m + J.count()) * p / 2.0) * v);
        }
        pc.terms.emplace_back("t0^p", std::pow(t0, p));
        pc.constant = c;
        if (cd.cid == Cid::THM25_UPPER) {
            pc.lhs = cx.mom(p, MomentKind::Absolute);
            pc.rhs = 2.0 * std::pow(c, p) *
                     (std::pow(2.0 * std::pow(p, m / 2.0), p) * std::pow(t0, p) + sum.value());
        } else {
            double coeff = std::pow(4.0 * c * std::pow(p, m / 2.0), -p / (p - 2.0));
            pc.lhs = std::max(coeff * std::pow(t0, p),
                              std::pow(2.0, -mp) * best);
            pc.rhs = cx.mom(p, MomentKind::Absolute);
            pc.note = "holds for every constant; quantile level recorded";
        }
        break;
    }
    case Cid::PROP26_UPPER:
    case Cid::PROP26_LOWER: {
        Piece& pc = single();
        double r = *o.r;
        double best = 0.0;
        for (IndexSubset J : all_subsets(m)) {
            double v = cx.lrm(J, p, r);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
        }
        double full = cx.mom(p, MomentKind::Raw);
        pc.constant = c;
        if (cd.cid == Cid::PROP26_UPPER) {
            pc.lhs = full;
            pc.rhs = c * best;
        } else {
            pc.lhs = c * best;
            pc.rhs = full;
        }
        break;
    }
    case Cid::THM27_UPPER:
    case Cid::THM27_LOWER: {
        Piece& pc = single();
        double r = *o.r;
        double q = 0.5 * std::pow(std::pow(2.0, p + 1.0) * c, -1.0 / (p - r));
        double t0 = quantile_t0_unchecked(cx.law(), q);
        pc.q = q;
        double best = 0.0;
        KahanSum sum;
        for (IndexSubset J : all_subsets(m)) {
            if (J.bits == 0) continue;
            double v = cx.lrm(J, p, r);
            pc.terms.emplace_back(jname(J, m), v);
            best = std::max(best, v);
            sum.add(v);
        }
        pc.terms.emplace_back("t0^p", std::pow(t0, p));
        pc.constant = c;
        if (cd.cid == Cid::THM27_UPPER) {
            pc.lhs = cx.mom(p, MomentKind::Raw);
            pc.rhs = 2.0 * c * (std::pow(2.0, p / r) * std::pow(t0, p) + sum.value());
        } else {
            pc.lhs = std::max(q * std::pow(t0, p), best);
            pc.rhs = cx.mom(p, MomentKind::Raw);
            pc.note = "quantile coefficient taken at the tail level; subset sum read as max";
        }
        break;
    }
    case Cid::KN28:
    case Cid::KN28T: {
        Piece& pc = single();
        double em = cx.emax(p);
        double v;
        if (cd.cid == Cid::KN28) {
            v = cx.v0_plain();
        } else {
            double t0 = quantile_t0(cx.law(), 0.5);
            pc.q = 0.5;
            v = v0(cx.xi(), t0);
        }
        pc.lhs = cx.mom(p, MomentKind::Raw);
        pc.rhs = c * (em + std::pow(v, p));
        pc.constant = c;
        pc.terms = {{"E_max^p", em}, {"v0^p", std::pow(v, p)}};
        pc.note = "two-sided envelope; ratio recorded, nothing asserted";
        break;
    }
    case Cid::DEC25: {
        Piece& pc = single();
        pc.lhs = cx.mom(p, MomentKind::Absolute);
        pc.rhs = c * moment(cx.twin_law(), p, MomentKind::Absolute);
        pc.constant = c;
        pc.note = "undecoupled vs decoupled twin; ratio recorded, nothing asserted";
        break;
    }
    case Cid::PINELIS31: {
        Piece& pc = single();
        KahanSum s2;
        for (const auto& d : cx.xi()) s2.add(d.moment_raw(2.0));
        double em = cx.emax_abs(p);
        double t = std::max(std::pow(p, p) * em,
                            std::pow(p, p / 2.0) * std::pow(s2.value(), p / 2.0));
        pc.lhs = cx.mom(p, MomentKind::Absolute);
        pc.rhs = std::pow(c, p) * t;
        pc.constant = c;
        pc.terms = {{"E_max_abs^p", em}, {"variance_sum", s2.value()}};
        break;
    }
    case Cid::BERN32:
    case Cid::TAIL35:
    case Cid::THM33TAIL:
    case Cid::COR34TAIL: {
        Piece& pc = single();
        double x = *o.x;
        const BoundParams* bp;
        ExpBoundForm form;
        if (cd.cid == Cid::BERN32) {
            bp = &cx.m1p();
            form = ExpBoundForm::Bernstein;
        } else if (cd.cid == Cid::TAIL35) {
            bp = &cx.abcd();
            form = ExpBoundForm::ThreeRegime;
        } else if (cd.cid == Cid::THM33TAIL) {
            bp = &cx.abcd();
            form = ExpBoundForm::FourRegime;
        } else {
            bp = &cx.iid();
            form = ExpBoundForm::IidFourRegime;
        }
        bool strict = cd.cid == Cid::BERN32 || cd.cid == Cid::TAIL35;
        pc.lhs = strict ? cx.abs_law().tail_gt(x) : cx.abs_law().tail_ge(x);
        pc.rhs = exp_bound_eval(form, *bp, c, x);
        pc.constant = c;
        pc.note = "regime=" + exp_bound_regime(form, *bp, c, x);
        pc.terms = {{"A", bp->A}, {"B", bp->B}, {"C", bp->C}, {"D", bp->D}};
        break;
    }
    case Cid::M2MOM33: {
        Piece& pc = single();
        double s0 = cx.sq().maxm(IndexSubset{0}, p / 2.0);
        double s1 = cx.sq().maxm(IndexSubset{1}, p / 2.0);
        double s2 = cx.sq().maxm(IndexSubset{2}, p / 2.0);
        double s3 = cx.sq().maxm(IndexSubset{3}, p / 2.0);
        double t = std::max({std::pow(p, p) * s0, std::pow(p, 1.5 * p) * s1,
                             std::pow(p, 1.5 * p) * s2, std::pow(p, 2.0 * p) * s3});
        pc.lhs = cx.mom(p, MomentKind::Absolute);
        pc.rhs = std::pow(c, p) * t;
        pc.constant = c;
        pc.terms = {{"J={}", s0}, {"J={1}", s1}, {"J={2}", s2}, {"J={1,2}", s3}};
        break;
    }
    case Cid::THM32: {
        Piece& pc = single();
        double s0 = cx.sq().maxm(IndexSubset{0}, p / 2.0);
        double s1 = cx.sq().maxm(IndexSubset{1}, p / 2.0);
        double s2 = cx.sq().maxm(IndexSubset{2}, p / 2.0);
        double s3 = cx.sq().maxm(IndexSubset{3}, p / 2.0);
        double dn = cx.abcd().D;
        KahanSum t;
        t.add(std::pow(p, p / 2.0) * s0);
        t.add(std::pow(p, p) * std::pow(dn, p));
        t.add(std::pow(p, 1.5 * p) * (s1 + s2));
        t.add(std::pow(p, 2.0 * p) * s3);
        pc.lhs = cx.mom(p, MomentKind::Absolute);
        pc.rhs = std::pow(c, p) * t.value();
        pc.constant = c;
        pc.terms = {{"J={}", s0}, {"D^p", std::pow(dn, p)}, {"J={1}", s1},
                    {"J={2}", s2}, {"J={1,2}", s3}};
        break;
    }
    case Cid::THM33MOM:
    case Cid::COR34MOM: {
        Piece& pc = single();
        const BoundParams& bp = cd.cid == Cid::THM33MOM ? cx.abcd() : cx.iid();
        KahanSum t;
        t.add(std::pow(p, p / 2.0) * std::pow(bp.C, p));
        t.add(std::pow(p, p) * std::pow(bp.D, p));
        t.add(std::pow(p, 1.5 * p) * std::pow(bp.B, p));
        t.add(std::pow(p, 2.0 * p) * std::pow(bp.A, p));
        pc.lhs = cx.mom(p, MomentKind::Absolute);
        pc.rhs = std::pow(c, p) * t.value();
        pc.constant = c;
        pc.terms = {{"A", bp.A}, {"B", bp.B}, {"C", bp.C}, {"D", bp.D}};
        break;
    }
    default:
        throw ApplicabilityError("eval_case: unhandled case");
    }
    return out;
}

/// Empirical-process evaluation (score classes).
std::vector<Piece> eval_empirical(const CaseDef& cd, const EmpiricalSummary& es,
                                  const CheckOptions& o, double c) {
    const double p = o.p;
    std::vector<Piece> out;
    out.emplace_back();
    Piece& pc = out.back();
    switch (cd.cid) {
    case Cid::TALAGRAND36: {
        double x = *o.x;
        double thr = talagrand_threshold(es.mean_abs, std::sqrt(es.sigma_sq), es.a_sup, x);
        pc.lhs = es.law.abs().tail_ge(thr);
        pc.rhs = c * std::exp(-x);
        pc.constant = c;
        pc.terms = {{"threshold", thr}, {"mean_abs", es.mean_abs},
                    {"sigma", std::sqrt(es.sigma_sq)}, {"a", es.a_sup}};
        break;
    }
    case Cid::ROSEMP37:
    case Cid::PROP31EMP: {
        double last = cd.cid == Cid::ROSEMP37 ? std::pow(es.a_sup, p) : es.envelope_moment;
        double t = std::pow(es.mean_abs, p) +
                   std::pow(p, p / 2.0) * std::pow(es.sigma_sq, p / 2.0) +
                   std::pow(p, p) * last;
        pc.lhs = es.moment_p;
        pc.rhs = std::pow(c, p) * t;
        pc.constant = c;
        pc.terms = {{"mean_pth", std::pow(es.mean_abs, p)},
                    {"sigma_pth", std::pow(es.sigma_sq, p / 2.0)},
                    {"sup_term", last}};
        break;
    }
    default:
        throw ApplicabilityError("eval_empirical: unhandled case");
    }
    return out;
}

// ------------------------------------------------------------- assembly ---

bool piece_passes(const Piece& pc) {
    if (pc.lhs == 0.0 && pc.rhs == 0.0) return true;
    return pc.lhs <= pc.rhs * (1.0 + kTol);
}

VerificationReport to_report(const CaseDef& cd, const Piece& pc, const std::string& inst_id,
                             int m, int n, const CheckOptions& o, bool tail_row) {
    VerificationReport r;
    r.case_id = cd.info.id;
    r.link = pc.link;
    r.instance_id = inst_id;
    r.m = m;
    r.n = n;
    r.p = tail_row ? 0.0 : o.p;
    if (cd.info.needs_r || (cd.cid == Cid::ALPHA26 && o.r)) r.r = o.r;
    if (tail_row) r.x = o.x;
    r.lhs = pc.lhs;
    r.rhs = pc.rhs;
    r.constant = pc.constant;
    r.vacuous = pc.lhs == 0.0 && pc.rhs == 0.0;
    if (r.vacuous)
        r.ratio = 0.0;
    else if (pc.rhs == 0.0)
        r.ratio = std::numeric_limits<double>::infinity();
    else
        r.ratio = pc.lhs / pc.rhs;
    r.pass = cd.info.mode == CaseMode::Report ? true : piece_passes(pc);
    r.q = pc.q;
    r.terms = pc.terms;
    r.note = pc.note;
    return r;
}

std::vector<double> default_tail_grid(Ctx& cx, const std::vector<double>& levels) {
    std::vector<double> xs;
    for (double q : levels) {
        if (!(q > 0.0 && q < 1.0)) continue;
        double x = quantile_t0_unchecked(cx.abs_law(), q);
        if (x > 0.0) xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
             xs.end());
    return xs;
}

const std::vector<double> kDefaultTailLevels = {0.5, 0.25, 0.1, 0.02};

/// Smallest constant for which pass(c) holds, assuming pass is monotone
/// nondecreasing in c.  Deterministic log-scale bisection.
double bisect_min_constant(const std::function<bool(double)>& pass) {
    double hi = 1.0;
    while (!pass(hi)) {
        hi *= 4.0;
        if (hi > 1e30) return std::numeric_limits<double>::infinity();
    }
    double lo = hi * 0.25;
    while (lo > 1e-30 && pass(lo)) {
        hi = lo;
        lo *= 0.25;
    }
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-10; ++it) {
        double mid = std::sqrt(lo * hi);
        if (pass(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Per-instance minimal (upper) or maximal (lower) admissible constant.
/// Returns nullopt when the instance is vacuous for this case.
std::optional<double> fit_one(const CaseDef& cd, Ctx& cx, const CheckOptions& o) {
    const double p = o.p;
    const double mp = static_cast<double>(cx.m()) * p;
    if (cd.fit == FitKind::None)
        throw ApplicabilityError("fit_constant: case " + cd.info.id +
                                 " holds for every constant; nothing to fit");
    if (cd.info.mode == CaseMode::Tail) {
        std::vector<double> xs = o.x ? std::vector<double>{*o.x} : default_tail_grid(cx, kDefaultTailLevels);
        if (xs.empty()) return std::nullopt;
        if (cd.fit == FitKind::Linear) { // explicit tail structure: c scales the bound
            double worst = 0.0;
            bool binding = false;
            for (double x : xs) {
                CheckOptions ox = o;
                ox.x = x;
                auto pieces = eval_case(cd, cx, ox, 1.0);
                const Piece& pc = pieces.front();
                if (pc.lhs == 0.0 && pc.rhs == 0.0) continue;
                binding = true;
                worst = std::max(worst, pc.rhs > 0.0 ? pc.lhs / pc.rhs
                                                     : std::numeric_limits<double>::infinity());
            }
            if (!binding) return std::nullopt;
            return worst;
        }
        bool any = false;
        for (double x : xs) {
            CheckOptions ox = o;
            ox.x = x;
            auto pieces = eval_case(cd, cx, ox, 1.0);
            if (!(pieces.front().lhs == 0.0 && pieces.front().rhs == 0.0)) any = true;
        }
        if (!any) return std::nullopt;
        return bisect_min_constant([&](double c) {
            for (double x : xs) {
                CheckOptions ox = o;
                ox.x = x;
                auto pieces = eval_case(cd, cx, ox, c);
                if (!piece_passes(pieces.front())) return false;
            }
            return true;
        });
    }
    if (cd.fit == FitKind::Bisect) {
        auto base = eval_case(cd, cx, o, 1.0);
        if (base.front().lhs == 0.0) return std::nullopt; // rhs(c) >= 0 for all c
        return bisect_min_constant([&](double c) {
            auto pieces = eval_case(cd, cx, o, c);
            return piece_passes(pieces.front());
        });
    }
    // Closed forms: evaluate the structure at c = 1 and rescale.
    auto pieces = eval_case(cd, cx, o, 1.0);
    bool lower = cd.info.side == CaseSide::Lower;
    std::optional<double> best;
    for (const Piece& pc : pieces) {
        if (pc.lhs == 0.0 && pc.rhs == 0.0) continue;
        double c;
        if (lower) {
            // lhs = c·T against fixed rhs: largest admissible multiplier
            if (pc.lhs == 0.0) continue; // any c works; not binding
            c = pc.rhs / pc.lhs;
        } else {
            if (pc.rhs == 0.0) return std::numeric_limits<double>::infinity();
            double ratio = pc.lhs / pc.rhs;
            switch (cd.fit) {
            case FitKind::PowerP: c = std::pow(ratio, 1.0 / p); break;
            case FitKind::PowerMP: c = std::pow(ratio, 1.0 / mp); break;
            default: c = ratio; break;
            }
        }
        if (!best)
            best = c;
        else
            best = lower ? std::min(*best, c) : std::max(*best, c);
    }
    return best;
}

std::optional<double> fit_one_empirical(const CaseDef& cd, const EmpiricalSummary& es,
                                        const CheckOptions& o) {
    const double p = o.p;
    if (cd.cid == Cid::TALAGRAND36) {
        std::vector<double> xs;
        if (o.x)
            xs.push_back(*o.x);
        else
            for (double q : kDefaultTailLevels) xs.push_back(-std::log(q));
        double worst = 0.0;
        bool binding = false;
        for (double x : xs) {
            CheckOptions ox = o;
            ox.x = x;
            auto pieces = eval_empirical(cd, es, ox, 1.0);
            const Piece& pc = pieces.front();
            if (pc.lhs == 0.0 && pc.rhs == 0.0) continue;
            binding = true;
            worst = std::max(worst, pc.lhs / pc.rhs);
        }
        if (!binding) return std::nullopt;
        return worst;
    }
    auto pieces = eval_empirical(cd, es, o, 1.0);
    const Piece& pc = pieces.front();
    if (pc.lhs == 0.0 && pc.rhs == 0.0) return std::nullopt;
    if (pc.rhs == 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(pc.lhs / pc.rhs, 1.0 / p);
}

void require_applicable(const CaseDef& cd, Ctx* cx, const CheckOptions& o) {
    std::string why = violation(cd, cx, o);
    if (!why.empty())
        throw ApplicabilityError(cd.info.id + ": " + why);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

// ----------------------------------------------------------- public API ---

const std::vector<CaseInfo>& registry() {
    static const std::vector<CaseInfo> infos = [] {
        std::vector<CaseInfo> v;
        for (const auto& d : defs()) v.push_back(d.info);
        return v;
    }();
    return infos;
}

const CaseInfo& case_info(const std::string& id) { return def_of(id).info; }

std::vector<VerificationReport> check_inequality(const std::string& id,
                                                 const UStatInstance& inst,
                                                 const CheckOptions& opts) {
    const CaseDef& cd = def_of(id);
    Ctx cx(inst, opts.enumeration);
    if (cd.info.empirical)
        throw ApplicabilityError(id + ": case takes a score class, not an instance");
    std::vector<VerificationReport> out;
    if (cd.info.mode == CaseMode::Tail) {
        std::vector<double> xs;
        if (opts.x) {
            require_applicable(cd, &cx, opts);
            xs.push_back(*opts.x);
        } else {
            CheckOptions probe = opts;
            probe.x = 1.0; // applicability does not depend on the abscissa
            require_applicable(cd, &cx, probe);
            xs = default_tail_grid(cx, kDefaultTailLevels);
        }
        for (double x : xs) {
            CheckOptions ox = opts;
            ox.x = x;
            double c = ox.constant.value_or(default_constant(cd, ox.p, cx.m()));
            for (const Piece& pc : eval_case(cd, cx, ox, c))
                out.push_back(to_report(cd, pc, inst.id, cx.m(), cx.n(), ox, true));
        }
        return out;
    }
    require_applicable(cd, &cx, opts);
    double c = opts.constant.value_or(default_constant(cd, opts.p, cx.m()));
    for (const Piece& pc : eval_case(cd, cx, opts, c))
        out.push_back(to_report(cd, pc, inst.id, cx.m(), cx.n(), opts, false));
    return out;
}

std::vector<VerificationReport> check_empirical(const std::string& id, const ScoreClass& sc,
                                                const CheckOptions& opts) {
    const CaseDef& cd = def_of(id);
    if (!cd.info.empirical)
        throw ApplicabilityError(id + ": case takes an instance, not a score class");
    require_applicable(cd, nullptr, opts);
    EmpiricalSummary es =
        empirical_sup_moment(sc, std::max(opts.p, 1.0), opts.enumeration);
    double c = opts.constant.value_or(1.0);
    std::vector<VerificationReport> out;
    bool tail = cd.info.mode == CaseMode::Tail;
    for (const Piece& pc : eval_empirical(cd, es, opts, c)) {
        VerificationReport r = to_report(cd, pc, sc.id, 1, sc.k(), opts, tail);
        out.push_back(std::move(r));
    }
    return out;
}

double fit_constant(const std::string& id, const std::vector<UStatInstance>& corpus,
                    const CheckOptions& opts) {
    const CaseDef& cd = def_of(id);
    if (cd.info.empirical)
        throw ApplicabilityError(id + ": case takes score classes; use fit_empirical_constant");
    if (corpus.empty()) throw ApplicabilityError("fit_constant: empty corpus");
    bool lower = cd.info.side == CaseSide::Lower;
    std::optional<double> fit;
    for (const auto& inst : corpus) {
        Ctx cx(inst, opts.enumeration);
        if (cd.info.mode == CaseMode::Tail) {
            CheckOptions probe = opts;
            if (!probe.x) probe.x = 1.0;
            require_applicable(cd, &cx, probe);
        } else {
            require_applicable(cd, &cx, opts);
        }
        auto c = fit_one(cd, cx, opts);
        if (!c) continue;
        if (!fit)
            fit = *c;
        else
            fit = lower ? std::min(*fit, *c) : std::max(*fit, *c);
    }
    if (!fit) throw ApplicabilityError("fit_constant: no binding instance in corpus");
    return *fit;
}

double fit_empirical_constant(const std::string& id, const std::vector<ScoreClass>& corpus,
                              const CheckOptions& opts) {
    const CaseDef& cd = def_of(id);
    if (!cd.info.empirical)
        throw ApplicabilityError(id + ": case takes instances; use fit_constant");
    if (corpus.empty()) throw ApplicabilityError("fit_constant: empty corpus");
    std::optional<double> fit;
    for (const auto& sc : corpus) {
        CheckOptions probe = opts;
        if (cd.cid == Cid::TALAGRAND36 && !probe.x) probe.x = 1.0;
        require_applicable(cd, nullptr, probe);
        EmpiricalSummary es =
            empirical_sup_moment(sc, std::max(opts.p, 1.0), opts.enumeration);
        auto c = fit_one_empirical(cd, es, opts);
        if (!c) continue;
        fit = fit ? std::max(*fit, *c) : *c;
    }
    if (!fit) throw ApplicabilityError("fit_constant: no binding instance in corpus");
    return *fit;
}

bool SuiteResult::all_passed() const {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return true;
}

SuiteResult run_suite(const std::vector<UStatInstance>& corpus, const SuiteOptions& opts) {
    SuiteResult res;
    std::vector<const CaseDef*> selected;
    if (opts.cases.empty()) {
        for (const auto& d : defs())
            if (d.info.mode != CaseMode::Tail && !d.info.empirical) selected.push_back(&d);
    } else {
        for (const auto& id : opts.cases) {
            const CaseDef& d = def_of(id);
            if (d.info.empirical)
                throw ApplicabilityError(id + ": empirical cases are not part of run_suite");
            selected.push_back(&d);
        }
    }

    std::vector<std::unique_ptr<Ctx>> ctxs;
    ctxs.reserve(corpus.size());
    for (const auto& inst : corpus)
        ctxs.push_back(std::make_unique<Ctx>(inst, opts.enumeration));
    // Precompute the exact laws concurrently; everything downstream reuses
    // them through the per-instance cache.
    parallel_chunks(ctxs.size(), opts.enumeration.threads,
                    [&](std::uint64_t i) { (void)ctxs[i]->law(); });

    std::map<std::string, CaseSummary> summaries;
    auto absorb = [&](const VerificationReport& r, const CaseDef& cd,
                      std::optional<double> fitted) {
        auto it = summaries.find(cd.info.id);
        if (it == summaries.end()) {
            CaseSummary blank;
            blank.case_id = cd.info.id;
            it = summaries.emplace(cd.info.id, std::move(blank)).first;
        }
        CaseSummary& s = it->second;
        ++s.reports;
        if (r.pass) ++s.passed;
        if (r.vacuous) {
            ++s.vacuous;
        } else {
            s.max_ratio = std::max(s.max_ratio, r.ratio);
            s.min_ratio = std::min(s.min_ratio, r.ratio);
        }
        if (fitted && (!s.fitted_constant || *fitted > *s.fitted_constant))
            s.fitted_constant = fitted;
    };

    for (const CaseDef* cdp : selected) {
        const CaseDef& cd = *cdp;
        std::vector<double> rgrid =
            cd.info.needs_r ? opts.r_grid : std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
        for (double p : opts.p_grid) {
            for (double r : rgrid) {
                CheckOptions co;
                co.p = p;
                if (cd.info.needs_r) co.r = r;
                co.enumeration = opts.enumeration;
                std::vector<std::size_t> live;
                for (std::size_t i = 0; i < corpus.size(); ++i) {
                    CheckOptions probe = co;
                    if (cd.info.mode == CaseMode::Tail) probe.x = 1.0;
                    if (violation(cd, ctxs[i].get(), probe).empty()) live.push_back(i);
                }
                if (live.empty()) continue;

                std::optional<double> fitted;
                if (cd.info.mode == CaseMode::FitConstant ||
                    (cd.info.mode == CaseMode::Tail && cd.fit == FitKind::Bisect)) {
                    std::optional<double> f;
                    for (std::size_t i : live) {
                        auto c = fit_one(cd, *ctxs[i], co);
                        if (c) f = f ? std::max(*f, *c) : *c;
                    }
                    if (!f) continue; // nothing binding at this (p, r)
                    fitted = f;
                }

                for (std::size_t i : live) {
                    Ctx& cx = *ctxs[i];
                    CheckOptions ci = co;
                    if (fitted) ci.constant = fitted;
                    if (cd.info.mode == CaseMode::Tail) {
                        for (double x : default_tail_grid(cx, opts.tail_levels)) {
                            CheckOptions ox = ci;
                            ox.x = x;
                            double c = ox.constant.value_or(default_constant(cd, p, cx.m()));
                            for (const Piece& pc : eval_case(cd, cx, ox, c)) {
                                auto rep = to_report(cd, pc, corpus[i].id, cx.m(), cx.n(), ox, true);
                                absorb(rep, cd, fitted);
                                res.reports.push_back(std::move(rep));
                            }
                        }
                    } else {
                        double c = ci.constant.value_or(default_constant(cd, p, cx.m()));
                        for (const Piece& pc : eval_case(cd, cx, ci, c)) {
                            auto rep = to_report(cd, pc, corpus[i].id, cx.m(), cx.n(), ci, false);
                            absorb(rep, cd, fitted);
                            res.reports.push_back(std::move(rep));
                        }
                    }
                }
            }
        }
    }
    for (const CaseDef* cdp : selected) {
        auto it = summaries.find(cdp->info.id);
        if (it != summaries.end()) res.summaries.push_back(it->second);
    }
    return res;
}

void write_reports_csv(const std::vector<VerificationReport>& reports, std::ostream& os) {
    os << "case,instance,m,n,p,r,lhs,rhs,constant,ratio,pass,vacuous\n";
    for (const auto& r : reports) {
        std::string case_col = r.case_id;
        if (!r.link.empty()) case_col += "." + r.link;
        double p_col = r.x ? *r.x : r.p; // tail rows carry the abscissa here
        os << case_col << ',' << r.instance_id << ',' << r.m << ',' << r.n << ','
           << format_double(p_col) << ',' << (r.r ? format_double(*r.r) : std::string()) << ','
           << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
           << format_double(r.constant) << ',' << format_double(r.ratio) << ','
           << (r.pass ? "true" : "false") << ',' << (r.vacuous ? "true" : "false") << '\n';
    }
}

void write_reports_jsonl(const std::vector<VerificationReport>& reports, std::ostream& os) {
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["case"] = r.case_id;
        if (!r.link.empty()) j["link"] = r.link;
        j["instance"] = r.instance_id;
        j["m"] = r.m;
        j["n"] = r.n;
        j["p"] = r.p;
        if (r.r) j["r"] = *r.r;
        if (r.x) j["x"] = *r.x;
        j["lhs"] = json_number(r.lhs);
        j["rhs"] = json_number(r.rhs);
        j["constant"] = json_number(r.constant);
        j["ratio"] = json_number(r.ratio);
        j["pass"] = r.pass;
        j["vacuous"] = r.vacuous;
        if (r.q) j["q"] = *r.q;
        if (!r.terms.empty()) {
            nlohmann::ordered_json t;
            for (const auto& [k, v] : r.terms) t[k] = json_number(v);
            j["terms"] = t;
        }
        if (!r.note.empty()) j["note"] = r.note;
        os << j.dump() << '\n';
    }
}

} // namespace ustat
