#include "tiam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace tiam {
namespace {

double pooled(const std::vector<DenseMatrix>& cur, const std::vector<DenseMatrix>& prev) {
    double s = 0.0;
    for (std::size_t i = 0; i < cur.size() && i < prev.size(); ++i)
        s += frobenius_norm_sq(sub(cur[i], prev[i]));
    return std::sqrt(s);
}

std::optional<double> decile_ratio(const std::vector<BlockNorms>& norms,
                                   double BlockNorms::*field) {
    const std::size_t n = norms.size();
    if (n < 2) return std::nullopt;
    const std::size_t w = std::max<std::size_t>(1, n / 10);
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        head += norms[i].*field;
        tail += norms[n - w + i].*field;
    }
    if (head <= 0.0) return std::nullopt;
    return tail / head;
}

void write_optional(std::ostream& os, const std::optional<double>& v) {
    if (v) os << *v;
    else os << "undefined";
}

}  // namespace

std::vector<MonotonicityViolation> check_monotonicity(std::span<const double> F, double slack,
                                                      int first_index) {
    std::vector<MonotonicityViolation> out;
    for (std::size_t i = 0; i + 1 < F.size(); ++i) {
        const double d = F[i + 1] - F[i];
        if (d > slack * (1.0 + std::abs(F[i])))
            out.push_back({first_index + static_cast<int>(i), d});
    }
    return out;
}

std::vector<MonotonicityViolation> check_monotonicity(const RunHistory& history, double slack) {
    std::vector<double> F{history.initial_F};
    for (const auto& e : history.epochs) F.push_back(e.F);
    return check_monotonicity(F, slack, 0);
}

IncrementSeries increment_series(std::vector<BlockNorms> norms) {
    IncrementSeries s;
    s.norms = std::move(norms);
    s.ratio.W = decile_ratio(s.norms, &BlockNorms::W);
    s.ratio.b = decile_ratio(s.norms, &BlockNorms::b);
    s.ratio.z = decile_ratio(s.norms, &BlockNorms::z);
    s.ratio.a = decile_ratio(s.norms, &BlockNorms::a);
    return s;
}

IncrementSeries increment_norms(std::span<const NetworkState> snapshots) {
    std::vector<BlockNorms> norms;
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
        const NetworkState& c = snapshots[i];
        const NetworkState& p = snapshots[i - 1];
        norms.push_back({pooled(c.W, p.W), pooled(c.b, p.b), pooled(c.z, p.z), pooled(c.a, p.a)});
    }
    return increment_series(std::move(norms));
}

RateEstimate estimate_rate(std::span<const double> F, double F_star) {
    RateEstimate r;
    for (std::size_t k = 1; k + 1 < F.size(); ++k) {
        const double denom = F[k - 1] - F_star;
        if (!(denom > 1e-12)) continue;
        r.ratios.push_back((F[k + 1] - F_star) / denom);
        r.indices.push_back(static_cast<int>(k));
    }
    if (!r.ratios.empty()) {
        const std::size_t q = (r.ratios.size() + 3) / 4;
        r.max_last_quartile =
            *std::max_element(r.ratios.end() - static_cast<std::ptrdiff_t>(q), r.ratios.end());
    }
    return r;
}

MajorizationAudit verify_majorization(std::span<const MajorizationRecord> records) {
    MajorizationAudit a;
    a.empty = records.empty();
    for (const auto& rec : records) {
        ++a.checked;
        if (rec.target - rec.majorant() > 1e-10) ++a.failures;
    }
    return a;
}

double stationarity_residual(const NetworkState& current, const NetworkState& previous) {
    return pooled(current.W, previous.W) + pooled(current.z, previous.z) +
           pooled(current.a, previous.a) + pooled(current.b, previous.b);
}

DiagnosticsReport build_report(const RunHistory& history, double slack, double margin) {
    DiagnosticsReport r;
    r.monotonicity_violations = check_monotonicity(history, slack);
    std::vector<BlockNorms> norms;
    std::vector<double> F{history.initial_F};
    for (const auto& e : history.epochs) {
        r.max_feasibility_violation = std::max(r.max_feasibility_violation, e.feasibility_violation);
        norms.push_back(e.increments);
        r.stationarity.push_back(e.increments.sum());
        F.push_back(e.F);
    }
    r.increments = increment_series(std::move(norms));
    const double f_min = *std::min_element(F.begin(), F.end());
    r.rate = estimate_rate(F, f_min - margin);
    r.rate_max_wide_margin = estimate_rate(F, f_min - 10.0 * margin).max_last_quartile;
    r.majorization = verify_majorization(history.audit);
    if (!r.stationarity.empty()) r.stationarity_residual = r.stationarity.back();
    return r;
}

void write_report_text(std::ostream& os, const DiagnosticsReport& r) {
    os << std::setprecision(6);
    os << "objective monotonicity: " << r.monotonicity_violations.size() << " violation(s)\n";
    for (const auto& v : r.monotonicity_violations)
        os << "  k=" << v.index << "  dF=" << v.delta << "\n";
    os << "max feasibility violation: " << r.max_feasibility_violation << "\n";
    os << "increment ratio (last/first decile): W=";
    write_optional(os, r.increments.ratio.W);
    os << " b=";
    write_optional(os, r.increments.ratio.b);
    os << " z=";
    write_optional(os, r.increments.ratio.z);
    os << " a=";
    write_optional(os, r.increments.ratio.a);
    os << "\n";
    os << "rate estimate, max over last quartile: ";
    write_optional(os, r.rate.max_last_quartile);
    os << " (10x margin: ";
    write_optional(os, r.rate_max_wide_margin);
    os << ")\n";
    os << "majorization audit: " << r.majorization.failures << " failure(s) in "
       << r.majorization.checked << " record(s)";
    if (r.majorization.empty) os << " [warning: audit empty]";
    os << "\n";
    os << "stationarity residual (final): " << r.stationarity_residual << "\n";
}

void write_report_kv(std::ostream& os, const DiagnosticsReport& r) {
    os << std::setprecision(17);
    os << "monotonicity_violations=" << r.monotonicity_violations.size() << "\n";
    os << "max_feasibility_violation=" << r.max_feasibility_violation << "\n";
    auto opt = [&](const char* key, const std::optional<double>& v) {
        os << key << "=";
        write_optional(os, v);
        os << "\n";
    };
    opt("increment_ratio_W", r.increments.ratio.W);
    opt("increment_ratio_b", r.increments.ratio.b);
    opt("increment_ratio_z", r.increments.ratio.z);
    opt("increment_ratio_a", r.increments.ratio.a);
    opt("rate_max_last_quartile", r.rate.max_last_quartile);
    opt("rate_max_last_quartile_wide_margin", r.rate_max_wide_margin);
    os << "majorization_failures=" << r.majorization.failures << "\n";
    os << "majorization_checked=" << r.majorization.checked << "\n";
    os << "majorization_audit_empty=" << (r.majorization.empty ? 1 : 0) << "\n";
    os << "stationarity_residual=" << r.stationarity_residual << "\n";
}

}  // namespace tiam
