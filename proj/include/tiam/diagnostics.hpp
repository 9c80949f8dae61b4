#pragma once

// Empirical checks of the convergence theory on completed runs: objective
// monotonicity, vanishing increments, majorization conditions, a
// stationarity residual, and a two-step linear-rate estimate.

#include "tiam/solver.hpp"
#include "tiam/trainer.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace tiam {

struct MonotonicityViolation {
    int index = 0;  // k such that F^{k+1} > F^k (+ slack)
    double delta = 0.0;
};

/// All k with F^{k+1} - F^k > slack (1 + |F^k|). `first_index` labels F[0].
std::vector<MonotonicityViolation> check_monotonicity(std::span<const double> F, double slack,
                                                      int first_index = 1);
/// Uses [initial_F, F^1, ..., F^K], labelling the initial value 0.
std::vector<MonotonicityViolation> check_monotonicity(const RunHistory& history, double slack);

struct BlockRatios {
    std::optional<double> W, b, z, a;
};

struct IncrementSeries {
    std::vector<BlockNorms> norms;  // one entry per consecutive snapshot pair
    /// mean of the last 10% over mean of the first 10%; absent when there are
    /// fewer than two entries or the first-decile mean is zero.
    BlockRatios ratio;
};

IncrementSeries increment_norms(std::span<const NetworkState> snapshots);
/// Same ratio computation over already-measured norms.
IncrementSeries increment_series(std::vector<BlockNorms> norms);

struct RateEstimate {
    std::vector<double> ratios;  // r_k = (F^{k+1} - F*)/(F^{k-1} - F*)
    std::vector<int> indices;    // the k of each ratio
    std::optional<double> max_last_quartile;
};

RateEstimate estimate_rate(std::span<const double> F, double F_star);

struct MajorizationAudit {
    std::size_t failures = 0;
    std::size_t checked = 0;
    bool empty = false;  // warning: nothing was audited
};

/// Recomputes base + linear + c/2 dist_sq >= target for each record; a
/// shortfall beyond 1e-10 is a failure.
MajorizationAudit verify_majorization(std::span<const MajorizationRecord> records);

/// ||dW|| + ||dz|| + ||da|| + ||db|| between consecutive snapshots, each
/// block's layers pooled into one Frobenius norm.
double stationarity_residual(const NetworkState& current, const NetworkState& previous);

struct DiagnosticsReport {
    std::vector<MonotonicityViolation> monotonicity_violations;
    double max_feasibility_violation = 0.0;
    IncrementSeries increments;
    RateEstimate rate;
    std::optional<double> rate_max_wide_margin;  // same estimate with a 10x larger margin
    MajorizationAudit majorization;
    std::vector<double> stationarity;  // per epoch
    double stationarity_residual = 0.0;  // final epoch
};

/// F* is taken as min(F) - margin.
DiagnosticsReport build_report(const RunHistory& history, double slack = 1e-8,
                               double margin = 1e-12);

void write_report_text(std::ostream& os, const DiagnosticsReport& r);
/// One `key=value` per line.
void write_report_kv(std::ostream& os, const DiagnosticsReport& r);

}  // namespace tiam
