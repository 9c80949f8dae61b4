#pragma once

#include "tiam/matrix.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace tiam {

enum class RhoRule {
    Max,  // rho <- max(growth * rho, clip), as printed
    Min,  // rho <- min(growth * rho, clip), caps growth instead
};

enum class RhoCost { Objective, Loss };

/// Coefficient, tolerance and penalty schedules.
struct ScheduleConfig {
    double p1_base = 1.0;
    double p2_base = 1.0;
    double p3_base = 0.55;
    double p3_exponent = 1.25;
    double eps0 = 100.0;
    double eps_floor = 1e-4;
    double rho0 = 1e-3;
    double rho_growth = 1.2;
    double rho_clip = 1e-3;
    RhoRule rho_rule = RhoRule::Max;
    RhoCost rho_cost = RhoCost::Objective;
    int epochs = 200;  // K

    void validate() const;
};

struct InertialCoefficients {
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
};

/// The three extrapolated views of one block for one update: tilde is the
/// prox centre, hat the gradient-evaluation point, bar the value exported to
/// the other blocks once the update is accepted.
struct AccelTriple {
    DenseMatrix tilde;
    DenseMatrix hat;
    DenseMatrix bar;
};

/// current + p (current - previous)
DenseMatrix extrapolate(const DenseMatrix& current, const DenseMatrix& previous, double p);

/// tilde and hat from (u_k, u_{k-1}); bar is left as a copy of current until
/// the update is known.
AccelTriple pre_update_views(const DenseMatrix& current, const DenseMatrix& previous,
                             const InertialCoefficients& c);

/// p1 = (k-1)/(k+2) p1_base, p2 likewise, p3 = (1 - k/K)^exp p3_base, for 1 <= k <= K.
InertialCoefficients schedule_p(int k, const ScheduleConfig& cfg);

/// max(eps0 / 2^k, eps_floor) for k >= 0.
double schedule_eps(int k, const ScheduleConfig& cfg);

/// `history` holds the last three epoch costs, oldest first. Grows rho only
/// when the cost failed to decrease twice in a row.
double schedule_rho(double rho, std::span<const double> history, const ScheduleConfig& cfg);

enum class BlockKind { W, b, z, a };
std::string to_string(BlockKind kind);

struct BlockId {
    BlockKind kind;
    std::size_t layer;  // 0-based
};

struct SafeguardResult {
    DenseMatrix value;
    DenseMatrix bar;
    bool reverted = false;
    double f_after = 0.0;
};

/// One guarded sub-update. Runs `accel_update`; if it throws BacktrackError,
/// or the objective rises above `f_before` (or is +inf, meaning the result
/// left the feasible set), the result is discarded and `plain_update` is
/// accepted instead. bar = value + p3 (value - current).
///
/// When `accelerated` is false the two procedures coincide, so only the plain
/// one runs and nothing is reverted. A NaN objective throws NumericError.
SafeguardResult safeguarded_update(const BlockId& block, const DenseMatrix& current,
                                   const std::function<DenseMatrix()>& plain_update,
                                   const std::function<DenseMatrix()>& accel_update,
                                   double f_before,
                                   const std::function<double(const DenseMatrix&)>& f_evaluator,
                                   double p3, bool accelerated = true);

}  // namespace tiam
