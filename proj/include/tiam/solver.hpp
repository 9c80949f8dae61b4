#pragma once

// Per-layer subproblem updates. Each update takes explicit "views": the
// extrapolated points the surrogate is built at, plus the plain current
// values its majorization condition is checked against. Passing the current
// values as every view gives the non-accelerated update.

#include "tiam/accel.hpp"
#include "tiam/matrix.hpp"
#include "tiam/network.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace tiam {

/// Which points the majorization condition compares against.
enum class ConditionPoints {
    Printed,  // surrogate at extrapolated points vs phi at the current iterates
    Matched,  // phi evaluated at the same extrapolated points as the surrogate
};

struct BacktrackConfig {
    double init = 1e-3;
    double growth = 2.0;
    int max_doublings = 60;
    bool warm_start = true;
    ConditionPoints points = ConditionPoints::Printed;

    void validate() const;
};

enum class FistaStep { Fixed, Backtracking };

/// How the Lipschitz constant of the mean softmax cross-entropy is bounded.
enum class LossLipschitz {
    PerSample,     // 1/(2N): softmax-CE Hessian has norm <= 1/2 per column, mean divides by N
    Conservative,  // 1/2
};

struct FistaConfig {
    int max_iters = 200;
    double grad_tol = 1e-6;
    FistaStep step = FistaStep::Fixed;
    LossLipschitz lipschitz = LossLipschitz::PerSample;

    void validate() const;
};

/// The pieces of one accepted majorization condition:
///   base + linear + constant/2 * dist_sq >= target
struct MajorizationRecord {
    int epoch = 0;
    BlockKind block = BlockKind::W;
    std::size_t layer = 0;
    double constant = 0.0;
    double base = 0.0;
    double linear = 0.0;
    double dist_sq = 0.0;
    double target = 0.0;

    double majorant() const { return base + linear + 0.5 * constant * dist_sq; }
};

struct BacktrackResult {
    double constant = 0.0;
    DenseMatrix point;
    int doublings = 0;
    double gap = 0.0;  // majorant - target at the accepted point
};

/// Tries c = start * growth^j for j = 0..max_doublings and returns the first
/// whose candidate satisfies majorant(point, c) >= target(point) - 1e-12.
BacktrackResult backtrack_constant(const std::function<DenseMatrix(double)>& candidate,
                                   const std::function<double(const DenseMatrix&, double)>& majorant,
                                   const std::function<double(const DenseMatrix&)>& target,
                                   const BacktrackConfig& cfg, double start);
BacktrackResult backtrack_constant(const std::function<DenseMatrix(double)>& candidate,
                                   const std::function<double(const DenseMatrix&, double)>& majorant,
                                   const std::function<double(const DenseMatrix&)>& target,
                                   const BacktrackConfig& cfg);

struct BlockUpdate {
    DenseMatrix value;
    double constant = 0.0;  // accepted theta / xi / tau (rho for z)
    int doublings = 0;
    MajorizationRecord record;
};

// ---- W_l ------------------------------------------------------------------

struct WViews {
    const DenseMatrix& a_prev_bar;
    const DenseMatrix& W_tilde;
    const DenseMatrix& W_hat;
    const DenseMatrix& z_bar;
    const DenseMatrix& b_bar;
    // Plain current iterates for the condition.
    const DenseMatrix& a_prev;
    const DenseMatrix& z;
    const DenseMatrix& b;
};

/// Proximal-linear W step: G = W_tilde - grad_W phi(a_bar, W_hat, z_bar, b_bar)/theta,
/// then the prox of the regularizer (identity, shrink, or soft-threshold).
DenseMatrix prox_W_step(const DenseMatrix& W_tilde, const DenseMatrix& grad, double theta,
                        const RegularizerSpec& reg);

BlockUpdate update_W(const WViews& v, double rho, const RegularizerSpec& reg,
                     const BacktrackConfig& cfg, double start);

// ---- b_l ------------------------------------------------------------------

struct BViews {
    const DenseMatrix& a_prev_bar;
    const DenseMatrix& W_bar;
    const DenseMatrix& z_bar;
    const DenseMatrix& b_tilde;
    const DenseMatrix& b_hat;
    const DenseMatrix& a_prev;
    const DenseMatrix& W;
    const DenseMatrix& z;
};

BlockUpdate update_b(const BViews& v, double rho, const BacktrackConfig& cfg, double start);

// ---- z_l, l < L ------------------------------------------------------------

struct ZViews {
    const DenseMatrix& a_prev_bar;
    const DenseMatrix& W_bar;
    const DenseMatrix& b_bar;
    const DenseMatrix& z_tilde;
    const DenseMatrix& z_hat;
};

/// Bounds on z_l from the current a_l. Entries whose interval is empty (a
/// fell below the activation's range after eps shrank) are bounded above by
/// h^{-1}(inf h + eps/2) and unbounded below; `relaxed` counts them.
InverseBounds hidden_z_bounds(const Activation& act, const DenseMatrix& a, double eps,
                              std::size_t* relaxed = nullptr);

/// Gradient step from z_tilde with step 1/rho, clipped to the bounds.
DenseMatrix update_z_hidden(const ZViews& v, const InverseBounds& bounds, double rho);

// ---- z_L --------------------------------------------------------------------

struct FistaReport {
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    std::vector<double> objective_trace;  // guarded objective after each iteration
};

/// Minimizes V_L(z) + R(z; y) with monotone FISTA started from z_tilde.
DenseMatrix update_z_output(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                            const FistaConfig& cfg, FistaReport* report = nullptr);

/// The smooth objective minimized by update_z_output, including V_L's constant.
double output_subproblem_objective(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                                   const DenseMatrix& z);
DenseMatrix output_subproblem_gradient(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                                       const DenseMatrix& z);

// ---- a_l, l < L --------------------------------------------------------------

struct AViews {
    const DenseMatrix& a_tilde;
    const DenseMatrix& a_hat;
    const DenseMatrix& W_next_bar;
    const DenseMatrix& z_next_bar;
    const DenseMatrix& b_next_bar;
    const DenseMatrix& z_box;  // z_bar_l: centre of the box h(z) +- eps
    const DenseMatrix& W_next;
    const DenseMatrix& z_next;
    const DenseMatrix& b_next;
};

BlockUpdate update_a(const AViews& v, const Activation& act, double eps, double rho,
                     const BacktrackConfig& cfg, double start);

}  // namespace tiam
