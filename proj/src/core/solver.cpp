#include "tiam/solver.hpp"

#include "tiam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tiam {
namespace {

constexpr double kConditionSlack = 1e-12;

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Upper and lower box around h(center) for the a-update.
std::pair<DenseMatrix, DenseMatrix> activation_box(const Activation& act,
                                                   const DenseMatrix& center, double eps) {
    DenseMatrix hz = activation_apply(act, center);
    DenseMatrix lo = hz;
    DenseMatrix hi = std::move(hz);
    for (double& v : lo.values()) v -= eps;
    for (double& v : hi.values()) v += eps;
    return {std::move(lo), std::move(hi)};
}

}  // namespace

void BacktrackConfig::validate() const {
    if (!(init > 0.0)) throw ConfigError("backtracking init must be > 0");
    if (!(growth > 1.0)) throw ConfigError("backtracking growth must be > 1");
    if (max_doublings < 0) throw ConfigError("backtracking max_doublings must be >= 0");
}

void FistaConfig::validate() const {
    if (max_iters < 1) throw ConfigError("fista max_iters must be >= 1");
    if (!(grad_tol > 0.0)) throw ConfigError("fista grad_tol must be > 0");
}

BacktrackResult backtrack_constant(const std::function<DenseMatrix(double)>& candidate,
                                   const std::function<double(const DenseMatrix&, double)>& majorant,
                                   const std::function<double(const DenseMatrix&)>& target,
                                   const BacktrackConfig& cfg, double start) {
    double c = start > 0.0 ? start : cfg.init;
    double gap = -std::numeric_limits<double>::infinity();
    for (int j = 0; j <= cfg.max_doublings; ++j, c *= cfg.growth) {
        DenseMatrix point = candidate(c);
        const double m = majorant(point, c);
        const double t = target(point);
        if (std::isnan(m) || std::isnan(t)) throw NumericError("backtracking: NaN in condition");
        gap = m - t;
        if (gap >= -kConditionSlack) return BacktrackResult{c, std::move(point), j, gap};
    }
    throw BacktrackError("backtracking exhausted " + std::to_string(cfg.max_doublings) +
                             " doublings (last gap " + std::to_string(gap) + ")",
                         gap);
}

BacktrackResult backtrack_constant(const std::function<DenseMatrix(double)>& candidate,
                                   const std::function<double(const DenseMatrix&, double)>& majorant,
                                   const std::function<double(const DenseMatrix&)>& target,
                                   const BacktrackConfig& cfg) {
    return backtrack_constant(candidate, majorant, target, cfg, cfg.init);
}

DenseMatrix prox_W_step(const DenseMatrix& W_tilde, const DenseMatrix& grad, double theta,
                        const RegularizerSpec& reg) {
    DenseMatrix G = axpby(1.0, W_tilde, -1.0 / theta, grad);
    switch (reg.kind) {
        case RegularizerKind::None: break;
        case RegularizerKind::L2: G = scale(G, theta / (theta + reg.strength)); break;
        case RegularizerKind::L1: {
            const double t = reg.strength / theta;
            for (double& v : G.values()) v = soft_threshold(v, t);
            break;
        }
    }
    return G;
}

BlockUpdate update_W(const WViews& v, double rho, const RegularizerSpec& reg,
                     const BacktrackConfig& cfg, double start) {
    const DenseMatrix g = penalty_grad_W(v.a_prev_bar, v.W_hat, v.z_bar, v.b_bar, rho);
    const double base = penalty_phi(v.a_prev_bar, v.W_tilde, v.z_bar, v.b_bar, rho);
    const bool matched = cfg.points == ConditionPoints::Matched;
    const DenseMatrix& ta = matched ? v.a_prev_bar : v.a_prev;
    const DenseMatrix& tz = matched ? v.z_bar : v.z;
    const DenseMatrix& tb = matched ? v.b_bar : v.b;

    MajorizationRecord rec;
    auto candidate = [&](double theta) { return prox_W_step(v.W_tilde, g, theta, reg); };
    auto majorant = [&](const DenseMatrix& W, double theta) {
        const DenseMatrix d = sub(W, v.W_tilde);
        rec.linear = dot(g, d);
        rec.dist_sq = frobenius_norm_sq(d);
        return base + rec.linear + 0.5 * theta * rec.dist_sq;
    };
    auto target = [&](const DenseMatrix& W) {
        rec.target = penalty_phi(ta, W, tz, tb, rho);
        return rec.target;
    };
    BacktrackResult r = backtrack_constant(candidate, majorant, target, cfg, start);
    rec.block = BlockKind::W;
    rec.constant = r.constant;
    rec.base = base;
    return BlockUpdate{std::move(r.point), r.constant, r.doublings, rec};
}

BlockUpdate update_b(const BViews& v, double rho, const BacktrackConfig& cfg, double start) {
    const DenseMatrix g = penalty_grad_b(v.a_prev_bar, v.W_bar, v.z_bar, v.b_hat, rho);
    const double base = penalty_phi(v.a_prev_bar, v.W_bar, v.z_bar, v.b_tilde, rho);
    const bool matched = cfg.points == ConditionPoints::Matched;
    // phi in b only needs z - W a once; each trial is then O(n N).
    const DenseMatrix& ta = matched ? v.a_prev_bar : v.a_prev;
    const DenseMatrix& tW = matched ? v.W_bar : v.W;
    const DenseMatrix& tz = matched ? v.z_bar : v.z;
    const DenseMatrix zero_bias(tz.rows(), 1);
    const DenseMatrix r0 = penalty_residual(ta, tW, tz, zero_bias);

    MajorizationRecord rec;
    auto candidate = [&](double xi) { return axpby(1.0, v.b_tilde, -1.0 / xi, g); };
    auto majorant = [&](const DenseMatrix& b, double xi) {
        const DenseMatrix d = sub(b, v.b_tilde);
        rec.linear = dot(g, d);
        rec.dist_sq = frobenius_norm_sq(d);
        return base + rec.linear + 0.5 * xi * rec.dist_sq;
    };
    auto target = [&](const DenseMatrix& b) {
        double s = 0.0;
        for (std::size_t row = 0; row < r0.rows(); ++row) {
            const double bv = b[row];
            for (std::size_t c = 0; c < r0.cols(); ++c) {
                const double e = r0(row, c) - bv;
                s += e * e;
            }
        }
        rec.target = 0.5 * rho * s;
        return rec.target;
    };
    BacktrackResult r = backtrack_constant(candidate, majorant, target, cfg, start);
    rec.block = BlockKind::b;
    rec.constant = r.constant;
    rec.base = base;
    return BlockUpdate{std::move(r.point), r.constant, r.doublings, rec};
}

InverseBounds hidden_z_bounds(const Activation& act, const DenseMatrix& a, double eps,
                              std::size_t* relaxed) {
    const double floor = act.range_infimum();
    const bool attained = act.kind == ActivationKind::ReLU;
    DenseMatrix a_eff = a;
    std::size_t count = 0;
    // Shift empty-interval entries so that a + eps = inf h + eps/2; the
    // interval is then {z : h(z) <= inf h + eps/2}.
    for (double& v : a_eff.values()) {
        const double hi = v + eps;
        if (attained ? hi < floor : hi <= floor) {
            v = floor - 0.5 * eps;
            ++count;
        }
    }
    if (relaxed != nullptr) *relaxed = count;
    return activation_inverse_bounds(act, a_eff, eps);
}

DenseMatrix update_z_hidden(const ZViews& v, const InverseBounds& bounds, double rho) {
    const DenseMatrix g = penalty_grad_z(v.a_prev_bar, v.W_bar, v.z_hat, v.b_bar, rho);
    const DenseMatrix step = axpby(1.0, v.z_tilde, -1.0 / rho, g);
    return clip_elementwise(step, bounds.lower, bounds.upper);
}

double output_subproblem_objective(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                                   const DenseMatrix& z) {
    const DenseMatrix g = penalty_grad_z(v.a_prev_bar, v.W_bar, v.z_hat, v.b_bar, rho);
    const DenseMatrix d = sub(z, v.z_tilde);
    return penalty_phi(v.a_prev_bar, v.W_bar, v.z_tilde, v.b_bar, rho) + dot(g, d) +
           0.5 * rho * frobenius_norm_sq(d) + loss_R(z, y_onehot);
}

DenseMatrix output_subproblem_gradient(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                                       const DenseMatrix& z) {
    const DenseMatrix g = penalty_grad_z(v.a_prev_bar, v.W_bar, v.z_hat, v.b_bar, rho);
    return add(axpby(1.0, g, rho, sub(z, v.z_tilde)), loss_R_grad(z, y_onehot));
}

DenseMatrix update_z_output(const ZViews& v, const DenseMatrix& y_onehot, double rho,
                            const FistaConfig& cfg, FistaReport* report) {
    validate_one_hot(v.z_tilde, y_onehot);
    const DenseMatrix g_phi = penalty_grad_z(v.a_prev_bar, v.W_bar, v.z_hat, v.b_bar, rho);
    const double constant = penalty_phi(v.a_prev_bar, v.W_bar, v.z_tilde, v.b_bar, rho);

    auto objective = [&](const DenseMatrix& z) {
        const DenseMatrix d = sub(z, v.z_tilde);
        return constant + dot(g_phi, d) + 0.5 * rho * frobenius_norm_sq(d) + loss_R(z, y_onehot);
    };
    auto gradient = [&](const DenseMatrix& z) {
        return add(axpby(1.0, g_phi, rho, sub(z, v.z_tilde)), loss_R_grad(z, y_onehot));
    };

    const double n = static_cast<double>(std::max<std::size_t>(1, v.z_tilde.cols()));
    const double lip_R = cfg.lipschitz == LossLipschitz::PerSample ? 0.5 / n : 0.5;
    double step = 1.0 / (rho + lip_R);

    FistaReport rep;
    DenseMatrix x = v.z_tilde;
    double fx = objective(x);
    DenseMatrix y = x;
    double t = 1.0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const DenseMatrix gy = gradient(y);
        rep.grad_norm = frobenius_norm(gy);
        if (!std::isfinite(rep.grad_norm)) throw NumericError("FISTA: non-finite gradient");
        if (rep.grad_norm <= cfg.grad_tol) {
            const double fy = objective(y);
            if (fy <= fx) {
                x = y;
                fx = fy;
            }
            rep.converged = true;
            break;
        }
        DenseMatrix u = axpby(1.0, y, -step, gy);
        double fu = objective(u);
        if (cfg.step == FistaStep::Backtracking) {
            const double fy = objective(y);
            for (int j = 0; j < 60; ++j) {
                const DenseMatrix d = sub(u, y);
                if (fu <= fy + dot(gy, d) + 0.5 / step * frobenius_norm_sq(d) + 1e-15) break;
                step *= 0.5;
                u = axpby(1.0, y, -step, gy);
                fu = objective(u);
            }
        }
        if (!std::isfinite(fu)) throw NumericError("FISTA: non-finite iterate");
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const DenseMatrix x_prev = x;
        if (fu <= fx) {
            x = u;
            fx = fu;
        }
        // y = x + (t/t_next)(u - x) + ((t-1)/t_next)(x - x_prev)
        y = add(axpby(1.0, x, t / t_next, sub(u, x)), scale(sub(x, x_prev), (t - 1.0) / t_next));
        t = t_next;
        rep.iterations = it;
        rep.objective_trace.push_back(fx);
    }
    if (!all_finite(x)) throw NumericError("FISTA: non-finite result");
    if (report != nullptr) *report = std::move(rep);
    return x;
}

BlockUpdate update_a(const AViews& v, const Activation& act, double eps, double rho,
                     const BacktrackConfig& cfg, double start) {
    const DenseMatrix g = penalty_grad_a(v.a_hat, v.W_next_bar, v.z_next_bar, v.b_next_bar, rho);
    const double base = penalty_phi(v.a_tilde, v.W_next_bar, v.z_next_bar, v.b_next_bar, rho);
    auto [lo, hi] = activation_box(act, v.z_box, eps);
    const Bound lower{BoundMatrix(lo)};
    const Bound upper{BoundMatrix(hi)};
    const bool matched = cfg.points == ConditionPoints::Matched;
    const DenseMatrix& tW = matched ? v.W_next_bar : v.W_next;
    const DenseMatrix& tz = matched ? v.z_next_bar : v.z_next;
    const DenseMatrix& tb = matched ? v.b_next_bar : v.b_next;

    MajorizationRecord rec;
    auto candidate = [&](double tau) {
        return clip_elementwise(axpby(1.0, v.a_tilde, -1.0 / tau, g), lower, upper);
    };
    auto majorant = [&](const DenseMatrix& a, double tau) {
        const DenseMatrix d = sub(a, v.a_tilde);
        rec.linear = dot(g, d);
        rec.dist_sq = frobenius_norm_sq(d);
        return base + rec.linear + 0.5 * tau * rec.dist_sq;
    };
    auto target = [&](const DenseMatrix& a) {
        rec.target = penalty_phi(a, tW, tz, tb, rho);
        return rec.target;
    };
    BacktrackResult r = backtrack_constant(candidate, majorant, target, cfg, start);
    rec.block = BlockKind::a;
    rec.constant = r.constant;
    rec.base = base;
    return BlockUpdate{std::move(r.point), r.constant, r.doublings, rec};
}

}  // namespace tiam
