#include "tiam/accel.hpp"

#include "tiam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tiam {

void ScheduleConfig::validate() const {
    // p1, p2 bases may equal 1 (the published setting): the (k-1)/(k+2) ramp
    // keeps the applied coefficient below 1.
    auto in_closed = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_closed(p1_base) || !in_closed(p2_base) || !(p3_base >= 0.0 && p3_base < 1.0))
        throw ConfigError("inertial bases must satisfy p1, p2 in [0,1] and p3 in [0,1)");
    if (!(eps_floor > 0.0) || eps0 < eps_floor)
        throw ConfigError("need eps0 >= eps_floor > 0");
    if (!(rho0 > 0.0)) throw ConfigError("rho0 must be > 0");
    if (!(rho_growth > 0.0)) throw ConfigError("rho_growth must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

DenseMatrix extrapolate(const DenseMatrix& current, const DenseMatrix& previous, double p) {
    if (!current.same_shape(previous))
        throw ShapeError("extrapolate: " + current.shape_str() + " vs " + previous.shape_str());
    if (p == 0.0) return current;
    return axpby(1.0 + p, current, -p, previous);
}

AccelTriple pre_update_views(const DenseMatrix& current, const DenseMatrix& previous,
                             const InertialCoefficients& c) {
    return AccelTriple{extrapolate(current, previous, c.p1), extrapolate(current, previous, c.p2),
                       current};
}

InertialCoefficients schedule_p(int k, const ScheduleConfig& cfg) {
    if (k < 1 || k > cfg.epochs)
        throw InputError("schedule_p: epoch " + std::to_string(k) + " outside [1, " +
                         std::to_string(cfg.epochs) + "]");
    const double ramp = static_cast<double>(k - 1) / static_cast<double>(k + 2);
    const double decay =
        std::pow(1.0 - static_cast<double>(k) / static_cast<double>(cfg.epochs), cfg.p3_exponent);
    return {ramp * cfg.p1_base, ramp * cfg.p2_base, decay * cfg.p3_base};
}

double schedule_eps(int k, const ScheduleConfig& cfg) {
    if (k < 0) throw InputError("schedule_eps: negative epoch");
    return std::max(std::ldexp(cfg.eps0, -k), cfg.eps_floor);
}

double schedule_rho(double rho, std::span<const double> history, const ScheduleConfig& cfg) {
    if (history.size() < 3) return rho;
    const std::size_t n = history.size();
    const double f_k = history[n - 1];
    const double f_k1 = history[n - 2];
    const double f_k2 = history[n - 3];
    if (!(f_k >= f_k1 && f_k1 >= f_k2)) return rho;
    const double grown = cfg.rho_growth * rho;
    return cfg.rho_rule == RhoRule::Max ? std::max(grown, cfg.rho_clip)
                                        : std::min(grown, cfg.rho_clip);
}

std::string to_string(BlockKind kind) {
    switch (kind) {
        case BlockKind::W: return "W";
        case BlockKind::b: return "b";
        case BlockKind::z: return "z";
        case BlockKind::a: return "a";
    }
    return "?";
}

SafeguardResult safeguarded_update(const BlockId& block, const DenseMatrix& current,
                                   const std::function<DenseMatrix()>& plain_update,
                                   const std::function<DenseMatrix()>& accel_update,
                                   double f_before,
                                   const std::function<double(const DenseMatrix&)>& f_evaluator,
                                   double p3, bool accelerated) {
    auto evaluate = [&](const DenseMatrix& v) {
        const double f = f_evaluator(v);
        if (std::isnan(f))
            throw NumericError("objective is NaN after updating " + to_string(block.kind) +
                               std::to_string(block.layer + 1));
        return f;
    };

    SafeguardResult out;
    bool have = false;
    if (accelerated) {
        try {
            out.value = accel_update();
            out.f_after = evaluate(out.value);
            have = !(out.f_after > f_before) && std::isfinite(out.f_after);
        } catch (const BacktrackError&) {
            have = false;
        }
        out.reverted = !have;
    }
    if (!have) {
        out.value = plain_update();
        out.f_after = evaluate(out.value);
    }
    out.bar = extrapolate(out.value, current, p3);
    return out;
}

}  // namespace tiam
