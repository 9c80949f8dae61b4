#include "tiam/network.hpp"

#include "tiam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tiam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Analytic inverse of h on the open range (inf h, +inf).
double inverse(const Activation& act, double t) {
    if (t >= 0.0) return t;
    switch (act.kind) {
        case ActivationKind::ReLU: return 0.0;  // not reached for t < 0
        case ActivationKind::LeakyReLU: return t / act.alpha;
        case ActivationKind::EReLU: return std::log1p(t / act.alpha);
        case ActivationKind::CEReLU: return act.alpha * std::log1p(t / act.alpha);
    }
    return t;
}

const DenseMatrix& input_of(const NetworkState& s, const DenseMatrix& x, std::size_t layer) {
    return layer == 0 ? x : s.a[layer - 1];
}

}  // namespace

void Activation::validate() const {
    if (kind != ActivationKind::ReLU && !(alpha > 0.0))
        throw ConfigError("activation " + std::string(to_string(kind)) + " needs alpha > 0");
}

double Activation::apply(double z) const {
    if (z >= 0.0) return z;
    switch (kind) {
        case ActivationKind::ReLU: return 0.0;
        case ActivationKind::LeakyReLU: return alpha * z;
        case ActivationKind::EReLU: return alpha * std::expm1(z);
        case ActivationKind::CEReLU: return alpha * std::expm1(z / alpha);
    }
    return z;
}

double Activation::derivative(double z) const {
    if (z > 0.0) return 1.0;
    switch (kind) {
        case ActivationKind::ReLU: return 0.0;
        case ActivationKind::LeakyReLU: return alpha;
        case ActivationKind::EReLU: return alpha * std::exp(z);
        case ActivationKind::CEReLU: return std::exp(z / alpha);
    }
    return 1.0;
}

double Activation::range_infimum() const {
    switch (kind) {
        case ActivationKind::ReLU: return 0.0;
        case ActivationKind::LeakyReLU: return -kInf;
        case ActivationKind::EReLU:
        case ActivationKind::CEReLU: return -alpha;
    }
    return -kInf;
}

std::string_view to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::LeakyReLU: return "leaky_relu";
        case ActivationKind::EReLU: return "erelu";
        case ActivationKind::CEReLU: return "cerelu";
    }
    return "?";
}

ActivationKind parse_activation_kind(std::string_view name) {
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "leaky_relu" || name == "leakyrelu") return ActivationKind::LeakyReLU;
    if (name == "erelu" || name == "elu") return ActivationKind::EReLU;
    if (name == "cerelu" || name == "celu") return ActivationKind::CEReLU;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
    if (layer_dims.size() < 3)
        throw ConfigError("network needs at least one hidden layer (got " +
                          std::to_string(layer_dims.size()) + " widths)");
    for (std::size_t n : layer_dims)
        if (n == 0) throw ConfigError("layer widths must be >= 1");
    activation.validate();
}

DenseMatrix activation_apply(const Activation& act, const DenseMatrix& z) {
    DenseMatrix out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = act.apply(z[i]);
    return out;
}

InverseBounds activation_inverse_bounds(const Activation& act, const DenseMatrix& a, double eps) {
    if (!(eps > 0.0)) throw InputError("activation_inverse_bounds: eps must be > 0");
    InverseBounds out{BoundMatrix(a.rows(), a.cols()), BoundMatrix(a.rows(), a.cols())};
    const double floor = act.range_infimum();
    // ReLU attains its infimum; the exponential variants only approach it.
    const bool attained = act.kind == ActivationKind::ReLU;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double lo_t = a[i] - eps;
        const double hi_t = a[i] + eps;
        const bool empty = attained ? hi_t < floor : hi_t <= floor;
        if (empty)
            throw FeasibilityError("activation_inverse_bounds: empty interval at entry " +
                                       std::to_string(i) + " (a=" + std::to_string(a[i]) +
                                       ", eps=" + std::to_string(eps) + ")",
                                   i);
        out.upper.set(i, inverse(act, hi_t));
        if (lo_t > floor) out.lower.set(i, inverse(act, lo_t));
    }
    return out;
}

DenseMatrix penalty_residual(const DenseMatrix& a_prev, const DenseMatrix& W,
                             const DenseMatrix& z, const DenseMatrix& b) {
    DenseMatrix wa = matmul(W, a_prev);
    if (!wa.same_shape(z))
        throw ShapeError("penalty: W*a is " + wa.shape_str() + " but z is " + z.shape_str());
    DenseMatrix r = sub(z, wa);
    if (b.rows() != z.rows() || b.cols() != 1)
        throw ShapeError("penalty: bias is " + b.shape_str() + ", expected " +
                         std::to_string(z.rows()) + "x1");
    for (std::size_t row = 0; row < r.rows(); ++row) {
        const double bv = b[row];
        for (std::size_t c = 0; c < r.cols(); ++c) r(row, c) -= bv;
    }
    return r;
}

double penalty_phi(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                   const DenseMatrix& b, double rho) {
    return 0.5 * rho * frobenius_norm_sq(penalty_residual(a_prev, W, z, b));
}

PenaltyGrads penalty_grads(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho) {
    const DenseMatrix r = penalty_residual(a_prev, W, z, b);
    return PenaltyGrads{
        scale(matmul_nt(r, a_prev), -rho),
        scale(row_sums(r), -rho),
        scale(r, rho),
        scale(matmul_tn(W, r), -rho),
    };
}

DenseMatrix penalty_grad_W(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho) {
    return scale(matmul_nt(penalty_residual(a_prev, W, z, b), a_prev), -rho);
}

DenseMatrix penalty_grad_b(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho) {
    return scale(row_sums(penalty_residual(a_prev, W, z, b)), -rho);
}

DenseMatrix penalty_grad_z(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho) {
    return scale(penalty_residual(a_prev, W, z, b), rho);
}

DenseMatrix penalty_grad_a(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho) {
    return scale(matmul_tn(W, penalty_residual(a_prev, W, z, b)), -rho);
}

void validate_one_hot(const DenseMatrix& zL, const DenseMatrix& y_onehot) {
    if (!zL.same_shape(y_onehot))
        throw ShapeError("loss: logits " + zL.shape_str() + " vs targets " +
                         y_onehot.shape_str());
    for (std::size_t c = 0; c < y_onehot.cols(); ++c) {
        std::size_t ones = 0;
        for (std::size_t r = 0; r < y_onehot.rows(); ++r) {
            const double v = y_onehot(r, c);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                ones = 2;
                break;
            }
        }
        if (ones != 1)
            throw InputError("loss: target column " + std::to_string(c) + " is not one-hot");
    }
}

double loss_R(const DenseMatrix& zL, const DenseMatrix& y_onehot) {
    validate_one_hot(zL, y_onehot);
    const std::size_t n = zL.cols();
    if (n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        double mx = -kInf;
        for (std::size_t r = 0; r < zL.rows(); ++r) mx = std::max(mx, zL(r, c));
        double s = 0.0;
        for (std::size_t r = 0; r < zL.rows(); ++r) s += std::exp(zL(r, c) - mx);
        const double lse = mx + std::log(s);
        for (std::size_t r = 0; r < zL.rows(); ++r)
            if (y_onehot(r, c) == 1.0) total += lse - zL(r, c);
    }
    return total / static_cast<double>(n);
}

DenseMatrix loss_R_grad(const DenseMatrix& zL, const DenseMatrix& y_onehot) {
    validate_one_hot(zL, y_onehot);
    const double n = static_cast<double>(zL.cols());
    DenseMatrix g = sub(softmax_columns(zL), y_onehot);
    return scale(g, 1.0 / n);
}

double regularizer_value(const RegularizerSpec& reg, const DenseMatrix& W) {
    switch (reg.kind) {
        case RegularizerKind::None: return 0.0;
        case RegularizerKind::L2: return 0.5 * reg.strength * frobenius_norm_sq(W);
        case RegularizerKind::L1: return reg.strength * sum_abs(W);
    }
    return 0.0;
}

double objective_F(const NetworkState& state, const DenseMatrix& x, const DenseMatrix& y_onehot,
                   double rho, const RegularizerSpec& reg) {
    const std::size_t L = state.num_layers();
    if (L == 0 || state.a.size() + 1 != L)
        throw ShapeError("objective_F: inconsistent layer counts");
    double value = loss_R(state.z.back(), y_onehot);
    for (std::size_t l = 0; l < L; ++l) {
        value += regularizer_value(reg, state.W[l]);
        value += penalty_phi(input_of(state, x, l), state.W[l], state.z[l], state.b[l], rho);
    }
    return value;
}

double feasibility_violation(const NetworkState& state, const Activation& act, double eps) {
    double worst = 0.0;
    for (std::size_t l = 0; l < state.a.size(); ++l) {
        const DenseMatrix& z = state.z[l];
        const DenseMatrix& a = state.a[l];
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double hz = act.apply(z[i]);
            worst = std::max({worst, (hz - eps) - a[i], a[i] - (hz + eps)});
        }
    }
    return worst;
}

std::vector<std::size_t> argmax_columns(const DenseMatrix& m) {
    std::vector<std::size_t> out(m.cols(), 0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double best = m(0, c);
        for (std::size_t r = 1; r < m.rows(); ++r) {
            if (m(r, c) > best) {
                best = m(r, c);
                out[c] = r;
            }
        }
    }
    return out;
}

Inference forward_inference(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                            const std::vector<DenseMatrix>& b, const DenseMatrix& x) {
    const std::size_t L = spec.num_layers();
    if (W.size() != L || b.size() != L)
        throw ShapeError("forward_inference: expected " + std::to_string(L) + " layers");
    DenseMatrix act = x;
    for (std::size_t l = 0; l + 1 < L; ++l)
        act = activation_apply(spec.activation, add_column(matmul(W[l], act), b[l]));
    DenseMatrix logits = add_column(matmul(W[L - 1], act), b[L - 1]);
    auto preds = argmax_columns(logits);
    return {std::move(logits), std::move(preds)};
}

}  // namespace tiam
