#pragma once

#include "tiam/matrix.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tiam {

enum class ActivationKind { ReLU, LeakyReLU, EReLU, CEReLU };

/// A monotone nondecreasing ReLU-family activation.
///   LeakyReLU: z for z >= 0, alpha*z otherwise.
///   EReLU:     z for z >= 0, alpha*(exp(z) - 1) otherwise.
///   CEReLU:    z for z >= 0, alpha*(exp(z/alpha) - 1) otherwise.
struct Activation {
    ActivationKind kind = ActivationKind::ReLU;
    double alpha = 0.0;  // ignored for ReLU

    static Activation relu() { return {ActivationKind::ReLU, 0.0}; }
    static Activation leaky_relu(double alpha = 0.01) { return {ActivationKind::LeakyReLU, alpha}; }
    static Activation elu(double alpha = 0.1) { return {ActivationKind::EReLU, alpha}; }
    static Activation celu(double alpha = 0.1) { return {ActivationKind::CEReLU, alpha}; }

    /// Throws ConfigError when alpha <= 0 for a parameterized kind.
    void validate() const;
    double apply(double z) const;
    /// Derivative almost everywhere; the ReLU kink at 0 takes derivative 0.
    double derivative(double z) const;
    /// Infimum of the range (-inf for LeakyReLU).
    double range_infimum() const;
};

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation_kind(std::string_view name);

/// Layer widths [d, n_1, ..., n_L]; the activation applies to layers 1..L-1.
struct NetworkSpec {
    std::vector<std::size_t> layer_dims;
    Activation activation;

    std::size_t num_layers() const { return layer_dims.size() - 1; }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t num_classes() const { return layer_dims.back(); }
    void validate() const;
};

enum class RegularizerKind { None, L2, L1 };

struct RegularizerSpec {
    RegularizerKind kind = RegularizerKind::None;
    double strength = 0.0;

    double effective_strength() const { return kind == RegularizerKind::None ? 0.0 : strength; }
};

/// All optimization variables plus the bookkeeping the inertial steps need.
/// Layer l (1-based in the math) is stored at index l-1; a has L-1 entries.
struct NetworkState {
    std::vector<DenseMatrix> W, b, z, a;
    // Iterate k-1 of each block.
    std::vector<DenseMatrix> prev_W, prev_b, prev_z, prev_a;
    // Third-extrapolation values exported to the other blocks' subproblems.
    std::vector<DenseMatrix> bar_W, bar_b, bar_z, bar_a;

    std::size_t num_layers() const { return W.size(); }
    std::size_t batch_size() const { return z.empty() ? 0 : z.front().cols(); }
};

DenseMatrix activation_apply(const Activation& act, const DenseMatrix& z);

struct InverseBounds {
    BoundMatrix lower;
    BoundMatrix upper;
};

/// Tightest interval [lower, upper] per entry such that z lies in it exactly
/// when a - eps <= h(z) <= a + eps. Throws FeasibilityError on an empty interval.
InverseBounds activation_inverse_bounds(const Activation& act, const DenseMatrix& a, double eps);

/// Residual z - W a_prev - b 1^T.
DenseMatrix penalty_residual(const DenseMatrix& a_prev, const DenseMatrix& W,
                             const DenseMatrix& z, const DenseMatrix& b);

/// (rho/2) ||z - W a_prev - b 1^T||_F^2
double penalty_phi(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                   const DenseMatrix& b, double rho);

struct PenaltyGrads {
    DenseMatrix gW, gb, gz, ga_prev;
};

PenaltyGrads penalty_grads(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho);

// Single-block gradients, used where only one of the four is needed.
DenseMatrix penalty_grad_W(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho);
DenseMatrix penalty_grad_b(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho);
DenseMatrix penalty_grad_z(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho);
DenseMatrix penalty_grad_a(const DenseMatrix& a_prev, const DenseMatrix& W, const DenseMatrix& z,
                           const DenseMatrix& b, double rho);

/// Throws InputError unless every column of y is one-hot and shapes match zL.
void validate_one_hot(const DenseMatrix& zL, const DenseMatrix& y_onehot);

/// Mean softmax cross-entropy over batch columns.
double loss_R(const DenseMatrix& zL, const DenseMatrix& y_onehot);
/// (softmax(zL) - y) / N
DenseMatrix loss_R_grad(const DenseMatrix& zL, const DenseMatrix& y_onehot);

double regularizer_value(const RegularizerSpec& reg, const DenseMatrix& W);

/// R(z_L; y) + sum Omega(W_l) + sum phi_l with a_0 = x. The activation
/// constraint is not part of the value.
double objective_F(const NetworkState& state, const DenseMatrix& x, const DenseMatrix& y_onehot,
                   double rho, const RegularizerSpec& reg);

/// Largest amount by which a_l leaves [h(z_l) - eps, h(z_l) + eps], over all hidden layers.
double feasibility_violation(const NetworkState& state, const Activation& act, double eps);

struct Inference {
    DenseMatrix logits;
    std::vector<std::size_t> predictions;
};

/// Feed-forward pass with the learned weights and biases only.
Inference forward_inference(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                            const std::vector<DenseMatrix>& b, const DenseMatrix& x);

/// Column-wise argmax, lowest index on ties.
std::vector<std::size_t> argmax_columns(const DenseMatrix& m);

}  // namespace tiam
