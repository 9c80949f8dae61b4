#pragma once

// Full-batch backpropagation baselines on the same architecture and loss.

#include "tiam/dataset.hpp"
#include "tiam/network.hpp"
#include "tiam/trainer.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace tiam {

enum class BaselineOptimizer { GD, Adam };

std::string_view to_string(BaselineOptimizer o);
BaselineOptimizer parse_optimizer(std::string_view name);

struct BaselineConfig {
    BaselineOptimizer optimizer = BaselineOptimizer::GD;
    double alpha = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 200;
    std::uint64_t seed = 0;
    WeightInit init;

    void validate() const;
};

struct Gradients {
    std::vector<DenseMatrix> gW;
    std::vector<DenseMatrix> gb;
};

/// Mean cross-entropy of the feed-forward network.
double network_loss(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                    const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                    const DenseMatrix& y_onehot);

/// Exact gradients of network_loss; the ReLU derivative at 0 is taken as 0.
Gradients backprop_grads(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                         const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                         const DenseMatrix& y_onehot);

struct OptimizerState {
    std::vector<DenseMatrix> mW, vW, mb, vb;
    int t = 0;
};

/// Zero moments shaped like the parameters.
OptimizerState make_optimizer_state(const std::vector<DenseMatrix>& W,
                                    const std::vector<DenseMatrix>& b);

/// GD: w -= alpha g. Adam: bias-corrected moments, w -= alpha m_hat / (sqrt(v_hat) + eps).
void baseline_step(OptimizerState& state, std::vector<DenseMatrix>& W, std::vector<DenseMatrix>& b,
                   const Gradients& g, const BaselineConfig& cfg);

/// Epoch metrics carry loss_R in both F and loss; rho, eps and p are zero.
RunHistory train_baseline(const BaselineConfig& cfg, const NetworkSpec& spec,
                          const Dataset& train_set, const Dataset& test_set);

}  // namespace tiam
