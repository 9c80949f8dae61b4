#include "tiam/baselines.hpp"

#include "tiam/errors.hpp"

#include <chrono>
#include <cmath>

namespace tiam {
namespace {

struct ForwardCache {
    std::vector<DenseMatrix> z;  // L pre-activations
    std::vector<DenseMatrix> a;  // L-1 activations
};

ForwardCache forward(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                     const std::vector<DenseMatrix>& b, const DenseMatrix& x) {
    const std::size_t L = spec.num_layers();
    if (W.size() != L || b.size() != L)
        throw ShapeError("backprop: expected " + std::to_string(L) + " layers");
    ForwardCache c;
    for (std::size_t l = 0; l < L; ++l) {
        const DenseMatrix& in = l == 0 ? x : c.a.back();
        c.z.push_back(add_column(matmul(W[l], in), b[l]));
        if (l + 1 < L) c.a.push_back(activation_apply(spec.activation, c.z.back()));
    }
    return c;
}

}  // namespace

std::string_view to_string(BaselineOptimizer o) {
    return o == BaselineOptimizer::GD ? "gd" : "adam";
}

BaselineOptimizer parse_optimizer(std::string_view name) {
    if (name == "gd") return BaselineOptimizer::GD;
    if (name == "adam") return BaselineOptimizer::Adam;
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void BaselineConfig::validate() const {
    if (alpha < 0.0) throw ConfigError("learning rate must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ConfigError("Adam betas must lie in (0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("Adam eps must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

double network_loss(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                    const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                    const DenseMatrix& y_onehot) {
    return loss_R(forward(spec, W, b, x).z.back(), y_onehot);
}

Gradients backprop_grads(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                         const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                         const DenseMatrix& y_onehot) {
    const ForwardCache c = forward(spec, W, b, x);
    const std::size_t L = spec.num_layers();
    Gradients g;
    g.gW.resize(L);
    g.gb.resize(L);
    DenseMatrix delta = loss_R_grad(c.z.back(), y_onehot);
    for (std::size_t l = L; l-- > 0;) {
        const DenseMatrix& in = l == 0 ? x : c.a[l - 1];
        g.gW[l] = matmul_nt(delta, in);
        g.gb[l] = row_sums(delta);
        if (l == 0) break;
        DenseMatrix back = matmul_tn(W[l], delta);
        const DenseMatrix& z = c.z[l - 1];
        for (std::size_t i = 0; i < back.size(); ++i)
            back[i] *= spec.activation.derivative(z[i]);
        delta = std::move(back);
    }
    return g;
}

OptimizerState make_optimizer_state(const std::vector<DenseMatrix>& W,
                                    const std::vector<DenseMatrix>& b) {
    OptimizerState s;
    for (const auto& w : W) {
        s.mW.emplace_back(w.rows(), w.cols());
        s.vW.emplace_back(w.rows(), w.cols());
    }
    for (const auto& v : b) {
        s.mb.emplace_back(v.rows(), v.cols());
        s.vb.emplace_back(v.rows(), v.cols());
    }
    return s;
}

void baseline_step(OptimizerState& state, std::vector<DenseMatrix>& W, std::vector<DenseMatrix>& b,
                   const Gradients& g, const BaselineConfig& cfg) {
    if (cfg.optimizer == BaselineOptimizer::GD) {
        for (std::size_t l = 0; l < W.size(); ++l) {
            W[l] = axpby(1.0, W[l], -cfg.alpha, g.gW[l]);
            b[l] = axpby(1.0, b[l], -cfg.alpha, g.gb[l]);
        }
        return;
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, state.t);
    const double c2 = 1.0 - std::pow(cfg.beta2, state.t);
    auto adam = [&](DenseMatrix& p, DenseMatrix& m, DenseMatrix& v, const DenseMatrix& grad) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= cfg.alpha * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    };
    for (std::size_t l = 0; l < W.size(); ++l) {
        adam(W[l], state.mW[l], state.vW[l], g.gW[l]);
        adam(b[l], state.mb[l], state.vb[l], g.gb[l]);
    }
}

RunHistory train_baseline(const BaselineConfig& cfg, const NetworkSpec& spec,
                          const Dataset& train_set, const Dataset& test_set) {
    cfg.validate();
    spec.validate();
    train_set.validate();
    const DenseMatrix y = one_hot(train_set.labels, spec.num_classes());

    RunHistory h;
    h.config.spec = spec;
    h.config.epochs = cfg.epochs;
    h.config.seed = cfg.seed;
    h.config.init = cfg.init;
    NetworkState& s = h.final_state;
    initialize_weights(spec, cfg.init, cfg.seed, s.W, s.b);
    OptimizerState opt = make_optimizer_state(s.W, s.b);
    h.initial_F = network_loss(spec, s.W, s.b, train_set.x, y);

    for (int k = 1; k <= cfg.epochs; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = k;
        const std::vector<DenseMatrix> W_old = s.W;
        const std::vector<DenseMatrix> b_old = s.b;
        baseline_step(opt, s.W, s.b, backprop_grads(spec, s.W, s.b, train_set.x, y), cfg);
        m.loss = network_loss(spec, s.W, s.b, train_set.x, y);
        if (!std::isfinite(m.loss))
            throw TrainingAborted("epoch " + std::to_string(k) + ": loss is not finite",
                                  std::move(h));
        m.F = m.loss;
        m.train_accuracy = evaluate_accuracy(spec, s.W, s.b, train_set.x, train_set.labels);
        m.test_accuracy = test_set.num_samples() == 0
                              ? 0.0
                              : evaluate_accuracy(spec, s.W, s.b, test_set.x, test_set.labels);
        double dw = 0.0, db = 0.0;
        for (std::size_t l = 0; l < s.W.size(); ++l) {
            dw += frobenius_norm_sq(sub(s.W[l], W_old[l]));
            db += frobenius_norm_sq(sub(s.b[l], b_old[l]));
        }
        m.increments.W = std::sqrt(dw);
        m.increments.b = std::sqrt(db);
        m.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        h.epochs.push_back(m);
    }
    return h;
}

}  // namespace tiam
