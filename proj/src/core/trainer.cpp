#include "tiam/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace tiam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool a_feasible(const DenseMatrix& a, const DenseMatrix& z, const Activation& act, double eps) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double hz = act.apply(z[i]);
        if (a[i] < hz - eps || a[i] > hz + eps) return false;
    }
    return true;
}

double pooled_diff_norm(const std::vector<DenseMatrix>& cur, const std::vector<DenseMatrix>& prev) {
    double s = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) s += frobenius_norm_sq(sub(cur[i], prev[i]));
    return std::sqrt(s);
}

/// One training run: owns the state and the per-layer warm-start constants.
class Sweeper {
public:
    Sweeper(const TrainConfig& cfg, const DenseMatrix& x, const DenseMatrix& y)
        : cfg_(cfg), x_(x), y_(y) {
        const std::size_t L = cfg.spec.num_layers();
        theta_.assign(L, cfg.backtrack.init);
        xi_.assign(L, cfg.backtrack.init);
        tau_.assign(L, cfg.backtrack.init);
    }

    struct EpochOutcome {
        int reverts = 0;
        std::size_t relaxed = 0;
        int fista_iterations = 0;
    };

    /// One W -> b -> z -> a sweep over all layers. With `use_accel` false
    /// every sub-update uses the plain current iterates.
    EpochOutcome sweep(NetworkState& s, int epoch, const InertialCoefficients& coef, double eps,
                       double rho, bool use_accel, bool guard,
                       std::vector<MajorizationRecord>* audit) {
        const std::size_t L = s.num_layers();
        const Activation& act = cfg_.spec.activation;
        const InertialCoefficients c = use_accel ? coef : InertialCoefficients{};
        EpochOutcome out;

        auto run = [&](BlockKind kind, std::size_t l, const DenseMatrix& current,
                       const std::function<DenseMatrix()>& plain,
                       const std::function<DenseMatrix()>& accel, bool accelerated,
                       const std::function<double(const DenseMatrix&)>& f) {
            SafeguardResult r;
            if (guard) {
                r = safeguarded_update({kind, l}, current, plain, accel, f(current), f, c.p3,
                                       accelerated);
            } else {
                // Per-epoch mode: no objective check, but a failed
                // backtrack still falls back to the plain update.
                r = safeguarded_update({kind, l}, current, plain, accel, kInf,
                                       [](const DenseMatrix&) { return 0.0; }, c.p3, accelerated);
            }
            if (r.reverted) ++out.reverts;
            return r;
        };

        for (std::size_t l = 0; l < L; ++l) {
            const bool last = l + 1 == L;
            const DenseMatrix& a_in = l == 0 ? x_ : s.a[l - 1];
            const DenseMatrix& a_in_bar = l == 0 ? x_ : s.bar_a[l - 1];
            const bool a_in_moved = !(a_in_bar == a_in);

            // ---- W_l
            {
                const AccelTriple t = pre_update_views(s.W[l], s.prev_W[l], c);
                const bool accelerated = a_in_moved || !(t.tilde == s.W[l]) ||
                                         !(t.hat == s.W[l]) || !(s.bar_z[l] == s.z[l]) ||
                                         !(s.bar_b[l] == s.b[l]);
                BlockUpdate accepted;
                const double start = start_of(theta_[l]);
                auto accel = [&] {
                    accepted = update_W({a_in_bar, t.tilde, t.hat, s.bar_z[l], s.bar_b[l], a_in,
                                         s.z[l], s.b[l]},
                                        rho, cfg_.reg, cfg_.backtrack, start);
                    return accepted.value;
                };
                auto plain = [&] {
                    accepted = update_W({a_in, s.W[l], s.W[l], s.z[l], s.b[l], a_in, s.z[l],
                                         s.b[l]},
                                        rho, cfg_.reg, cfg_.backtrack, start);
                    return accepted.value;
                };
                auto f = [&](const DenseMatrix& W) {
                    return penalty_phi(a_in, W, s.z[l], s.b[l], rho) +
                           regularizer_value(cfg_.reg, W);
                };
                SafeguardResult r = run(BlockKind::W, l, s.W[l], plain, accel, accelerated, f);
                theta_[l] = accepted.constant;
                record(audit, accepted.record, epoch, l);
                commit(s.W[l], s.prev_W[l], s.bar_W[l], r);
            }

            // ---- b_l
            {
                const AccelTriple t = pre_update_views(s.b[l], s.prev_b[l], c);
                const bool accelerated = a_in_moved || !(t.tilde == s.b[l]) ||
                                         !(t.hat == s.b[l]) || !(s.bar_W[l] == s.W[l]) ||
                                         !(s.bar_z[l] == s.z[l]);
                BlockUpdate accepted;
                const double start = start_of(xi_[l]);
                auto accel = [&] {
                    accepted = update_b({a_in_bar, s.bar_W[l], s.bar_z[l], t.tilde, t.hat, a_in,
                                         s.W[l], s.z[l]},
                                        rho, cfg_.backtrack, start);
                    return accepted.value;
                };
                auto plain = [&] {
                    accepted = update_b({a_in, s.W[l], s.z[l], s.b[l], s.b[l], a_in, s.W[l],
                                         s.z[l]},
                                        rho, cfg_.backtrack, start);
                    return accepted.value;
                };
                auto f = [&](const DenseMatrix& b) {
                    return penalty_phi(a_in, s.W[l], s.z[l], b, rho);
                };
                SafeguardResult r = run(BlockKind::b, l, s.b[l], plain, accel, accelerated, f);
                xi_[l] = accepted.constant;
                record(audit, accepted.record, epoch, l);
                commit(s.b[l], s.prev_b[l], s.bar_b[l], r);
            }

            // ---- z_l
            {
                const AccelTriple t = pre_update_views(s.z[l], s.prev_z[l], c);
                const bool accelerated = a_in_moved || !(t.tilde == s.z[l]) ||
                                         !(t.hat == s.z[l]) || !(s.bar_W[l] == s.W[l]) ||
                                         !(s.bar_b[l] == s.b[l]);
                const ZViews accel_views{a_in_bar, s.bar_W[l], s.bar_b[l], t.tilde, t.hat};
                const ZViews plain_views{a_in, s.W[l], s.b[l], s.z[l], s.z[l]};
                SafeguardResult r;
                if (last) {
                    FistaReport rep;
                    auto accel = [&] {
                        return update_z_output(accel_views, y_, rho, cfg_.fista, &rep);
                    };
                    auto plain = [&] {
                        return update_z_output(plain_views, y_, rho, cfg_.fista, &rep);
                    };
                    auto f = [&](const DenseMatrix& z) {
                        return penalty_phi(a_in, s.W[l], z, s.b[l], rho) + loss_R(z, y_);
                    };
                    r = run(BlockKind::z, l, s.z[l], plain, accel, accelerated, f);
                    out.fista_iterations += rep.iterations;
                } else {
                    std::size_t relaxed = 0;
                    const InverseBounds bounds = hidden_z_bounds(act, s.a[l], eps, &relaxed);
                    out.relaxed += relaxed;
                    auto accel = [&] { return update_z_hidden(accel_views, bounds, rho); };
                    auto plain = [&] { return update_z_hidden(plain_views, bounds, rho); };
                    auto f = [&](const DenseMatrix& z) {
                        return penalty_phi(a_in, s.W[l], z, s.b[l], rho);
                    };
                    r = run(BlockKind::z, l, s.z[l], plain, accel, accelerated, f);
                }
                commit(s.z[l], s.prev_z[l], s.bar_z[l], r);
            }

            // ---- a_l, hidden layers only
            if (!last) {
                const std::size_t n = l + 1;
                const AccelTriple t = pre_update_views(s.a[l], s.prev_a[l], c);
                const bool accelerated = !(t.tilde == s.a[l]) || !(t.hat == s.a[l]) ||
                                         !(s.bar_W[n] == s.W[n]) || !(s.bar_z[n] == s.z[n]) ||
                                         !(s.bar_b[n] == s.b[n]) || !(s.bar_z[l] == s.z[l]);
                BlockUpdate accepted;
                const double start = start_of(tau_[l]);
                auto accel = [&] {
                    accepted = update_a({t.tilde, t.hat, s.bar_W[n], s.bar_z[n], s.bar_b[n],
                                         s.bar_z[l], s.W[n], s.z[n], s.b[n]},
                                        act, eps, rho, cfg_.backtrack, start);
                    return accepted.value;
                };
                auto plain = [&] {
                    accepted = update_a({s.a[l], s.a[l], s.W[n], s.z[n], s.b[n], s.z[l], s.W[n],
                                         s.z[n], s.b[n]},
                                        act, eps, rho, cfg_.backtrack, start);
                    return accepted.value;
                };
                // The objective is extended by the constraint indicator: a
                // result outside h(z_l) +- eps counts as +inf.
                auto f = [&](const DenseMatrix& a) {
                    if (!a_feasible(a, s.z[l], act, eps)) return kInf;
                    return penalty_phi(a, s.W[n], s.z[n], s.b[n], rho);
                };
                SafeguardResult r = run(BlockKind::a, l, s.a[l], plain, accel, accelerated, f);
                tau_[l] = accepted.constant;
                record(audit, accepted.record, epoch, l);
                commit(s.a[l], s.prev_a[l], s.bar_a[l], r);
            }
        }
        return out;
    }

    struct WarmStarts {
        std::vector<double> theta, xi, tau;
    };
    WarmStarts warm_starts() const { return {theta_, xi_, tau_}; }
    void restore(const WarmStarts& w) {
        theta_ = w.theta;
        xi_ = w.xi;
        tau_ = w.tau;
    }

private:
    double start_of(double last) const {
        return cfg_.backtrack.warm_start ? 0.5 * last : cfg_.backtrack.init;
    }

    static void commit(DenseMatrix& value, DenseMatrix& prev, DenseMatrix& bar,
                       SafeguardResult& r) {
        prev = std::move(value);
        value = std::move(r.value);
        bar = std::move(r.bar);
    }

    static void record(std::vector<MajorizationRecord>* audit, MajorizationRecord rec, int epoch,
                       std::size_t layer) {
        if (audit == nullptr) return;
        rec.epoch = epoch;
        rec.layer = layer;
        audit->push_back(rec);
    }

    const TrainConfig& cfg_;
    const DenseMatrix& x_;
    const DenseMatrix& y_;
    std::vector<double> theta_, xi_, tau_;
};

}  // namespace

std::string_view to_string(Ablation a) {
    switch (a) {
        case Ablation::Baseline: return "baseline";
        case Ablation::T12: return "t12";
        case Ablation::T3: return "t3";
        case Ablation::Full: return "full";
    }
    return "?";
}

Ablation parse_ablation(std::string_view name) {
    if (name == "baseline") return Ablation::Baseline;
    if (name == "t12") return Ablation::T12;
    if (name == "t3") return Ablation::T3;
    if (name == "full") return Ablation::Full;
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    spec.validate();
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    effective_schedule().validate();
    backtrack.validate();
    fista.validate();
    if (reg.strength < 0.0) throw ConfigError("regularizer strength must be >= 0");
    if (!(init.gain > 0.0)) throw ConfigError("init gain must be > 0");
}

ScheduleConfig TrainConfig::effective_schedule() const {
    ScheduleConfig s = hyper;
    s.epochs = epochs;
    switch (ablation) {
        case Ablation::Baseline: s.p1_base = s.p2_base = s.p3_base = 0.0; break;
        case Ablation::T12: s.p3_base = 0.0; break;
        case Ablation::T3: s.p1_base = s.p2_base = 0.0; break;
        case Ablation::Full: break;
    }
    return s;
}

bool EpochMetrics::same_values(const EpochMetrics& o) const {
    return epoch == o.epoch && F == o.F && loss == o.loss && train_accuracy == o.train_accuracy &&
           test_accuracy == o.test_accuracy && rho == o.rho && eps == o.eps && p1 == o.p1 &&
           p2 == o.p2 && p3 == o.p3 && reverts == o.reverts &&
           feasibility_violation == o.feasibility_violation && relaxed_bounds == o.relaxed_bounds &&
           increments == o.increments && fista_iterations == o.fista_iterations;
}

bool RunHistory::same_values(const RunHistory& o) const {
    if (epochs.size() != o.epochs.size() || initial_F != o.initial_F) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i)
        if (!epochs[i].same_values(o.epochs[i])) return false;
    const NetworkState& s = final_state;
    const NetworkState& t = o.final_state;
    return s.W == t.W && s.b == t.b && s.z == t.z && s.a == t.a;
}

void initialize_weights(const NetworkSpec& spec, const WeightInit& init, std::uint64_t seed,
                        std::vector<DenseMatrix>& W, std::vector<DenseMatrix>& b) {
    std::mt19937_64 rng(seed);
    const std::size_t L = spec.num_layers();
    W.clear();
    b.clear();
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t fan_in = spec.layer_dims[l];
        const std::size_t fan_out = spec.layer_dims[l + 1];
        std::normal_distribution<double> dist(
            0.0, init.gain * std::sqrt(2.0 / static_cast<double>(fan_in)));
        DenseMatrix w(fan_out, fan_in);
        for (double& v : w.values()) v = dist(rng);
        W.push_back(std::move(w));
        b.emplace_back(fan_out, 1);
    }
}

NetworkState initialize_state(const TrainConfig& cfg, const DenseMatrix& x,
                              const DenseMatrix& y_onehot) {
    const NetworkSpec& spec = cfg.spec;
    spec.validate();
    if (x.rows() != spec.input_dim())
        throw ShapeError("initialize_state: x has " + std::to_string(x.rows()) +
                         " rows, network expects " + std::to_string(spec.input_dim()));
    if (y_onehot.rows() != spec.num_classes() || y_onehot.cols() != x.cols())
        throw ShapeError("initialize_state: targets are " + y_onehot.shape_str() +
                         ", expected " + std::to_string(spec.num_classes()) + "x" +
                         std::to_string(x.cols()));
    NetworkState s;
    initialize_weights(spec, cfg.init, cfg.seed, s.W, s.b);
    const std::size_t L = spec.num_layers();
    DenseMatrix act = x;
    for (std::size_t l = 0; l < L; ++l) {
        DenseMatrix z = add_column(matmul(s.W[l], act), s.b[l]);
        if (l + 1 < L) {
            act = activation_apply(spec.activation, z);
            s.a.push_back(act);
        }
        s.z.push_back(std::move(z));
    }
    s.prev_W = s.bar_W = s.W;
    s.prev_b = s.bar_b = s.b;
    s.prev_z = s.bar_z = s.z;
    s.prev_a = s.bar_a = s.a;
    return s;
}

double evaluate_accuracy(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                         const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                         const std::vector<std::size_t>& labels) {
    if (labels.empty()) return 0.0;
    const Inference inf = forward_inference(spec, W, b, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += inf.predictions[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

RunHistory train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                 const EpochObserver& observer) {
    cfg.validate();
    train_set.validate();
    const ScheduleConfig sched = cfg.effective_schedule();
    const DenseMatrix y = one_hot(train_set.labels, cfg.spec.num_classes());

    RunHistory h;
    h.config = cfg;
    NetworkState s = initialize_state(cfg, train_set.x, y);
    double rho = sched.rho0;
    h.initial_F = objective_F(s, train_set.x, y, rho, cfg.reg);

    Sweeper sweeper(cfg, train_set.x, y);
    std::vector<double> costs;
    std::vector<MajorizationRecord>* audit = cfg.audit ? &h.audit : nullptr;
    double f_prev = h.initial_F;

    for (int k = 1; k <= cfg.epochs; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const InertialCoefficients coef = schedule_p(k, sched);
        const double eps = schedule_eps(k - 1, sched);
        EpochMetrics m;
        m.epoch = k;
        m.rho = rho;
        m.eps = eps;
        m.p1 = coef.p1;
        m.p2 = coef.p2;
        m.p3 = coef.p3;
        try {
            Sweeper::EpochOutcome o;
            if (cfg.safeguard == SafeguardMode::PerBlock) {
                o = sweeper.sweep(s, k, coef, eps, rho, true, true, audit);
            } else {
                const NetworkState snapshot = s;
                const std::size_t audit_mark = audit ? audit->size() : 0;
                const Sweeper::WarmStarts saved = sweeper.warm_starts();
                o = sweeper.sweep(s, k, coef, eps, rho, true, false, audit);
                const double f_trial = objective_F(s, train_set.x, y, rho, cfg.reg);
                const bool bad = !(f_trial <= f_prev) ||
                                 feasibility_violation(s, cfg.spec.activation, eps) > 0.0;
                if (bad) {
                    s = snapshot;
                    sweeper.restore(saved);
                    if (audit) audit->resize(audit_mark);
                    const std::size_t L = cfg.spec.num_layers();
                    o = sweeper.sweep(s, k, coef, eps, rho, false, false, audit);
                    o.reverts = static_cast<int>(4 * L - 1);
                }
            }
            m.reverts = o.reverts;
            m.relaxed_bounds = o.relaxed;
            m.fista_iterations = o.fista_iterations;

            m.F = objective_F(s, train_set.x, y, rho, cfg.reg);
            if (!std::isfinite(m.F)) throw NumericError("objective is not finite after epoch");
            m.loss = loss_R(s.z.back(), y);
            m.train_accuracy = evaluate_accuracy(cfg.spec, s.W, s.b, train_set.x, train_set.labels);
            m.test_accuracy = test_set.num_samples() == 0
                                  ? 0.0
                                  : evaluate_accuracy(cfg.spec, s.W, s.b, test_set.x,
                                                      test_set.labels);
            m.feasibility_violation = feasibility_violation(s, cfg.spec.activation, eps);
            m.increments = {pooled_diff_norm(s.W, s.prev_W), pooled_diff_norm(s.b, s.prev_b),
                            pooled_diff_norm(s.z, s.prev_z), pooled_diff_norm(s.a, s.prev_a)};
        } catch (const Error& e) {
            h.final_state = s;
            throw TrainingAborted("epoch " + std::to_string(k) + ": " + e.what(), std::move(h));
        }
        m.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        h.epochs.push_back(m);
        if (observer) observer(m, s);

        f_prev = m.F;
        costs.push_back(sched.rho_cost == RhoCost::Objective ? m.F : m.loss);
        const std::size_t n = costs.size();
        if (n >= 3) rho = schedule_rho(rho, std::span<const double>(costs).subspan(n - 3), sched);
    }
    h.final_state = std::move(s);
    return h;
}

}  // namespace tiam
