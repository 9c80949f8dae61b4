#pragma once

#include "tiam/accel.hpp"
#include "tiam/dataset.hpp"
#include "tiam/errors.hpp"
#include "tiam/network.hpp"
#include "tiam/solver.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tiam {

/// Which inertial steps are active. Baseline disables all three, T12 only
/// the first two, T3 only the third.
enum class Ablation { Baseline, T12, T3, Full };

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view name);

enum class SafeguardMode {
    PerBlock,  // one objective check around each of the 4L-1 sub-updates
    PerEpoch,  // one check per sweep; a failing sweep is redone without acceleration
};

/// Weights ~ N(0, (gain^2) * 2 / fan_in), biases zero.
struct WeightInit {
    double gain = 1.0;
};

struct TrainConfig {
    NetworkSpec spec;
    ScheduleConfig hyper;
    RegularizerSpec reg;
    BacktrackConfig backtrack;
    FistaConfig fista;
    int epochs = 200;
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::Full;
    WeightInit init;
    SafeguardMode safeguard = SafeguardMode::PerBlock;
    bool audit = false;  // keep every accepted majorization record

    void validate() const;
    /// The schedule with `epochs` and the ablation's forced zero bases applied.
    ScheduleConfig effective_schedule() const;
};

struct BlockNorms {
    double W = 0.0;
    double b = 0.0;
    double z = 0.0;
    double a = 0.0;

    double sum() const { return W + b + z + a; }
    friend bool operator==(const BlockNorms&, const BlockNorms&) = default;
};

struct EpochMetrics {
    int epoch = 0;
    double F = 0.0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double rho = 0.0;
    double eps = 0.0;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    int reverts = 0;
    double wall_ms = 0.0;

    // Not part of the metrics CSV.
    double feasibility_violation = 0.0;
    std::size_t relaxed_bounds = 0;
    BlockNorms increments;  // ||X^{k+1} - X^k||_F per block, all layers pooled
    int fista_iterations = 0;

    /// Equality ignoring wall_ms.
    bool same_values(const EpochMetrics& o) const;
};

struct RunHistory {
    std::vector<EpochMetrics> epochs;
    NetworkState final_state;
    TrainConfig config;
    double initial_F = 0.0;
    std::vector<MajorizationRecord> audit;

    /// Bitwise equality of everything except timings.
    bool same_values(const RunHistory& o) const;
};

/// Carries the epochs completed before a numeric or feasibility failure.
class TrainingAborted : public Error {
public:
    TrainingAborted(const std::string& what, RunHistory partial)
        : Error(what), partial_(std::move(partial)) {}
    const RunHistory& partial() const noexcept { return partial_; }

private:
    RunHistory partial_;
};

/// He-style seeded weights, zero biases, z = W a + b and a = h(z) feed-forward,
/// with previous and bar snapshots equal to the initial values.
NetworkState initialize_state(const TrainConfig& cfg, const DenseMatrix& x,
                              const DenseMatrix& y_onehot);

/// Seeded He-normal weights and zero biases (shared with the baselines).
void initialize_weights(const NetworkSpec& spec, const WeightInit& init, std::uint64_t seed,
                        std::vector<DenseMatrix>& W, std::vector<DenseMatrix>& b);

double evaluate_accuracy(const NetworkSpec& spec, const std::vector<DenseMatrix>& W,
                         const std::vector<DenseMatrix>& b, const DenseMatrix& x,
                         const std::vector<std::size_t>& labels);

using EpochObserver = std::function<void(const EpochMetrics&, const NetworkState&)>;

/// Runs K epochs of the triple-inertial alternating minimization sweep
/// W -> b -> z -> a over layers 1..L. Throws TrainingAborted on failure.
RunHistory train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                 const EpochObserver& observer = {});

}  // namespace tiam
