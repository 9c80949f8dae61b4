#pragma once

#include "tiam/config.hpp"
#include "tiam/data_io.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tiam {

/// Loads or generates the data and splits it. A csv source with a test_path
/// uses that file as the test side instead of splitting.
SplitResult prepare_data(const DataSource& source);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool aborted = false;
    std::string message;  // abort reason
    RunHistory history;   // partial when aborted
};

struct ExperimentResult {
    int exit_code = 0;  // 0, or 2 when any run aborted
    std::vector<SeedOutcome> runs;
};

/// Per output directory:
///   config.toml                      the effective configuration
///   metrics_seed<s>.csv              one row per epoch
///   diagnostics_seed<s>.txt / .kv    report in text and key=value form
///   audit_seed<s>.csv                majorization records (when run.audit is on)
///   aggregate.csv                    per-epoch mean and population std over the
///                                    completed runs
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

inline constexpr const char* kAggregateHeader = "epoch,runs,test_acc_mean,test_acc_std,F_mean,F_std";

/// Writes the aggregate of equally long metric series.
void write_aggregate_csv(const std::vector<std::vector<EpochMetrics>>& runs,
                         const std::filesystem::path& path);

}  // namespace tiam
