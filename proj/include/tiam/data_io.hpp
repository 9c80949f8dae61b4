#pragma once

#include "tiam/dataset.hpp"
#include "tiam/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tiam {

/// Reads "f1,...,fd,label" rows (one sample per line) into a d x N dataset.
/// C is max label + 1. Throws IoError if the file cannot be opened and
/// InputError (with the 1-based line number) for malformed content.
Dataset load_csv(const std::filesystem::path& path);

/// Writes the same layout with 17 significant digits, so load_csv reproduces
/// the values exactly.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// C unit-variance Gaussian clusters whose means form a regular simplex with
/// pairwise distance separation * sqrt(d). Needs C <= d + 1. Samples are
/// ordered by class.
Dataset synth_blobs(std::size_t d, std::size_t classes, std::size_t per_class, double separation,
                    std::uint64_t seed);

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::string> warnings;  // classes missing from one side
};

/// Seeded permutation, then the first floor(fraction * N) samples train.
SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Metrics CSV: epoch,F,loss,train_acc,test_acc,rho,eps,p1,p2,p3,reverts,wall_ms
inline constexpr const char* kMetricsHeader =
    "epoch,F,loss,train_acc,test_acc,rho,eps,p1,p2,p3,reverts,wall_ms";

void write_metrics_csv(const std::vector<EpochMetrics>& epochs, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

inline constexpr const char* kAuditHeader = "epoch,block,layer,constant,base,linear,dist_sq,target";

void write_audit_csv(const std::vector<MajorizationRecord>& records,
                     const std::filesystem::path& path);
std::vector<MajorizationRecord> read_audit_csv(const std::filesystem::path& path);

}  // namespace tiam
