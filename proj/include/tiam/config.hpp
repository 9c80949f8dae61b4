#pragma once

// Experiment documents: a small TOML subset with the sections [dataset],
// [model], [schedules], [backtracking], [fista] and [run]. Every key is
// optional; unknown sections and keys are ConfigErrors.

#include "tiam/baselines.hpp"
#include "tiam/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tiam {

enum class DataSourceKind { Synthetic, Csv };

struct DataSource {
    DataSourceKind kind = DataSourceKind::Synthetic;
    std::filesystem::path path;       // csv
    std::filesystem::path test_path;  // csv; empty means split `path`
    std::size_t d = 10;               // synthetic
    std::size_t classes = 3;
    std::size_t per_class = 100;
    double separation = 3.0;
    std::uint64_t synth_seed = 0;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
};

enum class Method { Tiam, GD, Adam };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct ExperimentConfig {
    DataSource data;
    std::vector<std::size_t> hidden{32, 32};
    Method method = Method::Tiam;
    /// layer_dims is completed from the data (input width, class count) at run time.
    TrainConfig train;
    BaselineConfig baseline;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::filesystem::path out_dir = "runs";

    void validate() const;
    /// [d, hidden..., classes]
    NetworkSpec network_for(std::size_t input_dim, std::size_t classes) const;
};

ExperimentConfig parse_config(std::string_view text);
/// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);
/// A complete document that parses back to the same configuration.
std::string to_document(const ExperimentConfig& cfg);

}  // namespace tiam
