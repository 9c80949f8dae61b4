#include "tiam/config.hpp"
#include "tiam/data_io.hpp"
#include "tiam/diagnostics.hpp"
#include "tiam/errors.hpp"
#include "tiam/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kAbort = 2;
constexpr int kIoError = 3;

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tiam::IoError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    return line;
}

int diagnose(const std::string& path) {
    const std::string header = first_line(path);
    if (header == tiam::kAuditHeader) {
        const auto records = tiam::read_audit_csv(path);
        const auto audit = tiam::verify_majorization(records);
        std::cout << "majorization audit: " << audit.failures << " failure(s) in " << audit.checked
                  << " record(s)" << (audit.empty ? " [warning: audit empty]" : "") << "\n";
        return audit.failures == 0 ? kOk : kAbort;
    }
    if (header != tiam::kMetricsHeader)
        throw tiam::InputError("'" + path + "' is neither a metrics nor an audit CSV");

    const auto epochs = tiam::read_metrics_csv(path);
    std::vector<double> F;
    for (const auto& e : epochs) F.push_back(e.F);
    const auto violations = tiam::check_monotonicity(F, 1e-8);
    std::cout << "epochs: " << epochs.size() << "\n";
    std::cout << "objective monotonicity: " << violations.size() << " violation(s)\n";
    for (const auto& v : violations) std::cout << "  k=" << v.index << "  dF=" << v.delta << "\n";
    if (!F.empty()) {
        const double f_min = *std::min_element(F.begin(), F.end());
        const auto rate = tiam::estimate_rate(F, f_min - 1e-12);
        std::cout << "rate estimate, max over last quartile: ";
        if (rate.max_last_quartile) std::cout << *rate.max_last_quartile << "\n";
        else std::cout << "undefined\n";
        std::cout << "final F: " << F.back() << "  final test accuracy: "
                  << epochs.back().test_accuracy << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alternating-minimization MLP training with triple inertial acceleration"};
    app.require_subcommand(1);

    std::string config_path, out_dir, ablation;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    auto* train_cmd = app.add_subcommand("train", "train with the inertial alternating scheme");
    train_cmd->add_option("--config", config_path, "experiment document")->required();
    train_cmd->add_option("--seed", seed, "run a single seed");
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--epochs", epochs, "epoch count")->check(CLI::PositiveNumber);
    train_cmd->add_option("--ablation", ablation, "baseline|t12|t3|full")
        ->check(CLI::IsMember({"baseline", "t12", "t3", "full"}));

    std::string optimizer;
    auto* base_cmd = app.add_subcommand("baseline", "train with backpropagation (GD or Adam)");
    base_cmd->add_option("--config", config_path, "experiment document")->required();
    base_cmd->add_option("--optimizer", optimizer, "gd|adam")->required();
    base_cmd->add_option("--seed", seed, "run a single seed");
    base_cmd->add_option("--out", out_dir, "output directory");
    base_cmd->add_option("--epochs", epochs, "epoch count")->check(CLI::PositiveNumber);

    std::string history;
    auto* diag_cmd = app.add_subcommand("diagnose", "summarize a metrics or audit CSV");
    diag_cmd->add_option("--history", history, "metrics or audit CSV")->required();

    std::size_t d = 0, classes = 0, per_class = 0;
    double separation = 0.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "write a Gaussian-blob dataset CSV");
    synth_cmd->add_option("--d", d, "feature count")->required();
    synth_cmd->add_option("--classes", classes, "class count")->required();
    synth_cmd->add_option("--per-class", per_class, "samples per class")->required();
    synth_cmd->add_option("--separation", separation, "mean spacing per sqrt(d)")->required();
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*diag_cmd) return diagnose(history);
        if (*synth_cmd) {
            tiam::write_csv(tiam::synth_blobs(d, classes, per_class, separation, synth_seed),
                            synth_out);
            return kOk;
        }

        tiam::ExperimentConfig cfg = tiam::load_config(config_path);
        if (*train_cmd) {
            cfg.method = tiam::Method::Tiam;
            if (!ablation.empty()) cfg.train.ablation = tiam::parse_ablation(ablation);
        } else {
            cfg.method = tiam::parse_method(optimizer);
            if (cfg.method == tiam::Method::Tiam)
                throw tiam::ConfigError("baseline --optimizer must be gd or adam");
            cfg.baseline.optimizer = tiam::parse_optimizer(optimizer);
        }
        if (seed) cfg.seeds = {*seed};
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (epochs) cfg.train.epochs = cfg.baseline.epochs = *epochs;
        cfg.validate();

        const auto result = tiam::run_experiment(cfg, &std::cerr);
        return result.exit_code == 0 ? kOk : kAbort;
    } catch (const tiam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const tiam::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kConfigError;
    } catch (const tiam::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const tiam::Error& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kAbort;
    }
}
