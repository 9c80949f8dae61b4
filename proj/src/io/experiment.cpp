#include "tiam/experiment.hpp"

#include "tiam/diagnostics.hpp"
#include "tiam/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace tiam {
namespace {

std::string fmt17(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void write_reports(const RunHistory& h, const std::filesystem::path& dir, const std::string& stem) {
    const DiagnosticsReport report = build_report(h);
    {
        std::ofstream out = open_out(dir / (stem + ".txt"));
        write_report_text(out, report);
    }
    std::ofstream out = open_out(dir / (stem + ".kv"));
    write_report_kv(out, report);
    if (!out) throw IoError("write failed in '" + dir.string() + "'");
}

}  // namespace

SplitResult prepare_data(const DataSource& source) {
    if (source.kind == DataSourceKind::Synthetic) {
        const Dataset ds = synth_blobs(source.d, source.classes, source.per_class,
                                       source.separation, source.synth_seed);
        return split(ds, source.train_fraction, source.split_seed);
    }
    Dataset full = load_csv(source.path);
    if (source.test_path.empty()) return split(full, source.train_fraction, source.split_seed);

    SplitResult r{std::move(full), load_csv(source.test_path), {}};
    if (r.train.num_features() != r.test.num_features())
        throw InputError("train and test files have different feature counts");
    r.train.classes = r.test.classes = std::max(r.train.classes, r.test.classes);
    return r;
}

void write_aggregate_csv(const std::vector<std::vector<EpochMetrics>>& runs,
                         const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << kAggregateHeader << '\n';
    if (!runs.empty()) {
        const std::size_t epochs = runs.front().size();
        for (const auto& r : runs)
            if (r.size() != epochs) throw InputError("aggregate: runs have different lengths");
        const double n = static_cast<double>(runs.size());
        for (std::size_t k = 0; k < epochs; ++k) {
            double acc = 0.0, F = 0.0;
            for (const auto& r : runs) {
                acc += r[k].test_accuracy;
                F += r[k].F;
            }
            acc /= n;
            F /= n;
            double acc_var = 0.0, F_var = 0.0;
            for (const auto& r : runs) {
                acc_var += (r[k].test_accuracy - acc) * (r[k].test_accuracy - acc);
                F_var += (r[k].F - F) * (r[k].F - F);
            }
            out << runs.front()[k].epoch << ',' << runs.size() << ',' << fmt17(acc) << ','
                << fmt17(std::sqrt(acc_var / n)) << ',' << fmt17(F) << ','
                << fmt17(std::sqrt(F_var / n)) << '\n';
        }
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    const SplitResult data = prepare_data(cfg.data);
    if (log)
        for (const auto& w : data.warnings) *log << "warning: " << w << "\n";

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create '" + cfg.out_dir.string() + "': " + ec.message());
    {
        std::ofstream echo = open_out(cfg.out_dir / "config.toml");
        echo << to_document(cfg);
    }

    const NetworkSpec spec = cfg.network_for(data.train.num_features(), data.train.classes);
    ExperimentResult result;
    std::vector<std::vector<EpochMetrics>> completed;
    for (std::uint64_t seed : cfg.seeds) {
        SeedOutcome run;
        run.seed = seed;
        try {
            if (cfg.method == Method::Tiam) {
                TrainConfig t = cfg.train;
                t.spec = spec;
                t.seed = seed;
                run.history = train(t, data.train, data.test);
            } else {
                BaselineConfig b = cfg.baseline;
                b.seed = seed;
                run.history = train_baseline(b, spec, data.train, data.test);
            }
        } catch (const TrainingAborted& e) {
            run.aborted = true;
            run.message = e.what();
            run.history = e.partial();
        }

        const std::string tag = "seed" + std::to_string(seed);
        write_metrics_csv(run.history.epochs, cfg.out_dir / ("metrics_" + tag + ".csv"));
        write_reports(run.history, cfg.out_dir, "diagnostics_" + tag);
        if (cfg.train.audit && cfg.method == Method::Tiam)
            write_audit_csv(run.history.audit, cfg.out_dir / ("audit_" + tag + ".csv"));

        if (log) {
            *log << tag << ": ";
            if (run.aborted) *log << "aborted: " << run.message << "\n";
            else if (!run.history.epochs.empty())
                *log << "F=" << run.history.epochs.back().F
                     << " test_acc=" << run.history.epochs.back().test_accuracy << "\n";
            else *log << "no epochs\n";
        }
        if (run.aborted) result.exit_code = 2;
        else completed.push_back(run.history.epochs);
        result.runs.push_back(std::move(run));
    }
    write_aggregate_csv(completed, cfg.out_dir / "aggregate.csv");
    return result;
}

}  // namespace tiam
