#include "arcus/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "arcus/error.hpp"
#include "arcus/eval.hpp"
#include "arcus/stream.hpp"

namespace arcus {

std::size_t default_latent_dim(std::size_t input_dim) {
    return std::max<std::size_t>(1, input_dim / 4);
}

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string input;
    std::string scenario;
    std::string label_column;
    std::size_t batch_size = 512;
    double alpha = 0.95;
    double gamma = 0.8;
    int epochs_init = 5;
    int epochs_update = 1;
    std::size_t latent_dim = 0;
    int hidden_layers = 2;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::string inference_mode = "concept_driven";
    std::string merge_mode = "similarity";
    std::string out_dir = ".";
    std::size_t seeds = 5;
    bool ablations = false;
};

void add_model_flags(CLI::App& cmd, Options& o) {
    cmd.add_option("--batch-size", o.batch_size, "Points per batch")->check(CLI::PositiveNumber);
    cmd.add_option("--alpha", o.alpha, "Pool reliability threshold")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--gamma", o.gamma, "Model similarity threshold")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--epochs-init", o.epochs_init, "Epochs for a new model")->check(CLI::PositiveNumber);
    cmd.add_option("--epochs-update", o.epochs_update, "Epochs for an incremental update")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--latent-dim", o.latent_dim, "Latent width (default: input width / 4)");
    cmd.add_option("--hidden-layers", o.hidden_layers, "Encoder depth")->check(CLI::Range(1, 5));
    cmd.add_option("--learning-rate", o.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Model initialization seed");
    cmd.add_option("--inference-mode", o.inference_mode, "concept_driven | single_model")
        ->check(CLI::IsMember({"concept_driven", "single_model"}));
    cmd.add_option("--merge-mode", o.merge_mode, "similarity | always | never")
        ->check(CLI::IsMember({"similarity", "always", "never"}));
    cmd.add_option("--out-dir", o.out_dir, "Directory for output files");
}

PoolConfig pool_config(const Options& o) {
    PoolConfig p;
    p.alpha = o.alpha;
    p.gamma = o.gamma;
    p.epochs_init = o.epochs_init;
    p.epochs_update = o.epochs_update;
    p.inference_mode = parse_inference_mode(o.inference_mode);
    p.merge_mode = parse_merge_mode(o.merge_mode);
    return p;
}

ModelConfig model_config(const Options& o, std::size_t input_dim) {
    ModelConfig m;
    m.latent_dim = o.latent_dim ? o.latent_dim : default_latent_dim(input_dim);
    m.hidden_layers = o.hidden_layers;
    m.adam.learning_rate = o.learning_rate;
    m.seed = o.seed;
    return m;
}

std::ofstream open_output(const fs::path& dir, const char* name) {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) {
        throw Error((dir / name).string() + ": cannot open for writing");
    }
    return f;
}

DriftScenario scenario_with_overrides(const Options& o, bool batch_size_given) {
    DriftScenario sc = load_scenario(o.scenario);
    if (batch_size_given) {
        sc.batch_size = o.batch_size;
    }
    return sc;
}

int do_run(const Options& o, bool batch_size_given, std::ostream& out) {
    std::unique_ptr<BatchSource> source;
    std::size_t dim = 0;
    if (!o.input.empty()) {
        auto csv = std::make_unique<CsvBatchSource>(
            o.input, o.batch_size,
            o.label_column.empty() ? std::nullopt : std::optional<std::string>(o.label_column));
        dim = csv->dim();
        source = std::move(csv);
    } else {
        const DriftScenario sc = scenario_with_overrides(o, batch_size_given);
        dim = sc.dim;
        source = std::make_unique<DriftStreamSource>(sc);
    }
    const RunResult result = run_prequential(*source, pool_config(o), model_config(o, dim));

    auto scores = open_output(o.out_dir, "scores.csv");
    write_scores_csv(scores, result);
    auto trace = open_output(o.out_dir, "trace.csv");
    write_trace_csv(trace, result);

    out << "scored batches: " << result.scored_batches() << "\n";
    out << "major updates:  " << result.major_updates() << "\n";
    out << "final pool:     " << (result.pool_size.empty() ? 1 : result.pool_size.back()) << "\n";
    if (result.has_labels() && result.scored_batches() > 0) {
        try {
            out << "stream AUC:     " << stream_auc(result) << "\n";
        } catch (const InvalidArgument&) {
            // single-class labels: no AUC to report
        }
    }
    return 0;
}

int do_bench(const Options& o, bool batch_size_given, std::ostream& out) {
    const DriftScenario sc = scenario_with_overrides(o, batch_size_given);
    BenchmarkConfig cfg;
    cfg.model = model_config(o, sc.dim);
    cfg.variants = benchmark_variants(pool_config(o), o.ablations);
    cfg.seeds = o.seeds;
    const auto report = run_benchmark(sc, cfg);
    auto csv = open_output(o.out_dir, "report.csv");
    write_report_csv(csv, report);
    write_report_table(out, report);
    return 0;
}

int do_generate(const Options& o, bool batch_size_given, bool seed_given, std::ostream& out) {
    DriftScenario sc = scenario_with_overrides(o, batch_size_given);
    if (seed_given) {
        sc.seed = o.seed;
    }
    const auto batches = generate_drift_stream(sc);
    auto f = open_output(o.out_dir, "stream.csv");
    write_stream_csv(f, batches);
    out << "wrote " << batches.size() << " batches of " << sc.batch_size << " points to "
        << (fs::path(o.out_dir) / "stream.csv").string() << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive autoencoder-pool anomaly detection on drifting streams", "arcus"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "Score one stream; writes scores.csv and trace.csv");
    auto* in_run = run->add_option("--input", o.input, "CSV stream file");
    auto* sc_run = run->add_option("--scenario", o.scenario, "Scenario file (JSON)");
    in_run->excludes(sc_run);
    run->add_option("--label-column", o.label_column, "Name of the 0/1 ground-truth column");
    add_model_flags(*run, o);

    auto* bench = app.add_subcommand("bench", "Compare ARCUS with the incremental baseline; writes report.csv");
    bench->add_option("--scenario", o.scenario, "Scenario file (JSON)")->required();
    bench->add_option("--seeds", o.seeds, "Number of repetitions")->check(CLI::PositiveNumber);
    bench->add_flag("--ablations", o.ablations, "Also run the ablation variants");
    add_model_flags(*bench, o);

    auto* gen = app.add_subcommand("generate", "Write a scenario's stream to stream.csv");
    gen->add_option("--scenario", o.scenario, "Scenario file (JSON)")->required();
    gen->add_option("--batch-size", o.batch_size, "Override the scenario batch size")
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", o.seed, "Override the scenario seed");
    gen->add_option("--out-dir", o.out_dir, "Directory for stream.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "arcus: " << e.what() << "\n";
        err << "usage: arcus {run|bench|generate} [options]  (see --help)\n";
        return e.get_exit_code() ? e.get_exit_code() : 2;
    }

    try {
        if (run->parsed()) {
            if (o.input.empty() && o.scenario.empty()) {
                err << "arcus run: one of --input or --scenario is required\n";
                err << run->help();
                return 2;
            }
            return do_run(o, run->count("--batch-size") > 0, out);
        }
        if (bench->parsed()) {
            return do_bench(o, bench->count("--batch-size") > 0, out);
        }
        return do_generate(o, gen->count("--batch-size") > 0, gen->count("--seed") > 0, out);
    } catch (const std::exception& e) {
        err << "arcus: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace arcus
