#include "cli.hpp"

#include "gridstab/attack_model.hpp"
#include "gridstab/core_data.hpp"
#include "gridstab/error.hpp"
#include "gridstab/feature_stats.hpp"
#include "gridstab/ml/model.hpp"
#include "gridstab/pipeline.hpp"
#include "gridstab/seeding.hpp"
#include "gridstab/spatial_load.hpp"
#include "gridstab/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace gridstab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string input;
    std::string output;
    std::string config;
    std::string model_file;
    std::string test_output;
    std::uint64_t seed = 0;
    double alpha = stats::kDefaultAlpha;
    std::size_t partitions = 1;
    std::string model = "forest";
    double test_fraction = 0.2;
    std::string convention = "paper";
    bool lenient = false;
    std::size_t count = 1000;
    std::size_t bins = 20;
    std::vector<std::size_t> sizes;
    double r0 = 0.0, r1 = 10.0, t0 = 0.0, t1 = 24.0;
    int resolution = 512;
    std::optional<double> radius;
    std::optional<double> time;
};

void setup_logging() {
    auto logger = spdlog::stderr_logger_mt("gridstab");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("GRIDSTAB_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
}

LabelConvention convention_of(const std::string& name) {
    const auto conv = parse_convention(name);
    if (!conv) throw UsageError("--label-convention must be paper or inverse");
    return *conv;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::BadConfig, path + " is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Dataset load(const Options& o) {
    LoadOptions opts{convention_of(o.convention), o.lenient};
    auto report = load_csv(o.input, opts);
    for (const auto& d : report.dropped)
        spdlog::warn("dropped row {}: {} ({})", d.row, d.rule, d.detail);
    return std::move(report.dataset);
}

// CLI flag > config file > built-in default.
pipeline::PipelineConfig pipeline_config(const Options& o, const CLI::App& sub) {
    pipeline::PipelineConfig cfg;
    if (!o.config.empty()) cfg = pipeline::load_config(o.config);
    if (sub.count("--seed")) cfg.seed = cfg.plan.seed = o.seed;
    if (sub.count("--test-fraction")) cfg.test_fraction = o.test_fraction;
    if (sub.count("--label-convention")) cfg.convention = convention_of(o.convention);
    if (sub.get_option_no_throw("--partitions") && sub.count("--partitions")) cfg.plan.count = o.partitions;
    if (sub.get_option_no_throw("--alpha") && sub.count("--alpha")) cfg.alpha = o.alpha;
    if (sub.count("--model")) {
        auto doc = cfg.model.to_json();
        doc["kind"] = o.model;
        cfg.model = ml::ModelSpec::from_json(doc);
    }
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw Error(ErrorKind::BadFraction, "test fraction must lie in (0, 1)");
    return cfg;
}

int cmd_ingest(const Options& o, std::ostream& out) {
    LoadOptions opts{convention_of(o.convention), o.lenient};
    const auto report = load_csv(o.input, opts);
    const auto& ds = report.dataset;
    std::size_t stable = 0;
    for (const auto& s : ds.samples()) stable += s.label == Label::Stable;
    json dropped = json::array();
    for (const auto& d : report.dropped)
        dropped.push_back({{"row", d.row}, {"rule", d.rule}, {"detail", d.detail}});
    json doc{{"rows", ds.size()},
             {"stable", stable},
             {"unstable", ds.size() - stable},
             {"label_convention", opts.convention.name()},
             {"violations", dropped.size()},
             {"dropped", dropped},
             {"summary", stats::to_json(stats::summarize(ds))}};
    if (!o.output.empty()) write_text(o.output, doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return 0;
}

int cmd_synth(const Options& o, const CLI::App& sub, std::ostream& out) {
    if (o.output.empty()) throw UsageError("synth needs --output");
    synth::SimSettings settings;
    if (!o.config.empty()) settings = synth::sim_settings_from_json(read_json(o.config));
    if (sub.count("--alpha")) settings.damping = o.alpha;
    const auto conv = convention_of(o.convention);
    spdlog::info("synthesizing {} rows with seed {}", o.count, o.seed);
    const auto result = synth::generate_dataset(o.seed, o.count, settings, conv);
    write_csv(result.dataset, o.output);
    write_text(o.output + ".sidecar.json", result.sidecar().dump(2) + "\n");
    std::size_t stable = 0;
    for (const auto& s : result.dataset.samples()) stable += s.label == Label::Stable;
    json doc{{"rows", result.dataset.size()},
             {"output", o.output},
             {"stable", stable},
             {"unstable", result.dataset.size() - stable},
             {"marginal_rows", result.marginal_rows.size()},
             {"diverged_rows", result.diverged_rows.size()}};
    out << doc.dump(2) << "\n";
    return 0;
}

int cmd_features(const Options& o, std::ostream& out) {
    const Dataset ds = load(o);
    const auto summary = stats::summarize(ds);
    const auto table = stats::importance_table(ds, o.alpha);
    const auto stab = ds.stab_values();
    const auto hist = stats::histogram(stab, o.bins);
    json doc{{"rows", ds.size()},
             {"summary", stats::to_json(summary)},
             {"importance", stats::to_json(table, o.alpha)},
             {"stab_histogram", stats::to_json(hist)}};
    if (!o.output.empty()) {
        const fs::path dir = o.output;
        fs::create_directories(dir);
        write_text(dir / "features.json", doc.dump(2) + "\n");
        write_text(dir / "summary.csv", stats::summary_csv(summary));
        write_text(dir / "importance.csv", stats::importance_csv(table));
        write_text(dir / "histogram.csv", stats::histogram_csv(hist));
    }
    out << doc.dump(2) << "\n";
    return 0;
}

int cmd_train(const Options& o, const CLI::App& sub, std::ostream& out) {
    if (o.output.empty()) throw UsageError("train needs --output for the model file");
    const Dataset ds = load(o);
    const auto cfg = pipeline_config(o, sub);
    auto [train, test] = split(ds, cfg.test_fraction, derive_seed(cfg.seed, seed_stream::split, 0));
    const auto model = ml::fit_model(train, cfg.model, derive_seed(cfg.seed, seed_stream::model, 0),
                                     cfg.convention);
    write_text(o.output, model.to_json().dump(2) + "\n");
    const std::string test_path = o.test_output.empty() ? o.output + ".test.csv" : o.test_output;
    write_csv(test, test_path);
    const auto metrics = ml::evaluate(model, test);
    out << json{{"model", o.output}, {"test_set", test_path}, {"metrics", ml::to_json(metrics)}}.dump(2)
        << "\n";
    return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    if (o.model_file.empty()) throw UsageError("evaluate needs --model-file");
    const auto model = ml::Model::from_json(read_json(o.model_file));
    Options with_conv = o;
    with_conv.convention = model.convention().name();
    const Dataset test = load(with_conv);
    const auto metrics = ml::to_json(ml::evaluate(model, test));
    if (!o.output.empty()) write_text(o.output, metrics.dump(2) + "\n");
    out << json{{"metrics", metrics}}.dump(2) << "\n";
    return 0;
}

int cmd_pipeline(const Options& o, const CLI::App& sub, std::ostream& out) {
    const Dataset ds = load(o);
    const auto cfg = pipeline_config(o, sub);
    const auto report = pipeline::run_pipeline(ds, cfg);
    const std::string dir = o.output.empty() ? "pipeline_report" : o.output;
    pipeline::write_report(report, dir);
    json parts = json::array();
    for (const auto& p : report.partitions) parts.push_back(ml::to_json(p.metrics));
    json agg{{"mode", pipeline::to_string(report.aggregate.mode)},
             {"metrics", ml::to_json(report.aggregate.classification)}};
    out << json{{"report", (fs::path(dir) / "report.json").string()},
                {"aggregate", agg},
                {"partitions", parts}}
               .dump(2)
        << "\n";
    return 0;
}

int cmd_curve(const Options& o, const CLI::App& sub, std::ostream& out) {
    const Dataset ds = load(o);
    const auto cfg = pipeline_config(o, sub);
    const auto sizes = o.sizes.empty() ? cfg.curve_sizes : o.sizes;
    const auto points = pipeline::learning_curve(ds, cfg, sizes);
    if (!o.output.empty()) write_text(o.output, pipeline::learning_curve_csv(points));
    json doc = json::array();
    for (const auto& p : points) doc.push_back({{"size", p.size}, {"accuracy", p.accuracy}});
    out << json{{"learning_curve", doc}}.dump(2) << "\n";
    return 0;
}

int cmd_load_model(const Options& o, std::ostream& out) {
    if (o.config.empty()) throw UsageError("load-model needs --config with a load profile");
    const auto profile = load::profile_from_json(read_json(o.config));
    json doc{{"profile", load::to_json(profile)}};
    if (o.radius || o.time) {
        if (!o.radius || !o.time) throw UsageError("--radius and --time go together");
        doc["density"] = {{"r", *o.radius}, {"t", *o.time}, {"value", load::density_at(profile, *o.radius, *o.time)}};
    }
    doc["total_load"] = {{"r", {o.r0, o.r1}},
                         {"t", {o.t0, o.t1}},
                         {"resolution", o.resolution},
                         {"value", load::total_load(profile, {o.r0, o.r1}, {o.t0, o.t1}, o.resolution)}};
    if (!o.output.empty()) write_text(o.output, doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return 0;
}

int cmd_attack(const Options& o, std::ostream& out) {
    json doc;
    try {
        doc = attack::attack_report(attack::scenario_from_json(read_json(o.input)));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadScenario, std::string("scenario: ") + e.what());
    }
    if (!o.output.empty()) write_text(o.output, doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return 0;
}

void error_line(std::ostream& err, const std::string& kind, const std::string& stage,
                const std::string& message, int code) {
    err << json{{"error", kind}, {"stage", stage}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    if (!spdlog::get("gridstab")) setup_logging();

    CLI::App app{"Smart-grid stability analytics: data checks, synthesis, models and reports"};
    app.require_subcommand(1, 1);
    Options o;

    auto input = [&](CLI::App* s, bool required = true) {
        auto* opt = s->add_option("--input,-i", o.input, "Input file")->check(CLI::ExistingFile);
        if (required) opt->required();
    };
    auto common_data = [&](CLI::App* s) {
        s->add_option("--label-convention", o.convention, "paper or inverse")
            ->check(CLI::IsMember({"paper", "inverse"}));
        s->add_flag("--lenient", o.lenient, "Drop invalid rows instead of failing");
    };
    auto model_flags = [&](CLI::App* s) {
        s->add_option("--config,-c", o.config, "Pipeline config JSON")->check(CLI::ExistingFile);
        s->add_option("--seed", o.seed, "Base seed");
        s->add_option("--model", o.model, "Model kind")
            ->check(CLI::IsMember({"tree", "forest", "ridge", "lasso", "logistic", "net"}));
        s->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
    };

    auto* ingest = app.add_subcommand("ingest", "Validate a dataset CSV and print a summary");
    input(ingest);
    common_data(ingest);
    ingest->add_option("--output,-o", o.output, "Also write the summary JSON here");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic star-grid dataset");
    synth->add_option("--count,-n", o.count, "Rows")->check(CLI::PositiveNumber);
    synth->add_option("--seed", o.seed, "Seed");
    synth->add_option("--alpha", o.alpha, "Damping of the simulated grid");
    synth->add_option("--config,-c", o.config, "Simulation settings JSON")->check(CLI::ExistingFile);
    synth->add_option("--output,-o", o.output, "CSV to write");
    synth->add_option("--label-convention", o.convention, "paper or inverse")
        ->check(CLI::IsMember({"paper", "inverse"}));

    auto* features = app.add_subcommand("features", "Feature ranges, importance table and stab histogram");
    input(features);
    common_data(features);
    features->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    features->add_option("--bins", o.bins, "Histogram bins")->check(CLI::PositiveNumber);
    features->add_option("--output,-o", o.output, "Directory for JSON and CSV reports");

    auto* train = app.add_subcommand("train", "Fit one model and serialize it");
    input(train);
    common_data(train);
    model_flags(train);
    train->add_option("--output,-o", o.output, "Model JSON to write");
    train->add_option("--test-output", o.test_output, "Held-out rows CSV (default <output>.test.csv)");

    auto* evaluate = app.add_subcommand("evaluate", "Metrics of a saved model on a test CSV");
    input(evaluate);
    evaluate->add_flag("--lenient", o.lenient, "Drop invalid rows instead of failing");
    evaluate->add_option("--model-file,-m", o.model_file, "Model JSON")->check(CLI::ExistingFile);
    evaluate->add_option("--output,-o", o.output, "Also write the metrics JSON here");

    auto* pipe = app.add_subcommand("pipeline", "Partitioned fit/evaluate run with reports");
    input(pipe);
    common_data(pipe);
    model_flags(pipe);
    pipe->add_option("--partitions,-k", o.partitions, "Partition count")->check(CLI::PositiveNumber);
    pipe->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    pipe->add_option("--output,-o", o.output, "Report directory");

    auto* curve = app.add_subcommand("curve", "Learning curve on the held-out split");
    input(curve);
    common_data(curve);
    model_flags(curve);
    curve->add_option("--sizes", o.sizes, "Training sizes, ascending")->delimiter(',');
    curve->add_option("--output,-o", o.output, "CSV to write");

    auto* load_cmd = app.add_subcommand("load-model", "Spatial load density and integrated load");
    load_cmd->add_option("--config,-c", o.config, "Load profile JSON")->check(CLI::ExistingFile);
    load_cmd->add_option("--r0", o.r0, "Inner radius");
    load_cmd->add_option("--r1", o.r1, "Outer radius");
    load_cmd->add_option("--t0", o.t0, "Start hour");
    load_cmd->add_option("--t1", o.t1, "End hour");
    load_cmd->add_option("--resolution", o.resolution, "Simpson steps per axis");
    load_cmd->add_option("--radius", o.radius, "Radius for a point density");
    load_cmd->add_option("--time", o.time, "Hour for a point density");
    load_cmd->add_option("--output,-o", o.output, "Also write the JSON here");

    auto* attack_cmd = app.add_subcommand("attack", "False-demand injection loss report");
    input(attack_cmd);
    attack_cmd->add_option("--output,-o", o.output, "Also write the JSON here");

    std::string stage = "parse";
    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            error_line(err, "UsageError", stage, e.what(), 2);
            return 2;
        }
        const CLI::App* sub = app.get_subcommands().front();
        stage = sub->get_name();
        spdlog::debug("running {}", stage);
        if (sub == ingest) return cmd_ingest(o, out);
        if (sub == synth) return cmd_synth(o, *sub, out);
        if (sub == features) return cmd_features(o, out);
        if (sub == train) return cmd_train(o, *sub, out);
        if (sub == evaluate) return cmd_evaluate(o, out);
        if (sub == pipe) return cmd_pipeline(o, *sub, out);
        if (sub == curve) return cmd_curve(o, *sub, out);
        if (sub == load_cmd) return cmd_load_model(o, out);
        return cmd_attack(o, out);
    } catch (const UsageError& e) {
        error_line(err, "UsageError", stage, e.what(), 2);
        return 2;
    } catch (const pipeline::StageError& e) {
        error_line(err, std::string(to_string(e.kind())), stage + "/" + e.stage(), e.what(), 1);
        return 1;
    } catch (const Error& e) {
        error_line(err, std::string(to_string(e.kind())), stage, e.what(), 1);
        return 1;
    } catch (const std::exception& e) {
        error_line(err, "Io", stage, e.what(), 1);
        return 1;
    }
}

}  // namespace gridstab::cli
