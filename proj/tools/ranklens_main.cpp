// ranklens command line: generates synthetic land-cover regression data,
// trains the contrastive encoder and linear probe, and emits the concept
// explanation tables (CAV accuracies, TCAV scores, sensitivities, alignment,
// 2-D projections) as plot-ready CSV/JSON.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ranklens/config.hpp"
#include "ranklens/io.hpp"
#include "ranklens/landcover.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/pca.hpp"
#include "ranklens/synth.hpp"
#include "ranklens/tcav.hpp"
#include "ranklens/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ranklens;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;

std::string out_root() {
    const char* env = std::getenv("RANKLENS_OUT_ROOT");
    return env && *env ? env : "runs";
}

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd, const std::string& default_out) {
        cmd->add_option("--config", config_path, "run configuration file");
        cmd->add_option("--out", out, "output directory")->default_val(default_out);
        seed_opt = cmd->add_option("--seed", seed, "global seed (overrides config)");
    }

    RunConfig load() const {
        RunConfig cfg;
        if (!config_path.empty()) apply_config(cfg, parse_config_file(config_path));
        if (seed_opt && seed_opt->count() > 0) {
            cfg.seed = seed;
            cfg.train.seed = seed;
        }
        cfg.validate();
        return cfg;
    }
};

GroundTruthModel model_from(const RunConfig& cfg) {
    GroundTruthModel model = GroundTruthModel::defaults();
    model.noise_std = cfg.noise_std;
    model.nonlinear = cfg.nonlinear;
    return model;
}

std::vector<std::string> concept_names_list() {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kConceptCount; ++c)
        names.push_back(concept_name(static_cast<ConceptName>(c)));
    return names;
}

std::vector<std::size_t> parse_layers(const std::string& spec, std::size_t layer_count) {
    std::vector<std::size_t> layers;
    if (spec == "all") {
        for (std::size_t l = 0; l < layer_count; ++l) layers.push_back(l);
        return layers;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const std::size_t l = static_cast<std::size_t>(std::stoull(item));
        if (l >= layer_count)
            throw std::invalid_argument("--layers: index " + item + " out of range");
        layers.push_back(l);
    }
    if (layers.empty()) throw std::invalid_argument("--layers: empty selection");
    return layers;
}

int cmd_gen_data(const CommonFlags& flags, std::optional<std::uint64_t> n_override) {
    RunConfig cfg = flags.load();
    if (n_override) {
        cfg.n = *n_override;
        if (cfg.n < 100)
            throw std::invalid_argument("--n: need at least 100 scenes for stratification");
    }
    const GroundTruthModel model = model_from(cfg);
    std::vector<Scene> scenes =
        build_task_dataset(cfg.n, model, cfg.seed, cfg.grid, cfg.grid);
    scenes = stratified_split(std::move(scenes), cfg.quantiles, {0.64, 0.16, 0.20},
                              derive_seed(cfg.seed, 0x73706c74ULL));
    io::StoredDataset stored;
    stored.scenes = std::move(scenes);
    stored.model = model;
    stored.height = cfg.grid;
    stored.width = cfg.grid;
    io::write_dataset(flags.out, stored);
    std::cout << "wrote " << stored.scenes.size() << " scenes to " << flags.out << "\n";
    return 0;
}

int cmd_gen_concepts(const CommonFlags& flags) {
    const RunConfig cfg = flags.load();
    for (const ConceptSpec& spec : default_concept_specs()) {
        const std::vector<Scene> scenes =
            build_concept_set(spec, cfg.per_concept, cfg.seed, cfg.grid, cfg.grid);
        io::write_concept_set(flags.out, concept_name(spec.name), scenes, cfg.grid, cfg.grid);
    }
    std::cout << "wrote " << kConceptCount << " concept sets (" << cfg.per_concept
              << " scenes each) to " << flags.out << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& dataset_dir, bool with_baseline) {
    const RunConfig cfg = flags.load();
    const io::StoredDataset stored = io::load_dataset(dataset_dir);
    const std::vector<Scene>& dataset = stored.scenes;
    if (dataset.empty()) throw std::runtime_error("dataset is empty");

    fs::create_directories(flags.out);
    const std::size_t input_dim = dataset[0].feature_dim();
    const MlpEncoder initial =
        init_encoder(cfg.train.layer_sizes(input_dim), derive_seed(cfg.seed, kInitStream));

    const TrainedPipeline pipeline = train_pipeline(initial, dataset, cfg.train);

    io::Checkpoint ckpt;
    ckpt.encoder = pipeline.encoder;
    ckpt.head = pipeline.head;
    ckpt.config = cfg.train;
    ckpt.variant = "rnc-pretrained";
    ckpt.rng_state = cfg.seed;
    io::write_checkpoint(fs::path(flags.out) / "checkpoint_rnc.json", ckpt);
    io::write_loss_curve(fs::path(flags.out) / "pretrain_loss.csv", pipeline.pretrain_loss);
    io::write_probe_curve(fs::path(flags.out) / "probe_curve.csv", pipeline.probe_curve);

    json metrics;
    metrics["_schema"] = io::kMetricsSchema;
    metrics["runs"]["rnc"] = {
        {"val", io::metrics_json(evaluate(pipeline, dataset, Split::kVal))},
        {"test", io::metrics_json(evaluate(pipeline, dataset, Split::kTest))},
        {"best_epoch", pipeline.best_epoch},
        {"best_val_r2", pipeline.best_val_r2},
    };

    if (with_baseline) {
        const SupervisedResult sup = train_supervised(initial, dataset, cfg.train);
        io::Checkpoint base;
        base.encoder = sup.encoder;
        base.head = sup.head;
        base.config = cfg.train;
        base.variant = "supervised-baseline";
        base.rng_state = cfg.seed;
        io::write_checkpoint(fs::path(flags.out) / "checkpoint_baseline.json", base);
        io::write_loss_curve(fs::path(flags.out) / "baseline_loss.csv", sup.loss_curve);
        metrics["runs"]["baseline"] = {
            {"val", io::metrics_json(evaluate(sup.encoder, sup.head, dataset, Split::kVal))},
            {"test", io::metrics_json(evaluate(sup.encoder, sup.head, dataset, Split::kTest))},
        };
    }
    io::detail::write_text(fs::path(flags.out) / "metrics.json",
                                  metrics.dump(2) + "\n");
    const auto& test = metrics["runs"]["rnc"]["test"];
    std::cout << "rnc test R2 " << test["r2"] << " tau " << test["kendall_tau"] << "; outputs in "
              << flags.out << "\n";
    return 0;
}

int cmd_explain(const CommonFlags& flags, const std::string& checkpoint_path,
                const std::string& dataset_dir, const std::string& concepts_dir,
                const std::string& method_filter, const std::string& layers_spec,
                std::size_t cav_seeds) {
    if (cav_seeds == 0) throw std::invalid_argument("--cav-seeds must be positive");
    const RunConfig cfg = flags.load();
    const io::Checkpoint ckpt = io::load_checkpoint(checkpoint_path);
    const io::StoredDataset stored = io::load_dataset(dataset_dir);

    std::vector<std::vector<Scene>> sets;
    const std::vector<std::string> names = concept_names_list();
    for (const std::string& name : names)
        sets.push_back(io::load_concept_set(concepts_dir, name));

    const std::vector<std::size_t> layers =
        parse_layers(layers_spec, ckpt.encoder.layer_count());
    std::vector<SensitivityMethod> methods;
    if (method_filter == "both") {
        methods = {SensitivityMethod::kPlainGradient, SensitivityMethod::kIntegratedGradients};
    } else {
        methods = {method_from_name(method_filter)};
    }

    fs::create_directories(flags.out);
    const std::vector<Cav> cavs =
        train_all_cavs(ckpt.encoder, sets, names, layers, cfg.negatives, {},
                       derive_seed(cfg.seed, 0x63617673ULL));
    io::write_cavs(fs::path(flags.out) / "cavs.json", cavs);
    io::write_accuracy_table(fs::path(flags.out) / "concept_accuracy.csv",
                             concept_accuracy_by_layer(cavs));

    std::vector<const Scene*> test_scenes;
    for (const Scene& s : stored.scenes)
        if (s.split == Split::kTest) test_scenes.push_back(&s);
    if (test_scenes.empty()) throw std::runtime_error("dataset has no test split");

    IgConfig ig;
    ig.steps = cfg.ig_steps;

    auto records_for = [&](const Cav& cav, SensitivityMethod method) {
        std::vector<SensitivityRecord> records;
        records.reserve(test_scenes.size());
        for (const Scene* s : test_scenes)
            records.push_back(method == SensitivityMethod::kPlainGradient
                                  ? sensitivity_plain(ckpt.encoder, ckpt.head, *s, cav)
                                  : sensitivity_ig(ckpt.encoder, ckpt.head, *s, cav, ig));
        return records;
    };

    // Extra CAV draws for score averaging; the detailed tables always use
    // the first draw's CAVs.
    std::vector<std::vector<Cav>> redraws;
    for (std::size_t extra = 1; extra < cav_seeds; ++extra)
        redraws.push_back(train_all_cavs(ckpt.encoder, sets, names, layers, cfg.negatives, {},
                                         derive_seed(cfg.seed, 0x63617673ULL + extra)));

    std::vector<SensitivityRecord> all_records;
    std::vector<std::size_t> all_bins;
    std::vector<TcavScore> scores;
    std::vector<io::ProfileRow> profiles;
    for (std::size_t c = 0; c < cavs.size(); ++c) {
        const Cav& cav = cavs[c];
        for (SensitivityMethod method : methods) {
            std::vector<SensitivityRecord> records = records_for(cav, method);
            std::vector<TcavScore> draws = {tcav_score(records)};
            for (const std::vector<Cav>& redrawn : redraws)
                draws.push_back(tcav_score(records_for(redrawn[c], method)));
            scores.push_back(average_tcav_scores(draws));
            records = normalize_magnitudes(std::move(records));
            const std::vector<std::size_t> bins = label_quantile_bins(records, cfg.bins);
            profiles.push_back(
                {cav.concept_name, cav.layer, method, profile_from_records(records, cfg.bins)});
            all_records.insert(all_records.end(), records.begin(), records.end());
            all_bins.insert(all_bins.end(), bins.begin(), bins.end());
        }
    }
    io::write_sensitivities(fs::path(flags.out) / "sensitivity.csv", all_records, all_bins);
    io::write_tcav_summary(fs::path(flags.out) / "tcav_summary.json", scores);
    io::write_profiles(fs::path(flags.out) / "sensitivity_profile.csv", profiles);

    // Instance-to-concept alignment at the deepest requested layer.
    const std::size_t align_layer = *std::max_element(layers.begin(), layers.end());
    std::vector<Cav> align_cavs;
    for (const Cav& cav : cavs)
        if (cav.layer == align_layer) align_cavs.push_back(cav);
    Matrix activations(test_scenes.size(), ckpt.encoder.layer(align_layer).output_dim());
    std::vector<std::uint64_t> ids(test_scenes.size());
    std::vector<double> labels(test_scenes.size());
    {
        Matrix batch(test_scenes.size(), test_scenes[0]->feature_dim());
        for (std::size_t i = 0; i < test_scenes.size(); ++i) {
            std::copy(test_scenes[i]->grid.begin(), test_scenes[i]->grid.end(), batch.row(i));
            ids[i] = test_scenes[i]->id;
            labels[i] = test_scenes[i]->target;
        }
        activations = forward(ckpt.encoder, batch).layer_outputs[align_layer];
    }
    const std::vector<AlignmentRecord> alignment =
        align_instances(activations, ids, labels, align_cavs);
    io::write_alignment(fs::path(flags.out) / "alignment.csv", alignment, align_cavs);

    std::cout << "explained " << cavs.size() << " CAVs x " << methods.size() << " methods over "
              << test_scenes.size() << " test scenes; outputs in " << flags.out << "\n";
    return 0;
}

int cmd_project(const CommonFlags& flags, const std::string& checkpoint_path,
                const std::string& dataset_dir, std::string tag, const std::string& split_name_s) {
    const RunConfig cfg = flags.load();
    (void)cfg;
    const io::Checkpoint ckpt = io::load_checkpoint(checkpoint_path);
    const io::StoredDataset stored = io::load_dataset(dataset_dir);

    std::vector<const Scene*> scenes;
    for (const Scene& s : stored.scenes) {
        if (split_name_s == "all" || split_name(s.split) == split_name_s)
            scenes.push_back(&s);
    }
    if (scenes.size() < 3) throw std::invalid_argument("projection needs at least 3 instances");

    Matrix batch(scenes.size(), scenes[0]->feature_dim());
    std::vector<std::uint64_t> ids(scenes.size());
    std::vector<double> labels(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        std::copy(scenes[i]->grid.begin(), scenes[i]->grid.end(), batch.row(i));
        ids[i] = scenes[i]->id;
        labels[i] = scenes[i]->target;
    }
    if (tag.empty()) tag = ckpt.variant;
    // "random-init" re-derives the untrained encoder that training started
    // from; the checkpoint's config and seed pin it down exactly.
    const MlpEncoder encoder =
        tag == "random-init"
            ? init_encoder(ckpt.config.layer_sizes(scenes[0]->feature_dim()),
                           derive_seed(ckpt.rng_state, kInitStream))
            : ckpt.encoder;
    const Matrix embeddings = forward(encoder, batch).embeddings();
    const Pca2d pca = pca_project_2d(embeddings);

    fs::create_directories(flags.out);
    const fs::path path = fs::path(flags.out) / ("projection_" + tag + ".csv");
    io::write_projection(path, ids, labels, pca.coordinates, tag);
    std::cout << "projected " << scenes.size() << " embeddings to " << path.string() << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_path) {
    std::ostringstream report;
    report << "# schema: ranklens/report/v1\n";
    const fs::path dir(run_dir);

    const fs::path metrics_path = dir / "metrics.json";
    if (fs::exists(metrics_path)) {
        std::ifstream in(metrics_path);
        const json metrics = json::parse(in);
        report << "\n== prediction metrics ==\n";
        for (const auto& [run, blocks] : metrics.at("runs").items()) {
            for (const char* split : {"val", "test"}) {
                if (!blocks.contains(split)) continue;
                const auto& m = blocks.at(split);
                report << run << " " << split << ": R2 " << m.at("r2").get<double>() << ", tau "
                       << m.at("kendall_tau").get<double>() << " (n=" << m.at("n").get<std::size_t>()
                       << ")\n";
            }
        }
    }

    const fs::path acc_path = dir / "concept_accuracy.csv";
    if (fs::exists(acc_path)) {
        report << "\n== concept accuracy (holdout) ==\n";
        std::ifstream in(acc_path);
        std::string line;
        std::getline(in, line);  // schema
        std::getline(in, line);  // header
        while (std::getline(in, line)) report << line << "\n";
    }

    const fs::path tcav_path = dir / "tcav_summary.json";
    if (fs::exists(tcav_path)) {
        std::ifstream in(tcav_path);
        const json tcav = json::parse(in);
        report << "\n== TCAV scores (share of positive sensitivities) ==\n";
        for (const auto& row : tcav.at("scores"))
            report << row.at("concept").get<std::string>() << " layer "
                   << row.at("layer").get<std::size_t>() << " ["
                   << row.at("method").get<std::string>() << "]: "
                   << row.at("score").get<double>() << "\n";
    }

    io::detail::write_text(out_path, report.str());
    std::cout << "wrote report to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic land-cover regression with contrastive pretraining and "
                 "concept-based explanations"};
    app.require_subcommand(1);
    const std::string root = out_root();

    CLI::App* gen_data = app.add_subcommand("gen-data", "generate the task dataset");
    CommonFlags gen_data_flags;
    gen_data_flags.attach(gen_data, root + "/dataset");
    std::uint64_t n_override = 0;
    CLI::Option* n_opt = gen_data->add_option("--n", n_override, "number of scenes");

    CLI::App* gen_concepts = app.add_subcommand("gen-concepts", "generate concept probe sets");
    CommonFlags gen_concepts_flags;
    gen_concepts_flags.attach(gen_concepts, root + "/concepts");

    CLI::App* train = app.add_subcommand("train", "pretrain encoder and fit the linear probe");
    CommonFlags train_flags;
    train_flags.attach(train, root + "/run");
    std::string train_dataset = root + "/dataset";
    train->add_option("--dataset", train_dataset, "dataset directory");
    bool with_baseline = false;
    train->add_flag("--baseline", with_baseline, "also train the supervised L1 baseline");

    CLI::App* explain = app.add_subcommand("explain", "emit the concept explanation suite");
    CommonFlags explain_flags;
    explain_flags.attach(explain, root + "/run");
    std::string explain_checkpoint = root + "/run/checkpoint_rnc.json";
    std::string explain_dataset = root + "/dataset";
    std::string explain_concepts = root + "/concepts";
    std::string method = "both";
    std::string layers = "all";
    explain->add_option("--checkpoint", explain_checkpoint, "trained checkpoint");
    explain->add_option("--dataset", explain_dataset, "dataset directory");
    explain->add_option("--concepts", explain_concepts, "concept sets directory");
    explain->add_option("--method", method, "sensitivity method")
        ->check(CLI::IsMember({"plain", "ig", "both"}));
    explain->add_option("--layers", layers, "encoder layers, comma separated or 'all'");
    std::size_t cav_seeds = 1;
    explain->add_option("--cav-seeds", cav_seeds,
                        "average TCAV scores over this many CAV draws (default 1)");

    CLI::App* project = app.add_subcommand("project", "2-D PCA projection of the embeddings");
    CommonFlags project_flags;
    project_flags.attach(project, root + "/run");
    std::string project_checkpoint = root + "/run/checkpoint_rnc.json";
    std::string project_dataset = root + "/dataset";
    std::string tag;
    std::string project_split = "test";
    project->add_option("--checkpoint", project_checkpoint, "trained checkpoint");
    project->add_option("--dataset", project_dataset, "dataset directory");
    project->add_option("--tag", tag,
                        "encoder tag (defaults to the checkpoint variant; 'random-init' "
                        "projects the untrained encoder re-derived from the checkpoint)")
        ->check(CLI::IsMember({"rnc-pretrained", "supervised-baseline", "random-init"}));
    project->add_option("--split", project_split, "which split to project")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));

    CLI::App* report = app.add_subcommand("report", "summarize a run directory as text");
    std::string report_run = root + "/run";
    std::string report_out;
    report->add_option("--run", report_run, "run directory with metrics/tcav outputs");
    report->add_option("--out", report_out, "report file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen_data->parsed()) {
            return cmd_gen_data(gen_data_flags,
                                n_opt->count() > 0 ? std::optional<std::uint64_t>(n_override)
                                                   : std::nullopt);
        }
        if (gen_concepts->parsed()) return cmd_gen_concepts(gen_concepts_flags);
        if (train->parsed()) return cmd_train(train_flags, train_dataset, with_baseline);
        if (explain->parsed())
            return cmd_explain(explain_flags, explain_checkpoint, explain_dataset,
                               explain_concepts, method, layers, cav_seeds);
        if (project->parsed())
            return cmd_project(project_flags, project_checkpoint, project_dataset, tag,
                               project_split);
        if (report->parsed()) {
            if (report_out.empty()) report_out = report_run + "/report.txt";
            return cmd_report(report_run, report_out);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
