// Acceptance suite: runs every gate the library must clear, printing one
// PASS/FAIL line per criterion and exiting nonzero if any fails. The
// end-to-end determinism criterion shells out to the command line binary
// (--cli <path>); intermediate artifacts go under --workdir.
//
//   acceptance --cli /path/to/ranklens [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ranklens/cav.hpp"
#include "ranklens/landcover.hpp"
#include "ranklens/metrics.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/rnc.hpp"
#include "ranklens/rng.hpp"
#include "ranklens/synth.hpp"
#include "ranklens/tcav.hpp"
#include "ranklens/train.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace ranklens;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %2d. %s: %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string round3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// ---- shared helpers -------------------------------------------------------

LinearHead random_head(std::size_t dim, Rng& rng) {
    LinearHead head;
    head.weights.resize(dim);
    for (double& w : head.weights) w = rng.uniform(-1.0, 1.0);
    head.bias = rng.uniform(-1.0, 1.0);
    return head;
}

// Input whose ReLU pre-activations all sit away from zero, so central
// differences see a smooth function.
std::vector<double> smooth_input(const MlpEncoder& enc, Rng& rng, double margin) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        std::vector<double> x(enc.input_dim());
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        std::vector<double> cur = x;
        bool ok = true;
        for (std::size_t l = 0; l < enc.layer_count() && ok; ++l) {
            const Layer& layer = enc.layer(l);
            std::vector<double> next(layer.output_dim());
            for (std::size_t o = 0; o < layer.output_dim() && ok; ++o) {
                double z = layer.bias[o];
                for (std::size_t i = 0; i < layer.input_dim(); ++i)
                    z += layer.weights(o, i) * cur[i];
                if (layer.activation == Activation::kReLU && std::abs(z) < margin) ok = false;
                next[o] = (layer.activation == Activation::kReLU && z < 0.0) ? 0.0 : z;
            }
            cur = std::move(next);
        }
        if (ok) return x;
    }
    throw std::runtime_error("no smooth input found");
}

RncBatch random_rnc_batch(Rng& rng, std::size_t m, std::size_t dim) {
    RncBatch batch;
    batch.embeddings = Matrix(m, dim);
    for (double& v : batch.embeddings.data) v = rng.uniform(-2.0, 2.0);
    batch.labels.resize(m);
    for (double& y : batch.labels) y = rng.uniform(-1.0, 1.0);
    return batch;
}

struct SeedRun {
    std::vector<Scene> dataset;
    MlpEncoder initial;
    MlpEncoder trained;
    LinearHead head;
    MetricsReport rnc_test;
    MetricsReport baseline_test;
    double order_before = 0.0;
    double order_after = 0.0;
    double pretrain_seconds = 0.0;
};

SeedRun run_pipeline(std::uint64_t seed) {
    SeedRun run;
    const GroundTruthModel model = GroundTruthModel::defaults();
    run.dataset = stratified_split(build_task_dataset(2000, model, derive_seed(seed, 1)), 5,
                                   {0.64, 0.16, 0.20}, derive_seed(seed, 2));
    TrainConfig cfg;
    cfg.seed = seed;
    run.initial = init_encoder(cfg.layer_sizes(run.dataset[0].feature_dim()),
                               derive_seed(seed, 3));

    run.order_before = latent_ordering_score(run.initial, run.dataset, Split::kTrain, 50,
                                             derive_seed(seed, 4));
    const auto t0 = Clock::now();
    PretrainResult pre = pretrain_rnc(run.initial, run.dataset, cfg);
    run.pretrain_seconds = seconds_since(t0);
    run.trained = std::move(pre.encoder);
    run.order_after = latent_ordering_score(run.trained, run.dataset, Split::kTrain, 50,
                                            derive_seed(seed, 4));

    const ProbeResult probe = train_probe(run.trained, run.dataset, cfg);
    run.head = probe.head;
    run.rnc_test = evaluate(run.trained, run.head, run.dataset, Split::kTest);

    const SupervisedResult sup = train_supervised(run.initial, run.dataset, cfg);
    run.baseline_test = evaluate(sup.encoder, sup.head, run.dataset, Split::kTest);
    return run;
}

std::vector<std::vector<Scene>> concept_sets(std::uint64_t seed, std::size_t per_concept) {
    std::vector<std::vector<Scene>> sets;
    for (const ConceptSpec& spec : default_concept_specs())
        sets.push_back(build_concept_set(spec, per_concept, seed));
    return sets;
}

std::vector<std::string> concept_names_list() {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kConceptCount; ++c)
        names.push_back(concept_name(static_cast<ConceptName>(c)));
    return names;
}

// ---- criteria -------------------------------------------------------------

void criterion_1_gradients() {
    const auto t0 = Clock::now();
    Rng rng(0xACC1);
    bool ok = true;
    std::ostringstream why;

    for (int trial = 0; trial < 50 && ok; ++trial) {
        const MlpEncoder enc = init_encoder({4, 6, 3}, rng.next_u64());
        const LinearHead head = random_head(3, rng);
        const std::vector<double> x = smooth_input(enc, rng, 1e-3);

        const std::vector<double> gi = grad_wrt_input(enc, head, x);
        for (std::size_t d = 0; d < x.size() && ok; ++d) {
            const double numeric = oracles::central_difference(
                [&](double v) {
                    std::vector<double> p = x;
                    p[d] = v;
                    return head_output(head, embed(enc, p));
                },
                x[d], 1e-5);
            if (oracles::relative_error(gi[d], numeric) > 1e-5) {
                ok = false;
                why << "input grad mismatch at trial " << trial;
            }
        }
        const std::vector<double> gl = grad_wrt_layer(enc, head, x, 0);
        const std::vector<double> a0 =
            forward(enc, Matrix::from_row(x)).layer_outputs[0].row_copy(0);
        for (std::size_t d = 0; d < a0.size() && ok; ++d) {
            const double numeric = oracles::central_difference(
                [&](double v) {
                    std::vector<double> p = a0;
                    p[d] = v;
                    return head_output(head, forward_from_layer(enc, 0, p));
                },
                a0[d], 1e-5);
            if (oracles::relative_error(gl[d], numeric) > 1e-5) {
                ok = false;
                why << "layer grad mismatch at trial " << trial;
            }
        }
    }

    for (int trial = 0; trial < 50 && ok; ++trial) {
        const std::size_t m = 3 + rng.uniform_index(6);
        const std::size_t dim = 1 + rng.uniform_index(4);
        const RncBatch batch = random_rnc_batch(rng, m, dim);
        const RncLossOutput out = rnc_loss(batch);
        for (std::size_t r = 0; r < m && ok; ++r) {
            for (std::size_t d = 0; d < dim && ok; ++d) {
                const double numeric = oracles::central_difference(
                    [&](double v) {
                        RncBatch p = batch;
                        p.embeddings(r, d) = v;
                        return rnc_loss(p).value;
                    },
                    batch.embeddings(r, d), 1e-6);
                if (oracles::relative_error(out.grad(r, d), numeric) > 1e-5) {
                    ok = false;
                    why << "rnc grad mismatch at trial " << trial;
                }
            }
        }
    }

    const double secs = seconds_since(t0);
    if (secs >= 10.0) {
        ok = false;
        why << " runtime " << secs << "s >= 10s";
    }
    std::ostringstream detail;
    detail << "50 encoder/head cases + 50 rnc batches vs central differences (rel 1e-5), "
           << std::fixed << secs << "s";
    report(1, "gradient-correctness", ok, ok ? detail.str() : why.str());
}

void criterion_2_rnc_oracle() {
    Rng rng(0xACC2);
    bool ok = true;
    std::ostringstream why;
    double max_diff = 0.0;

    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t m = 2 + rng.uniform_index(7);
        const std::size_t dim = 1 + rng.uniform_index(4);
        RncBatch batch = random_rnc_batch(rng, m, dim);
        if (trial % 10 == 9)  // exercise tied labels as well
            std::fill(batch.labels.begin(), batch.labels.end(), 0.25);
        const double got = rnc_loss(batch).value;
        const double want = oracles::rnc_brute_force(batch.embeddings, batch.labels, 2.0);
        max_diff = std::max(max_diff, std::abs(got - want));
        if (std::abs(got - want) > 1e-10) {
            ok = false;
            why << "mismatch " << std::abs(got - want) << " at trial " << trial;
        }
    }
    {
        RncBatch two = random_rnc_batch(rng, 2, 3);
        if (rnc_loss(two).value != 0.0) {
            ok = false;
            why << "; M=2 loss not exactly 0";
        }
    }
    std::ostringstream detail;
    detail << "100 batches (M<=8, ties included) vs brute-force enumeration, max diff "
           << max_diff << "; M=2 loss == 0";
    report(2, "rnc-oracle-equivalence", ok, ok ? detail.str() : why.str());
}

void criterion_3_rnc_invariances() {
    Rng rng(0xACC3);
    bool ok = true;
    std::ostringstream why;
    double worst = 0.0;
    for (int trial = 0; trial < 25 && ok; ++trial) {
        const RncBatch batch = random_rnc_batch(rng, 6, 3);
        const double base = rnc_loss(batch).value;

        RncBatch shifted = batch;
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t d = 0; d < 3; ++d)
                shifted.embeddings(r, d) += (d == 0 ? 7.5 : d == 1 ? -3.25 : 11.0);
        const double after_shift = rnc_loss(shifted).value;

        RncBatch relabeled = batch;
        const double a = rng.uniform(0.2, 5.0);
        const double b = rng.uniform(-4.0, 4.0);
        for (double& y : relabeled.labels) y = a * y + b;
        const double after_relabel = rnc_loss(relabeled).value;

        worst = std::max({worst, std::abs(after_shift - base), std::abs(after_relabel - base)});
        if (std::abs(after_shift - base) > 1e-9 || std::abs(after_relabel - base) > 1e-9) {
            ok = false;
            why << "invariance broken at trial " << trial << " (diff " << worst << ")";
        }
    }
    std::ostringstream detail;
    detail << "translation + positive affine relabeling on 25 batches, worst drift " << worst;
    report(3, "rnc-invariances", ok, ok ? detail.str() : why.str());
}

void criterion_4_latent_ordering(const std::vector<SeedRun>& runs) {
    int improved = 0;
    double max_secs = 0.0;
    std::ostringstream detail;
    for (const SeedRun& run : runs) {
        if (run.order_after > run.order_before) ++improved;
        max_secs = std::max(max_secs, run.pretrain_seconds);
        detail << round3(run.order_before) << "->" << round3(run.order_after)
               << " ";
    }
    const bool ok = improved >= 4 && max_secs < 120.0;
    std::ostringstream msg;
    msg << "anchor Kendall tau improved in " << improved << "/5 seeds (" << detail.str()
        << "), slowest pretraining " << max_secs << "s";
    report(4, "latent-ordering", ok, msg.str());
}

void criterion_5_probe_quality(const std::vector<SeedRun>& runs) {
    bool ok = true;
    std::ostringstream detail;
    for (const SeedRun& run : runs) {
        const bool seed_ok = run.rnc_test.r2 >= 0.8 && run.rnc_test.kendall_tau >= 0.7 &&
                             run.rnc_test.r2 >= run.baseline_test.r2 - 0.05;
        if (!seed_ok) ok = false;
        detail << "R2 " << round3(run.rnc_test.r2) << "/tau "
               << round3(run.rnc_test.kendall_tau) << " (base "
               << round3(run.baseline_test.r2) << ") ";
    }
    report(5, "probe-quality", ok, detail.str());
}

void criterion_6_metric_oracles() {
    Rng rng(0xACC6);
    bool ok = true;
    std::ostringstream why;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t n = 5 + rng.uniform_index(60);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng.uniform_index(6));  // ties likely
            y[i] = static_cast<double>(rng.uniform_index(6));
        }
        try {
            if (kendall_tau(x, y) != oracles::kendall_tau_recount(x, y)) {
                ok = false;
                why << "kendall mismatch at trial " << trial;
            }
        } catch (const std::domain_error&) {
            // fully tied draw; the oracle would divide by zero too
        }
    }
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(40);
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-2.0, 2.0);
            p[i] = rng.uniform(-2.0, 2.0);
        }
        double mean = 0.0;
        for (double v : y) mean += v / static_cast<double>(n);
        double ss_tot = 0.0, ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ss_tot += (y[i] - mean) * (y[i] - mean);
            ss_res += (y[i] - p[i]) * (y[i] - p[i]);
        }
        if (ss_tot == 0.0) continue;
        if (std::abs(r_squared(p, y) - (1.0 - ss_res / ss_tot)) > 1e-12) {
            ok = false;
            why << "r2 mismatch at trial " << trial;
        }
    }
    report(6, "metric-oracles", ok,
           ok ? "kendall tau-b exact vs pair recount (100 tied vectors); r2 vs hand SS to 1e-12"
              : why.str());
}

void criterion_7_cav_quality(const SeedRun& run) {
    const std::vector<std::string> names = concept_names_list();
    const std::vector<std::size_t> final_layer = {run.trained.layer_count() - 1};
    bool ok = true;
    std::ostringstream detail;
    for (std::uint64_t cav_seed = 1; cav_seed <= 3; ++cav_seed) {
        const std::vector<std::vector<Scene>> sets =
            concept_sets(derive_seed(0xC0C0, cav_seed), 200);
        const ConceptAccuracyTable trained = concept_accuracy_by_layer(
            run.trained, sets, names, final_layer, 500, {}, cav_seed);
        const ConceptAccuracyTable untrained = concept_accuracy_by_layer(
            run.initial, sets, names, final_layer, 500, {}, cav_seed);
        double mean_trained = 0.0, mean_untrained = 0.0;
        for (std::size_t c = 0; c < kConceptCount; ++c) {
            mean_trained += trained.at(c, 0) / static_cast<double>(kConceptCount);
            mean_untrained += untrained.at(c, 0) / static_cast<double>(kConceptCount);
        }
        if (!(mean_trained >= 0.90 && mean_trained >= mean_untrained)) ok = false;
        detail << round3(mean_trained) << " (init " << round3(mean_untrained)
               << ") ";
    }
    report(7, "cav-quality", ok,
           "final-layer mean holdout accuracy over 3 seeds: " + detail.str());
}

void criterion_8_tcav_correctness() {
    Rng rng(0xACC8);
    bool ok = true;
    std::ostringstream why;

    // Score equals brute-force positive counting, exactly.
    for (int trial = 0; trial < 50 && ok; ++trial) {
        std::vector<SensitivityRecord> recs;
        const std::size_t n = 1 + rng.uniform_index(30);
        std::size_t manual = 0;
        for (std::size_t i = 0; i < n; ++i) {
            SensitivityRecord r;
            const int kind = static_cast<int>(rng.uniform_index(3));
            r.value = (kind == 0) ? 0.0 : rng.uniform(-1.0, 1.0);
            if (r.value > 0.0) ++manual;
            recs.push_back(r);
        }
        if (tcav_score(recs).score !=
            static_cast<double>(manual) / static_cast<double>(n)) {
            ok = false;
            why << "score mismatch at trial " << trial;
        }
    }

    // Linear network: sensitivity is exactly w . v.
    for (int trial = 0; trial < 20 && ok; ++trial) {
        Layer l0;
        l0.weights = Matrix(4, 12);
        for (double& v : l0.weights.data) v = rng.uniform(-1.0, 1.0);
        l0.bias.assign(4, 0.0);
        l0.activation = Activation::kIdentity;
        Layer l1;
        l1.weights = Matrix::identity(4);
        l1.bias.assign(4, 0.0);
        l1.activation = Activation::kIdentity;
        const MlpEncoder enc({l0, l1});
        const LinearHead head = random_head(4, rng);
        std::vector<double> dir(4);
        for (double& v : dir) v = rng.uniform(-1.0, 1.0);
        const double norm = l2_norm(dir);
        for (double& v : dir) v /= norm;
        Cav cav;
        cav.concept_name = "c";
        cav.layer = 0;
        cav.direction = dir;
        Scene scene;
        scene.height = 2;
        scene.width = 2;
        scene.grid.resize(12);
        for (double& v : scene.grid) v = rng.uniform(0.0, 1.0);
        const double got = sensitivity_plain(enc, head, scene, cav).value;
        if (std::abs(got - oracles::dot_naive(head.weights, dir)) > 1e-12) {
            ok = false;
            why << "linear sensitivity mismatch at trial " << trial;
        }
    }

    // Directional finite difference of the Eq.-style limit.
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const MlpEncoder enc = init_encoder({12, 8, 3}, rng.next_u64());
        const LinearHead head = random_head(3, rng);
        Scene scene;
        scene.height = 2;
        scene.width = 2;
        scene.grid.resize(12);
        for (double& v : scene.grid) v = rng.uniform(0.0, 1.0);
        std::vector<double> dir(8);
        for (double& v : dir) v = rng.uniform(-1.0, 1.0);
        const double norm = l2_norm(dir);
        for (double& v : dir) v /= norm;
        Cav cav;
        cav.concept_name = "c";
        cav.layer = 0;
        cav.direction = dir;

        const double got = sensitivity_plain(enc, head, scene, cav).value;
        const std::vector<double> a =
            forward(enc, Matrix::from_row(scene.grid)).layer_outputs[0].row_copy(0);
        std::vector<double> shifted = a;
        const double eps = 1e-6;
        for (std::size_t d = 0; d < 8; ++d) shifted[d] += eps * dir[d];
        const double fd = (head_output(head, forward_from_layer(enc, 0, shifted)) -
                           head_output(head, forward_from_layer(enc, 0, a))) /
                          eps;
        const double scale = std::max({std::abs(got), std::abs(fd), 1e-10});
        if (std::abs(got - fd) / scale > 1e-4) {
            ok = false;
            why << "directional fd mismatch at trial " << trial;
        }
    }
    report(8, "tcav-correctness", ok,
           ok ? "score == positive count exactly; linear S == w.v to 1e-12; directional fd to "
                "rel 1e-4"
              : why.str());
}

void criterion_9_ig_properties() {
    Rng rng(0xACC9);
    bool ok = true;
    std::ostringstream why;
    double worst_rel = 0.0;

    for (int trial = 0; trial < 20 && ok; ++trial) {
        const MlpEncoder enc = init_encoder({12, 10, 4}, rng.next_u64());
        const LinearHead head = random_head(4, rng);
        Scene scene;
        scene.height = 2;
        scene.width = 2;
        scene.grid.resize(12);
        for (double& v : scene.grid) v = rng.uniform(0.0, 1.0);

        IgConfig ig;
        ig.steps = 200;
        const std::vector<double> attr = integrated_gradients_layer(enc, head, scene, 0, ig);
        double total = 0.0;
        for (double v : attr) total += v;
        const std::vector<double> a =
            forward(enc, Matrix::from_row(scene.grid)).layer_outputs[0].row_copy(0);
        const std::vector<double> a0 =
            forward(enc, Matrix::from_row(std::vector<double>(12, 0.0)))
                .layer_outputs[0]
                .row_copy(0);
        const double delta = head_output(head, forward_from_layer(enc, 0, a)) -
                             head_output(head, forward_from_layer(enc, 0, a0));
        if (std::abs(total - delta) > 1e-3 * std::abs(delta) + 1e-9) {
            ok = false;
            why << "completeness violated at trial " << trial << " (err "
                << std::abs(total - delta) << " vs " << delta << ")";
        }

        std::vector<double> dir(10);
        for (double& v : dir) v = rng.uniform(-1.0, 1.0);
        const double norm = l2_norm(dir);
        for (double& v : dir) v /= norm;
        Cav cav;
        cav.concept_name = "c";
        cav.layer = 0;
        cav.direction = dir;
        IgConfig coarse, fine;
        coarse.steps = 50;
        fine.steps = 500;
        const double s50 = sensitivity_ig(enc, head, scene, cav, coarse).value;
        const double s500 = sensitivity_ig(enc, head, scene, cav, fine).value;
        if (std::abs(s500) > 1e-12) {
            const double rel = std::abs(s50 - s500) / std::abs(s500);
            worst_rel = std::max(worst_rel, rel);
            if (rel > 0.01) {
                ok = false;
                why << "m=50 vs m=500 off by " << rel * 100.0 << "% at trial " << trial;
            }
        }
    }
    std::ostringstream detail;
    detail << "completeness at m=200 within 1e-3 rel; m=50 vs m=500 worst gap "
           << worst_rel * 100.0 << "%";
    report(9, "ig-properties", ok, ok ? detail.str() : why.str());
}

struct ExplainStats {
    double veg_score = 0.0;
    double imp_score = 0.0;
    double veg_top_quintile = 0.0;
    double veg_bottom_quintile = 0.0;
    double veg_aligned_mean_target = 0.0;
    double imp_aligned_mean_target = 0.0;
    bool alignment_defined = false;
};

ExplainStats explain_run(const SeedRun& run, std::uint64_t seed) {
    const std::vector<std::string> names = concept_names_list();
    const std::size_t final_layer = run.trained.layer_count() - 1;
    const std::vector<std::vector<Scene>> sets = concept_sets(derive_seed(seed, 0xC5), 200);
    const std::vector<Cav> cavs =
        train_all_cavs(run.trained, sets, names, {final_layer}, 500, {}, derive_seed(seed, 0xC6));

    std::vector<const Scene*> test_scenes;
    for (const Scene& s : run.dataset)
        if (s.split == Split::kTest) test_scenes.push_back(&s);

    ExplainStats stats;
    const Cav* veg = nullptr;
    const Cav* imp = nullptr;
    std::size_t veg_idx = 0, imp_idx = 0;
    for (std::size_t c = 0; c < cavs.size(); ++c) {
        if (cavs[c].concept_name == "vegetation") {
            veg = &cavs[c];
            veg_idx = c;
        }
        if (cavs[c].concept_name == "impervious_surface") {
            imp = &cavs[c];
            imp_idx = c;
        }
    }

    auto records_for = [&](const Cav& cav) {
        std::vector<SensitivityRecord> recs;
        recs.reserve(test_scenes.size());
        for (const Scene* s : test_scenes)
            recs.push_back(sensitivity_plain(run.trained, run.head, *s, cav));
        return recs;
    };
    std::vector<SensitivityRecord> veg_recs = records_for(*veg);
    std::vector<SensitivityRecord> imp_recs = records_for(*imp);
    stats.veg_score = tcav_score(veg_recs).score;
    stats.imp_score = tcav_score(imp_recs).score;

    const std::vector<SensitivityBin> veg_bins =
        profile_from_records(normalize_magnitudes(veg_recs), 5);
    stats.veg_bottom_quintile = veg_bins.front().mean_normalized;
    stats.veg_top_quintile = veg_bins.back().mean_normalized;

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < run.dataset.size(); ++i)
        if (run.dataset[i].split == Split::kTest) idx.push_back(i);
    const Matrix emb = embed_scenes(run.trained, run.dataset, idx);
    std::vector<std::uint64_t> ids(idx.size());
    std::vector<double> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        ids[i] = run.dataset[idx[i]].id;
        labels[i] = run.dataset[idx[i]].target;
    }
    const std::vector<AlignmentRecord> alignment = align_instances(emb, ids, labels, cavs);
    double veg_sum = 0.0, imp_sum = 0.0;
    std::size_t veg_n = 0, imp_n = 0;
    for (const AlignmentRecord& rec : alignment) {
        if (rec.best_concept == veg_idx) {
            veg_sum += rec.label;
            ++veg_n;
        } else if (rec.best_concept == imp_idx) {
            imp_sum += rec.label;
            ++imp_n;
        }
    }
    if (veg_n > 0 && imp_n > 0) {
        stats.alignment_defined = true;
        stats.veg_aligned_mean_target = veg_sum / static_cast<double>(veg_n);
        stats.imp_aligned_mean_target = imp_sum / static_cast<double>(imp_n);
    }
    return stats;
}

void criteria_10_11_sign_and_alignment(const std::vector<SeedRun>& runs) {
    int sign_ok = 0;
    int align_ok = 0;
    std::ostringstream sign_detail, align_detail;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const ExplainStats stats = explain_run(runs[i], 0xA110 + i);
        const bool signs = stats.veg_score > 0.5 && stats.imp_score < 0.5 &&
                           stats.veg_top_quintile >= stats.veg_bottom_quintile;
        if (signs) ++sign_ok;
        sign_detail << "[veg " << stats.veg_score << " imp " << stats.imp_score << " quintiles "
                    << round3(stats.veg_bottom_quintile) << ".."
                    << round3(stats.veg_top_quintile) << "] ";
        const bool align = stats.alignment_defined &&
                           stats.veg_aligned_mean_target > stats.imp_aligned_mean_target;
        if (align) ++align_ok;
        align_detail << "[" << round3(stats.veg_aligned_mean_target) << " vs "
                     << round3(stats.imp_aligned_mean_target) << "] ";
    }
    report(10, "tcav-sign-oracles", sign_ok >= 4,
           "veg>0.5, imp<0.5, top>=bottom quintile in " + std::to_string(sign_ok) +
               "/5 seeds: " + sign_detail.str());
    report(11, "alignment-oracle", align_ok >= 4,
           "vegetation-aligned mean target above impervious in " + std::to_string(align_ok) +
               "/5 seeds: " + align_detail.str());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path.string() + ">";
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void criterion_12_determinism(const std::string& cli, const fs::path& workdir) {
    if (cli.empty()) {
        report(12, "end-to-end-determinism", false, "no --cli path provided");
        return;
    }
    fs::remove_all(workdir);
    fs::create_directories(workdir);
    std::ofstream cfg(workdir / "run.cfg");
    cfg << "[dataset]\nn = 300\n[concepts]\nper_concept = 40\nnegatives = 120\n"
        << "[tcav]\nig_steps = 8\n[train]\npretrain_steps = 80\nprobe_epochs = 30\n"
        << "[run]\nseed = 5\n";
    cfg.close();

    auto run_once = [&](const std::string& tag) -> bool {
        const fs::path base = workdir / tag;
        const std::string cfg_arg = " --config " + (workdir / "run.cfg").string();
        const std::string steps[] = {
            "gen-data" + cfg_arg + " --out " + (base / "dataset").string(),
            "gen-concepts" + cfg_arg + " --out " + (base / "concepts").string(),
            "train" + cfg_arg + " --baseline --dataset " + (base / "dataset").string() +
                " --out " + (base / "run").string(),
            "explain" + cfg_arg + " --checkpoint " + (base / "run/checkpoint_rnc.json").string() +
                " --dataset " + (base / "dataset").string() + " --concepts " +
                (base / "concepts").string() + " --out " + (base / "run").string(),
        };
        for (const std::string& step : steps) {
            const std::string cmd = cli + " " + step + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) return false;
        }
        return true;
    };

    if (!run_once("a") || !run_once("b")) {
        report(12, "end-to-end-determinism", false, "a pipeline stage exited nonzero");
        return;
    }

    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(workdir / "a")) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const fs::path rel = fs::relative(entry.path(), workdir / "a");
        if (read_file(entry.path()) != read_file(workdir / "b" / rel)) {
            report(12, "end-to-end-determinism", false, "byte mismatch in " + rel.string());
            return;
        }
    }
    report(12, "end-to-end-determinism", files > 0,
           "gen-data -> train -> explain twice, " + std::to_string(files) +
               " files byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    fs::path workdir = fs::temp_directory_path() / "ranklens_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) cli = argv[++i];
        else if (arg == "--workdir" && i + 1 < argc) workdir = argv[++i];
        else {
            std::cerr << "usage: acceptance --cli PATH [--workdir DIR]\n";
            return 2;
        }
    }

    criterion_1_gradients();
    criterion_2_rnc_oracle();
    criterion_3_rnc_invariances();

    std::vector<SeedRun> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) runs.push_back(run_pipeline(seed));

    criterion_4_latent_ordering(runs);
    criterion_5_probe_quality(runs);
    criterion_6_metric_oracles();
    criterion_7_cav_quality(runs[0]);
    criterion_8_tcav_correctness();
    criterion_9_ig_properties();
    criteria_10_11_sign_and_alignment(runs);
    criterion_12_determinism(cli, workdir);

    if (g_failures == 0) {
        std::printf("all 12 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
