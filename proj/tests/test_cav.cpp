#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ranklens/cav.hpp"
#include "ranklens/landcover.hpp"
#include "ranklens/mlp.hpp"
#include "ranklens/synth.hpp"
#include "ranklens/train.hpp"

using namespace ranklens;

namespace {

ConceptActivations gaussian_cloud(const std::string& name, double cx, double cy, double std_dev,
                                  std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ConceptActivations ca;
    ca.concept_name = name;
    ca.layer = 0;
    ca.activations = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        ca.activations(i, 0) = cx + std_dev * rng.gaussian();
        ca.activations(i, 1) = cy + std_dev * rng.gaussian();
        ca.scene_ids.push_back(i);
    }
    return ca;
}

std::vector<std::vector<Scene>> all_concept_sets(std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<Scene>> sets;
    for (const ConceptSpec& spec : default_concept_specs())
        sets.push_back(build_concept_set(spec, n, seed));
    return sets;
}

std::vector<std::string> all_concept_names() {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kConceptCount; ++c)
        names.push_back(concept_name(static_cast<ConceptName>(c)));
    return names;
}

}  // namespace

TEST(CollectActivations, ShapeAtFinalLayer) {
    const std::vector<Scene> water =
        build_concept_set(default_concept_spec(ConceptName::kWater), 200, 3);
    const MlpEncoder enc = init_encoder({water[0].feature_dim(), 32, 8}, 5);
    const ConceptActivations ca = collect_activations(enc, water, enc.layer_count() - 1, "water");
    EXPECT_EQ(ca.activations.rows, 200u);
    EXPECT_EQ(ca.activations.cols, 8u);
    EXPECT_EQ(ca.scene_ids.size(), 200u);
}

TEST(CollectActivations, IdentityEncoderReturnsInputs) {
    std::vector<Scene> scenes(3);
    for (std::size_t i = 0; i < 3; ++i) {
        scenes[i].id = i;
        scenes[i].height = 4;
        scenes[i].width = 4;
        scenes[i].grid.assign(48, 0.1 * static_cast<double>(i + 1));
    }
    Layer layer;
    layer.weights = Matrix::identity(48);
    layer.bias.assign(48, 0.0);
    layer.activation = Activation::kIdentity;
    const MlpEncoder enc({layer});
    const ConceptActivations ca = collect_activations(enc, scenes, 0);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(ca.activations.row_copy(i), scenes[i].grid);
}

TEST(CollectActivations, Deterministic) {
    const std::vector<Scene> water =
        build_concept_set(default_concept_spec(ConceptName::kWater), 20, 7);
    const MlpEncoder enc = init_encoder({water[0].feature_dim(), 16, 4}, 9);
    const ConceptActivations a = collect_activations(enc, water, 1);
    const ConceptActivations b = collect_activations(enc, water, 1);
    EXPECT_EQ(a.activations.data, b.activations.data);
}

TEST(CollectActivations, InvalidLayerThrows) {
    const std::vector<Scene> water =
        build_concept_set(default_concept_spec(ConceptName::kWater), 10, 7);
    const MlpEncoder enc = init_encoder({water[0].feature_dim(), 16, 4}, 9);
    EXPECT_THROW(collect_activations(enc, water, 2), std::invalid_argument);
}

TEST(SampleNegatives, ExactCountExcludesTarget) {
    std::vector<ConceptActivations> all;
    for (int c = 0; c < 7; ++c)
        all.push_back(gaussian_cloud("c" + std::to_string(c), c, 0.0, 1.0, 200, 11 + c));
    const ConceptActivations negs = sample_negatives(all, "c3", 500, 13);
    EXPECT_EQ(negs.activations.rows, 500u);
    EXPECT_FALSE(negs.shortfall);
    // No row may equal a row of the target concept; compare against the pool
    // membership by checking the mean is near the union of the other centers.
    for (std::size_t i = 0; i < negs.activations.rows; ++i)
        EXPECT_GT(std::abs(negs.activations(i, 0) - 3.0), 1e-12);
}

TEST(SampleNegatives, PoolShortfallTakesAll) {
    std::vector<ConceptActivations> all;
    all.push_back(gaussian_cloud("a", 0.0, 0.0, 1.0, 150, 17));
    all.push_back(gaussian_cloud("b", 5.0, 0.0, 1.0, 150, 19));
    all.push_back(gaussian_cloud("c", -5.0, 0.0, 1.0, 150, 23));
    const ConceptActivations negs = sample_negatives(all, "a", 500, 29);
    EXPECT_EQ(negs.activations.rows, 300u);
    EXPECT_TRUE(negs.shortfall);
}

TEST(SampleNegatives, DeterministicPerSeed) {
    std::vector<ConceptActivations> all;
    for (int c = 0; c < 4; ++c)
        all.push_back(gaussian_cloud("c" + std::to_string(c), c, 0.0, 1.0, 100, 31 + c));
    const ConceptActivations a = sample_negatives(all, "c0", 150, 37);
    const ConceptActivations b = sample_negatives(all, "c0", 150, 37);
    EXPECT_EQ(a.activations.data, b.activations.data);
    EXPECT_EQ(a.scene_ids, b.scene_ids);
    const ConceptActivations c = sample_negatives(all, "c0", 150, 38);
    EXPECT_NE(a.scene_ids, c.scene_ids);
}

TEST(SampleNegatives, EmptyPoolThrows) {
    std::vector<ConceptActivations> all;
    all.push_back(gaussian_cloud("only", 0.0, 0.0, 1.0, 50, 41));
    EXPECT_THROW(sample_negatives(all, "only", 10, 0), std::invalid_argument);
}

TEST(TrainCav, SeparatedGaussiansRecoverAxis) {
    const ConceptActivations pos = gaussian_cloud("pos", 5.0, 0.0, 0.5, 300, 43);
    const ConceptActivations neg = gaussian_cloud("neg", -5.0, 0.0, 0.5, 300, 47);
    const Cav cav = train_cav(pos, neg, {}, 1);
    EXPECT_GE(cav.holdout_accuracy, 0.99);
    EXPECT_GE(std::abs(cav.direction[0]), 0.95);
    EXPECT_GT(cav.direction[0], 0.0);  // oriented toward the concept
}

TEST(TrainCav, UnitNormWithinTolerance) {
    const ConceptActivations pos = gaussian_cloud("pos", 1.0, 2.0, 1.0, 100, 53);
    const ConceptActivations neg = gaussian_cloud("neg", -1.0, 0.0, 1.0, 100, 59);
    const Cav cav = train_cav(pos, neg, {}, 2);
    EXPECT_NEAR(l2_norm(cav.direction), 1.0, 1e-12);
}

TEST(TrainCav, ChanceLevelOnIdenticalDistributions) {
    double mean_acc = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ConceptActivations pos =
            gaussian_cloud("pos", 0.0, 0.0, 1.0, 200, 100 + 2 * seed);
        const ConceptActivations neg =
            gaussian_cloud("neg", 0.0, 0.0, 1.0, 200, 101 + 2 * seed);
        const Cav cav = train_cav(pos, neg, {}, seed);
        mean_acc += cav.holdout_accuracy / 20.0;
    }
    EXPECT_GE(mean_acc, 0.35);
    EXPECT_LE(mean_acc, 0.65);
}

TEST(TrainCav, LabelFlipNegatesDirection) {
    const ConceptActivations pos = gaussian_cloud("pos", 3.0, 1.0, 1.0, 150, 61);
    const ConceptActivations neg = gaussian_cloud("neg", -2.0, -1.0, 1.0, 150, 67);
    const Cav ab = train_cav(pos, neg, {}, 5);
    const Cav ba = train_cav(neg, pos, {}, 5);
    for (std::size_t d = 0; d < 2; ++d) EXPECT_NEAR(ab.direction[d], -ba.direction[d], 1e-9);
    EXPECT_NEAR(ab.holdout_accuracy, ba.holdout_accuracy, 1e-12);
}

TEST(TrainCav, DirectionInvariantUnderTranslation) {
    const ConceptActivations pos = gaussian_cloud("pos", 2.0, 0.5, 1.0, 150, 71);
    const ConceptActivations neg = gaussian_cloud("neg", -1.0, 1.5, 1.0, 150, 73);
    ConceptActivations pos_t = pos, neg_t = neg;
    for (std::size_t i = 0; i < pos_t.activations.rows; ++i) {
        pos_t.activations(i, 0) += 100.0;
        pos_t.activations(i, 1) -= 40.0;
    }
    for (std::size_t i = 0; i < neg_t.activations.rows; ++i) {
        neg_t.activations(i, 0) += 100.0;
        neg_t.activations(i, 1) -= 40.0;
    }
    const Cav base = train_cav(pos, neg, {}, 7);
    const Cav moved = train_cav(pos_t, neg_t, {}, 7);
    for (std::size_t d = 0; d < 2; ++d) EXPECT_NEAR(base.direction[d], moved.direction[d], 1e-6);
    EXPECT_NEAR(base.holdout_accuracy, moved.holdout_accuracy, 1e-12);
}

TEST(TrainCav, HoldoutDisjointFromTraining) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const detail::CavSplit split = detail::cav_holdout_split(123, 456, 0.2, seed);
        std::set<std::size_t> train(split.train_pos.begin(), split.train_pos.end());
        for (std::size_t i : split.hold_pos) EXPECT_EQ(train.count(i), 0u);
        EXPECT_EQ(train.size() + split.hold_pos.size(), 123u);
        std::set<std::size_t> train_n(split.train_neg.begin(), split.train_neg.end());
        for (std::size_t i : split.hold_neg) EXPECT_EQ(train_n.count(i), 0u);
        EXPECT_EQ(train_n.size() + split.hold_neg.size(), 456u);
    }
}

TEST(TrainCav, TooFewRowsThrows) {
    const ConceptActivations pos = gaussian_cloud("pos", 1.0, 0.0, 1.0, 11, 79);
    const ConceptActivations neg = gaussian_cloud("neg", -1.0, 0.0, 1.0, 100, 83);
    EXPECT_THROW(train_cav(pos, neg, {}, 0), std::invalid_argument);
}

TEST(TrainCav, LogisticLossAlsoSeparates) {
    const ConceptActivations pos = gaussian_cloud("pos", 4.0, 0.0, 0.5, 200, 89);
    const ConceptActivations neg = gaussian_cloud("neg", -4.0, 0.0, 0.5, 200, 97);
    CavTrainConfig config;
    config.loss = CavLoss::kLogistic;
    const Cav cav = train_cav(pos, neg, config, 3);
    EXPECT_GE(cav.holdout_accuracy, 0.99);
}

TEST(ConceptAccuracy, TrainedEncoderSeparatesConcepts) {
    GroundTruthModel model = GroundTruthModel::defaults();
    const std::vector<Scene> dataset = stratified_split(
        build_task_dataset(600, model, 101), 5, {0.64, 0.16, 0.20}, 103);
    TrainConfig cfg;
    cfg.seed = 107;
    cfg.pretrain_steps = 150;
    const MlpEncoder enc0 = init_encoder(cfg.layer_sizes(dataset[0].feature_dim()), 109);
    const MlpEncoder trained = pretrain_rnc(enc0, dataset, cfg).encoder;

    const std::vector<std::vector<Scene>> sets = all_concept_sets(120, 113);
    const std::vector<std::string> names = all_concept_names();
    const std::vector<std::size_t> final_layer = {trained.layer_count() - 1};

    const ConceptAccuracyTable trained_table =
        concept_accuracy_by_layer(trained, sets, names, final_layer, 300, {}, 127);
    const ConceptAccuracyTable untrained_table =
        concept_accuracy_by_layer(enc0, sets, names, final_layer, 300, {}, 127);

    ASSERT_EQ(trained_table.concepts.size(), 7u);
    ASSERT_EQ(trained_table.layers.size(), 1u);
    ASSERT_EQ(trained_table.accuracy.size(), 7u);

    double trained_mean = 0.0, untrained_mean = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
        trained_mean += trained_table.at(c, 0) / 7.0;
        untrained_mean += untrained_table.at(c, 0) / 7.0;
    }
    EXPECT_GE(trained_mean, 0.90);
    EXPECT_GE(trained_mean, untrained_mean - 1e-12);
}

TEST(ConceptAccuracy, TableShapeAcrossLayers) {
    const std::vector<std::vector<Scene>> sets = all_concept_sets(60, 131);
    const std::vector<std::string> names = all_concept_names();
    const MlpEncoder enc = init_encoder({sets[0][0].feature_dim(), 24, 24, 6}, 137);
    const std::vector<std::size_t> layers = {0, 1, 2};
    const ConceptAccuracyTable table =
        concept_accuracy_by_layer(enc, sets, names, layers, 200, {}, 139);
    EXPECT_EQ(table.concepts.size(), 7u);
    EXPECT_EQ(table.layers.size(), 3u);
    EXPECT_EQ(table.accuracy.size(), 21u);
    for (double a : table.accuracy) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
    }
}

TEST(ConceptAccuracy, DeterministicPerSeed) {
    const std::vector<std::vector<Scene>> sets = all_concept_sets(60, 149);
    const std::vector<std::string> names = all_concept_names();
    const MlpEncoder enc = init_encoder({sets[0][0].feature_dim(), 16, 4}, 151);
    const std::vector<Cav> a = train_all_cavs(enc, sets, names, {1}, 200, {}, 157);
    const std::vector<Cav> b = train_all_cavs(enc, sets, names, {1}, 200, {}, 157);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].direction, b[i].direction);
        EXPECT_EQ(a[i].holdout_accuracy, b[i].holdout_accuracy);
    }
}
