#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "mseg/classify.hpp"

using namespace mseg;

namespace {

FeatureVector fv(double moy, double variance = 0, double energy = 0, double contrast = 0,
                 double entropy = 0, double homogeneity = 0) {
    return {moy, variance, energy, contrast, entropy, homogeneity};
}

std::vector<LabelledSample> random_samples(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> value(0.0, 100.0);
    std::uniform_int_distribution<int> label(0, kAcrClassCount - 1);
    std::vector<LabelledSample> out;
    for (int i = 0; i < n; ++i)
        out.push_back({fv(value(rng), value(rng), value(rng), value(rng), value(rng), value(rng)),
                       static_cast<AcrLabel>(label(rng))});
    return out;
}

}  // namespace

TEST_CASE("knn: unanimous vote over duplicated points") {
    std::vector<LabelledSample> samples(7, {fv(1, 2, 3, 4, 5, 6), AcrLabel::ACR2});
    samples.push_back({fv(90, 90, 90, 90, 90, 90), AcrLabel::ACR5});
    const TrainingSet train = TrainingSet::fit(samples);
    CHECK(knn_classify(train, fv(1, 2, 3, 4, 5, 6), 7) == AcrLabel::ACR2);
}

TEST_CASE("knn: k=1 returns the label of the exact match") {
    std::mt19937 rng(8);
    const auto samples = random_samples(rng, 20);
    const TrainingSet train = TrainingSet::fit(samples);
    for (const auto& s : samples)
        CHECK(knn_classify(train, s.features, 1) == s.label);
}

TEST_CASE("knn: strict majority 4 vs 3 within k=7") {
    std::vector<LabelledSample> samples;
    for (int i = 0; i < 4; ++i) samples.push_back({fv(10 + 0.1 * i), AcrLabel::ACR3});
    for (int i = 0; i < 3; ++i) samples.push_back({fv(11 + 0.1 * i), AcrLabel::ACR5});
    samples.push_back({fv(99), AcrLabel::ACR1});  // outside the k=7 neighbourhood
    const TrainingSet train = TrainingSet::fit(samples);
    CHECK(knn_classify(train, fv(10.5), 7) == AcrLabel::ACR3);
}

TEST_CASE("knn: vote tie goes to the class of the nearest tied member") {
    std::vector<LabelledSample> samples;
    samples.push_back({fv(10.0), AcrLabel::ACR4});
    samples.push_back({fv(11.0), AcrLabel::ACR2});
    samples.push_back({fv(13.0), AcrLabel::ACR4});
    samples.push_back({fv(14.0), AcrLabel::ACR2});
    const TrainingSet train = TrainingSet::fit(samples);
    // query at 10.4: order is ACR4(10), ACR2(11), ACR4(13), ACR2(14): 2-2 tie
    CHECK(knn_classify(train, fv(10.4), 4) == AcrLabel::ACR4);
}

TEST_CASE("knn rejects bad k") {
    const TrainingSet train = TrainingSet::fit({{fv(1), AcrLabel::ACR1}});
    CHECK_THROWS_AS(knn_classify(train, fv(1), 0), config_error);
    CHECK_THROWS_AS(knn_classify(train, fv(1), 2), config_error);
    CHECK_THROWS_AS(TrainingSet::fit({}), degenerate_input);
}

TEST_CASE("knn label is invariant under a common positive feature rescaling") {
    std::mt19937 rng(44);
    for (double scale : {0.001, 0.7, 42.0, 5000.0}) {
        const auto samples = random_samples(rng, 30);
        auto scaled = samples;
        for (auto& s : scaled) {
            auto a = s.features.to_array();
            for (double& v : a) v *= scale;
            s.features = FeatureVector::from_array(a);
        }
        const TrainingSet base = TrainingSet::fit(samples);
        const TrainingSet rescaled = TrainingSet::fit(scaled);
        std::uniform_real_distribution<double> value(0.0, 100.0);
        for (int q = 0; q < 20; ++q) {
            std::array<double, 6> qa{};
            for (double& v : qa) v = value(rng);
            auto qs = qa;
            for (double& v : qs) v *= scale;
            CHECK(knn_classify(base, FeatureVector::from_array(qa), 5) ==
                  knn_classify(rescaled, FeatureVector::from_array(qs), 5));
        }
    }
}

TEST_CASE("normalization clamps test vectors into the unit box") {
    const TrainingSet train =
        TrainingSet::fit({{fv(0, 0, 0, 0, 0, 0), AcrLabel::ACR1}, {fv(10, 1, 1, 1, 1, 1), AcrLabel::ACR2}});
    const auto n = train.normalize(fv(-5, 2, 0.5, 1, 0.25, 3));
    CHECK(n[0] == 0.0);   // below min
    CHECK(n[1] == 1.0);   // above max
    CHECK(n[2] == Approx(0.5));
}

TEST_CASE("mlp analytic gradients match central finite differences") {
    std::vector<LabelledSample> samples{{fv(0.2, 0.8, 0.1, 0.5, 0.9, 0.3), AcrLabel::ACR1},
                                        {fv(0.9, 0.2, 0.7, 0.1, 0.4, 0.6), AcrLabel::ACR3},
                                        {fv(0.5, 0.5, 0.5, 0.9, 0.1, 0.8), AcrLabel::ACR5}};
    const TrainingSet train = TrainingSet::fit(samples);

    MlpModel model;
    model.hidden = 12;
    model.w1.resize(12 * 6);
    model.b1.resize(12);
    model.w2.resize(5 * 12);
    model.b2.resize(5);
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < model.parameter_count(); ++i)
        *model.parameter(i) = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);

    const auto analytic = mlp_gradients(model, train.samples());
    REQUIRE(analytic.size() == model.parameter_count());

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < model.parameter_count(); ++i) {
        MlpModel plus = model, minus = model;
        *plus.parameter(i) += h;
        *minus.parameter(i) -= h;
        const double fd =
            (mlp_loss(plus, train.samples()) - mlp_loss(minus, train.samples())) / (2.0 * h);
        const double rel =
            std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("mlp fits a linearly separable two-class set") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> lo(0.0, 0.3), hi(0.7, 1.0), noise(0.0, 1.0);
    std::vector<LabelledSample> samples;
    for (int i = 0; i < 20; ++i)
        samples.push_back({fv(lo(rng), noise(rng), noise(rng), noise(rng), noise(rng), noise(rng)),
                           AcrLabel::ACR1});
    for (int i = 0; i < 20; ++i)
        samples.push_back({fv(hi(rng), noise(rng), noise(rng), noise(rng), noise(rng), noise(rng)),
                           AcrLabel::ACR2});
    const TrainingSet train = TrainingSet::fit(samples);

    MlpHyper hyper;
    hyper.epochs = 2000;
    hyper.learning_rate = 0.5;
    hyper.seed = 5;
    std::vector<double> losses;
    const MlpModel model = mlp_train(train, hyper, &losses);

    int correct = 0;
    for (const auto& s : train.samples())
        correct += mlp_classify(model, s.features) == s.label;
    CHECK(correct >= 38);  // >= 95% of 40

    for (std::size_t i = 1; i < losses.size(); ++i) REQUIRE(losses[i] <= losses[i - 1] + 1e-6);
}

TEST_CASE("mlp training is deterministic in the seed") {
    std::mt19937 rng(13);
    const TrainingSet train = TrainingSet::fit(random_samples(rng, 25));
    MlpHyper hyper;
    hyper.epochs = 50;
    const MlpModel a = mlp_train(train, hyper);
    const MlpModel b = mlp_train(train, hyper);
    CHECK(a.w1 == b.w1);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b2 == b.b2);

    MlpHyper other = hyper;
    other.seed = 2;
    const MlpModel c = mlp_train(train, other);
    CHECK(a.w1 != c.w1);
}

TEST_CASE("mlp argmax ties resolve to the lower ACR index") {
    MlpModel zero;
    zero.w1.assign(12 * 6, 0.0);
    zero.b1.assign(12, 0.0);
    zero.w2.assign(5 * 12, 0.0);
    zero.b2.assign(5, 0.0);
    zero.feature_min.fill(0.0);
    zero.feature_max.fill(1.0);
    CHECK(mlp_classify(zero, fv(0.3, 0.3, 0.3, 0.3, 0.3, 0.3)) == AcrLabel::ACR1);

    MlpModel biased = zero;
    biased.b2[1] = 5.0;  // softmax peaks at ACR2
    CHECK(mlp_classify(biased, fv(0.3, 0.3, 0.3, 0.3, 0.3, 0.3)) == AcrLabel::ACR2);

    MlpModel bad = zero;
    bad.w1.resize(7);
    CHECK_THROWS_AS(mlp_classify(bad, fv(0)), config_error);
}

TEST_CASE("evaluate: the worked accuracy examples") {
    using P = std::pair<AcrLabel, AcrLabel>;
    std::vector<P> all_correct;
    for (int c = 0; c < 5; ++c)
        all_correct.emplace_back(static_cast<AcrLabel>(c), static_cast<AcrLabel>(c));
    const EvalReport perfect = evaluate(all_correct);
    CHECK(perfect.overall == Approx(1.0));
    for (double a : perfect.per_class) CHECK(a == Approx(1.0));

    std::vector<P> all_acr1;
    for (int c = 0; c < 5; ++c) all_acr1.emplace_back(AcrLabel::ACR1, static_cast<AcrLabel>(c));
    CHECK(evaluate(all_acr1).overall == Approx(0.2));

    std::vector<P> three_of_five = {{AcrLabel::ACR1, AcrLabel::ACR1},
                                    {AcrLabel::ACR2, AcrLabel::ACR2},
                                    {AcrLabel::ACR3, AcrLabel::ACR3},
                                    {AcrLabel::ACR4, AcrLabel::ACR5},
                                    {AcrLabel::ACR5, AcrLabel::ACR4}};
    CHECK(evaluate(three_of_five).overall == Approx(0.6));

    CHECK_THROWS_AS(evaluate({}), degenerate_input);
}

TEST_CASE("overall accuracy is the truth-count weighted mean of per-class accuracies") {
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> label(0, 4);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::pair<AcrLabel, AcrLabel>> pairs;
        const int n = 1 + static_cast<int>(rng() % 200);
        for (int i = 0; i < n; ++i)
            pairs.emplace_back(static_cast<AcrLabel>(label(rng)), static_cast<AcrLabel>(label(rng)));
        const EvalReport r = evaluate(pairs);
        double weighted = 0.0;
        for (int c = 0; c < kAcrClassCount; ++c) weighted += r.per_class[c] * r.truth_counts[c];
        CHECK(r.overall == Approx(weighted / n));

        // confusion matrix row sums equal the truth counts
        for (int c = 0; c < kAcrClassCount; ++c) {
            int row = 0;
            for (int p = 0; p < kAcrClassCount; ++p) row += r.confusion[c][p];
            CHECK(row == r.truth_counts[c]);
        }
    }
}

TEST_CASE("mlp model round-trips through the text format") {
    std::mt19937 rng(31);
    const TrainingSet train = TrainingSet::fit(random_samples(rng, 15));
    MlpHyper hyper;
    hyper.epochs = 20;
    const MlpModel model = mlp_train(train, hyper);

    std::ostringstream out;
    save_mlp(model, out);
    std::istringstream in(out.str());
    const MlpModel back = load_mlp(in);
    CHECK(back.w1 == model.w1);
    CHECK(back.b1 == model.b1);
    CHECK(back.w2 == model.w2);
    CHECK(back.b2 == model.b2);
    CHECK(back.feature_min == model.feature_min);
    CHECK(back.feature_max == model.feature_max);

    std::istringstream junk("not a model");
    CHECK_THROWS_AS(load_mlp(junk), format_error);
}
