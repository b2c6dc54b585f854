#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "arcus/error.hpp"
#include "arcus/pool.hpp"
#include "arcus/stream.hpp"
#include "oracles.hpp"

using namespace arcus;

namespace {

constexpr std::size_t kDim = 8;

ModelConfig small_model(std::uint64_t seed = 0) {
    ModelConfig mc;
    mc.latent_dim = 2;
    mc.hidden_layers = 2;
    mc.adam.learning_rate = 3e-2;
    mc.seed = seed;
    return mc;
}

PooledModel make_model(ModelId id, std::uint64_t seed, std::size_t n = 1) {
    auto ae = init_model(kDim, 2, 2, seed);
    OptimizerState opt(ae.param_count());
    return PooledModel{id, std::move(ae), std::move(opt), ScoreStats{0, 1, 0.5, 16}, n};
}

// Diagonal Gaussian concept: unit mean offset `mu`, larger spread on a
// concept-specific block of features.
Matrix concept_batch(int concept_id, std::size_t rows, std::mt19937_64& rng) {
    const double mu = concept_id == 0 ? -2.0 : 2.0;
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix x(rows, kDim);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < kDim; ++c) {
            const bool wide = c / 4 == static_cast<std::size_t>(concept_id);
            x(i, c) = mu + (wide ? 0.3 : 0.1) * n(rng);
        }
    }
    return x;
}

}  // namespace

TEST_CASE("pool reliability") {
    CHECK(pool_reliability(std::vector<double>{0.3}) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(pool_reliability(std::vector<double>{0.5, 0.5}) == 0.75);
    CHECK(pool_reliability(std::vector<double>{0.2, 1.0, 0.1}) == 1.0);
    CHECK_THROWS_AS(pool_reliability(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("pool reliability dominates every member and matches subset enumeration") {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 200; ++rep) {
        const auto r = oracle::random_vector(1 + rng() % 8, rng, 1e-6, 1.0);
        const double rp = pool_reliability(r);
        CHECK(rp >= *std::max_element(r.begin(), r.end()));
        CHECK(rp <= 1.0);
        CHECK(std::fabs(rp - oracle::pool_reliability(r)) < 1e-12);
    }
}

TEST_CASE("most reliable breaks ties by lowest id") {
    ModelPool pool(kDim, PoolConfig{}, small_model());
    pool.models().push_back(make_model(5, 1));
    pool.models().push_back(make_model(2, 2));
    pool.models().push_back(make_model(9, 3));
    CHECK(most_reliable(pool, std::vector<double>{0.1, 0.9, 0.3}) == 1);
    CHECK(most_reliable(pool, std::vector<double>{0.5, 0.4, 0.5}) == 0);
    CHECK(most_reliable(pool, std::vector<double>{0.5, 0.5, 0.5}) == 1);
    CHECK_THROWS_AS(most_reliable(pool, std::vector<double>{0.5}), DimensionError);
    pool.models().erase(pool.models().begin() + 1, pool.models().end());
    CHECK(most_reliable(pool, std::vector<double>{0.01}) == 0);
}

TEST_CASE("concept-driven scores with one fully reliable model are z-scores") {
    std::mt19937_64 rng(5);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    auto m = make_model(0, 4);
    const auto batch = oracle::random_matrix(20, kDim, rng);
    m.last_stats = compute_stats(reconstruction_scores(m.ae, batch));
    const auto z = standardize(reconstruction_scores(m.ae, batch));
    pool.models().push_back(m);
    const auto res = concept_driven_scores(pool, batch);
    CHECK(res.reliabilities == std::vector<double>{1.0});
    CHECK(res.scores == z);
}

TEST_CASE("duplicated model doubles the weighted z-scores") {
    std::mt19937_64 rng(6);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    auto m = make_model(0, 4);
    m.last_stats = ScoreStats{0.0, 3.0, 1.5, 20};
    pool.models().push_back(m);
    m.id = 1;
    pool.models().push_back(m);
    const auto batch = oracle::random_matrix(20, kDim, rng);
    const auto res = concept_driven_scores(pool, batch);
    const double r = res.reliabilities[0];
    CHECK(res.reliabilities[1] == r);
    const auto z = standardize(reconstruction_scores(m.ae, batch));
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(res.scores[i] == 2.0 * r * z[i]);
    }
}

TEST_CASE("concept-driven scores match the naive definition") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        for (auto mode : {InferenceMode::concept_driven, InferenceMode::single_model}) {
            PoolConfig pc;
            pc.inference_mode = mode;
            ModelPool pool(kDim, pc, small_model());
            for (ModelId id = 0; id < 2; ++id) {
                auto m = make_model(id, rng());
                oracle::randomize(m.ae, rng);
                const auto ref = oracle::random_vector(5, rng, 0.0, 2.0);
                m.last_stats = compute_stats(ref);
                pool.models().push_back(std::move(m));
            }
            const auto batch = oracle::random_matrix(5, kDim, rng, -2.0, 2.0);
            const auto got = concept_driven_scores(pool, batch);
            const auto want =
                oracle::concept_driven(pool.models(), batch, mode == InferenceMode::single_model);
            for (std::size_t i = 0; i < 2; ++i) {
                CHECK(std::fabs(got.reliabilities[i] - want.reliabilities[i]) < 1e-10);
            }
            for (std::size_t i = 0; i < 5; ++i) {
                CHECK(std::fabs(got.scores[i] - want.scores[i]) < 1e-10);
            }
        }
    }
}

TEST_CASE("reliability weight does not change the ranking of a single model") {
    std::mt19937_64 rng(8);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    auto m = make_model(0, 3);
    m.last_stats = ScoreStats{0.0, 0.2, 0.19, 30};
    pool.models().push_back(m);
    const auto batch = oracle::random_matrix(30, kDim, rng);
    const auto raw = reconstruction_scores(m.ae, batch);
    const auto res = concept_driven_scores(pool, batch);
    CHECK(res.reliabilities[0] < 1.0);
    std::vector<std::size_t> a(30), b(30);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    std::sort(a.begin(), a.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
    std::sort(b.begin(), b.end(), [&](auto i, auto j) { return res.scores[i] < res.scores[j]; });
    CHECK(a == b);
}

TEST_CASE("concept-driven scores reject a wrong width") {
    ModelPool pool(kDim, PoolConfig{}, small_model());
    CHECK_THROWS_AS(concept_driven_scores(pool, Matrix(4, kDim)), InvalidArgument);
    pool.models().push_back(make_model(0, 1));
    CHECK_THROWS_AS(concept_driven_scores(pool, Matrix(4, kDim + 1)), DimensionError);
}

TEST_CASE("CKA of fixed 4x2 matrices matches the HSIC double sum") {
    const auto z1 = Matrix::from_rows({{1, 0}, {0, 2}, {3, 1}, {-1, 1}});
    const auto z2 = Matrix::from_rows({{2, 1}, {1, 1}, {0, -2}, {4, 0.5}});
    CHECK(std::fabs(cka_similarity(z1, z2) - oracle::cka(z1, z2)) < 1e-9);
    CHECK(cka_similarity(z1, z1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CKA is symmetric, bounded, and invariant to rotation and scaling") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const auto z1 = oracle::random_matrix(12, 3, rng);
        const auto z2 = oracle::random_matrix(12, 2, rng);
        const double s = cka_similarity(z1, z2);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(std::fabs(s - cka_similarity(z2, z1)) < 1e-12);
        CHECK(std::fabs(s - oracle::cka(z1, z2)) < 1e-9);

        const double th = 0.1 * rep;
        Matrix rot(12, 2);
        for (std::size_t i = 0; i < 12; ++i) {
            rot(i, 0) = std::cos(th) * z2(i, 0) - std::sin(th) * z2(i, 1);
            rot(i, 1) = std::sin(th) * z2(i, 0) + std::cos(th) * z2(i, 1);
        }
        Matrix scaled = z1;
        for (double& v : scaled.values()) v *= 3.7;
        CHECK(std::fabs(cka_similarity(z1, rot) - s) < 1e-9);
        CHECK(std::fabs(cka_similarity(scaled, z2) - s) < 1e-9);
        CHECK(cka_similarity(z1, scaled) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("CKA preconditions") {
    const auto z = Matrix::from_rows({{1, 2}, {3, 4}, {5, 7}});
    CHECK_THROWS_AS(cka_similarity(z, Matrix(3, 2, 1.5)), DegenerateRepresentation);
    CHECK_THROWS_AS(cka_similarity(z, z.slice_rows(0, 2)), DimensionError);
    CHECK_THROWS_AS(cka_similarity(z.slice_rows(0, 1), z.slice_rows(1, 1)), InvalidArgument);
}

TEST_CASE("merge averages parameters by batch count") {
    auto a = make_model(0, 1, 1);
    auto b = make_model(1, 2, 3);
    std::fill(a.ae.parameters().begin(), a.ae.parameters().end(), 0.0);
    std::fill(b.ae.parameters().begin(), b.ae.parameters().end(), 1.0);
    const auto m = merge_models(a, b, 7);
    CHECK(m.id == 7);
    CHECK(m.num_batches == 4);
    for (double p : m.ae.parameters()) CHECK(p == 0.75);

    b.num_batches = 1;
    const auto even = merge_models(a, b, 8);
    for (double p : even.ae.parameters()) CHECK(p == 0.5);
}

TEST_CASE("merge matches a per-element oracle and is commutative") {
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 20; ++rep) {
        auto a = make_model(0, rng(), 2);
        auto b = make_model(1, rng(), 5);
        oracle::randomize(a.ae, rng);
        oracle::randomize(b.ae, rng);
        const auto m = merge_models(a, b, 2);
        const auto want = oracle::merged_parameters(a, b);
        const auto mb = merge_models(b, a, 3);
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(std::fabs(m.ae.parameters()[i] - want[i]) < 1e-12);
            CHECK(std::fabs(mb.ae.parameters()[i] - want[i]) < 1e-12);
        }
        CHECK(m.num_batches == 7);
    }
}

TEST_CASE("merging a model with itself keeps its parameters") {
    auto a = make_model(0, 3, 4);
    const auto m = merge_models(a, a, 1);
    CHECK(m.ae == a.ae);
    CHECK(m.num_batches == 8);
}

TEST_CASE("merge bookkeeping") {
    auto a = make_model(0, 1, 2);
    auto b = make_model(1, 2, 3);
    a.last_stats = ScoreStats{0, 1, 0.2, 16};
    b.last_stats = ScoreStats{0, 1, 0.7, 16};
    std::vector<double> g(a.ae.param_count(), 0.1);
    a.opt.apply(a.ae.parameters(), g);
    const auto m = merge_models(a, b, 4);
    CHECK(m.last_stats == b.last_stats);
    CHECK(m.opt.step() == 0);
    CHECK(merge_models(b, a, 5).last_stats == b.last_stats);
    b.num_batches = 2;
    CHECK(merge_models(a, b, 6).last_stats == a.last_stats);
    CHECK(merge_models(b, a, 7).last_stats == b.last_stats);

    auto wide = PooledModel{9, init_model(kDim, 3, 2, 0), OptimizerState(1), {}, 1};
    wide.opt = OptimizerState(wide.ae.param_count());
    CHECK_THROWS_AS(merge_models(a, wide, 10), DimensionError);
}

TEST_CASE("adapt: major update fires exactly when pool reliability falls below alpha") {
    std::mt19937_64 rng(11);
    const auto batch = concept_batch(0, 64, rng);
    PoolConfig pc;
    const double alpha = pc.alpha;
    for (double rp : {alpha + 1e-9, alpha, alpha - 1e-9}) {
        ModelPool pool(kDim, pc, small_model());
        pool.initialize(batch);
        const auto ev = adapt(pool, batch, std::vector<double>{rp});
        CHECK((ev.kind == EventKind::major) == (rp < alpha));
    }
    // Two members whose combined reliability sits just either side of alpha.
    for (double delta : {1e-9, -1e-9}) {
        const double r = 1.0 - std::sqrt(1.0 - (alpha + delta));
        ModelPool pool(kDim, pc, small_model());
        pool.initialize(batch);
        pool.models().push_back(pool.build_model(concept_batch(1, 64, rng)));
        const std::vector<double> rs{r, r};
        REQUIRE((pool_reliability(rs) < alpha) == (delta < 0));
        const auto ev = adapt(pool, batch, rs);
        CHECK((ev.kind == EventKind::major) == (delta < 0));
    }
}

TEST_CASE("adapt: minor update trains the most reliable model and refreshes its stats") {
    std::mt19937_64 rng(12);
    const auto b0 = concept_batch(0, 64, rng);
    const auto b1 = concept_batch(1, 64, rng);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    pool.initialize(b0);
    pool.models().push_back(pool.build_model(b1));
    const auto untouched = pool.models()[0];
    const auto b2 = concept_batch(1, 64, rng);
    const auto ev = adapt(pool, b2, std::vector<double>{0.2, 0.99});
    CHECK(ev.kind == EventKind::minor);
    CHECK(ev.model == pool.models()[1].id);
    CHECK(ev.pool_size == 2);
    const auto& m = pool.models()[1];
    CHECK(m.num_batches == 2);
    CHECK(m.last_stats == compute_stats(reconstruction_scores(m.ae, b2)));
    CHECK(pool.models()[0].ae == untouched.ae);
}

TEST_CASE("adapt: fully reliable single model gets a minor update, unreliable pool a major one") {
    std::mt19937_64 rng(13);
    const auto b0 = concept_batch(0, 64, rng);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    pool.initialize(b0);
    auto inf = concept_driven_scores(pool, b0);
    CHECK(inf.reliabilities[0] == 1.0);
    CHECK(adapt(pool, b0, inf.reliabilities).kind == EventKind::minor);
    CHECK(pool.size() == 1);

    const auto b1 = concept_batch(1, 64, rng);
    const auto ev = adapt(pool, b1, std::vector<double>{0.01});
    CHECK(ev.kind == EventKind::major);
    CHECK(pool.size() == 2);
    CHECK(ev.pool_size == 2);
    CHECK(pool.models().back().id == ev.model);
    CHECK(pool.models().back().num_batches == 1);
}

TEST_CASE("incremental update mode never creates models") {
    std::mt19937_64 rng(14);
    PoolConfig pc;
    pc.update_mode = UpdateMode::incremental;
    ModelPool pool(kDim, pc, small_model());
    pool.initialize(concept_batch(0, 64, rng));
    const auto ev = adapt(pool, concept_batch(1, 64, rng), std::vector<double>{1e-6});
    CHECK(ev.kind == EventKind::minor);
    CHECK(pool.size() == 1);
}

TEST_CASE("compact: dissimilar model grows the pool by one") {
    std::mt19937_64 rng(15);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    pool.initialize(concept_batch(0, 256, rng));
    const auto b1 = concept_batch(1, 256, rng);
    auto fresh = pool.build_model(b1);
    const auto stats = fresh.last_stats;
    const auto res = compact(pool, std::move(fresh), b1);
    CHECK(res.merged.empty());
    CHECK(pool.size() == 2);
    CHECK(pool.models().back().last_stats == stats);
}

TEST_CASE("compact: identical model is merged") {
    std::mt19937_64 rng(16);
    ModelPool pool(kDim, PoolConfig{}, small_model());
    const auto b0 = concept_batch(0, 128, rng);
    const auto id0 = pool.initialize(b0);
    auto twin = pool.models()[0];
    twin.id = pool.allocate_id();
    const auto res = compact(pool, twin, b0);
    CHECK(res.merged == std::vector<ModelId>{id0});
    REQUIRE(pool.size() == 1);
    const auto& m = pool.models()[0];
    CHECK(m.id == res.model);
    CHECK(m.ae == twin.ae);
    CHECK(m.num_batches == 2);
    CHECK(m.last_stats == compute_stats(reconstruction_scores(m.ae, b0)));
}

TEST_CASE("compact: survivors are all below gamma against the new model") {
    std::mt19937_64 rng(17);
    for (auto mode : {MergeMode::similarity, MergeMode::always, MergeMode::never}) {
        PoolConfig pc;
        pc.merge_mode = mode;
        ModelPool pool(kDim, pc, small_model(3));
        const auto batch = concept_batch(0, 256, rng);
        auto fresh = pool.build_model(batch);
        // Two slightly perturbed copies of the new model and one unrelated model.
        std::normal_distribution<double> jitter(0.0, 1e-3);
        for (int i = 0; i < 2; ++i) {
            auto near = fresh;
            near.id = pool.allocate_id();
            for (double& p : near.ae.parameters()) p += jitter(rng);
            pool.models().push_back(std::move(near));
        }
        pool.models().push_back(pool.build_model(concept_batch(1, 256, rng)));
        const auto res = compact(pool, std::move(fresh), batch);

        const auto& models = pool.models();
        const std::size_t k = pool.find(res.model);
        REQUIRE(k < models.size());
        switch (mode) {
            case MergeMode::never:
                CHECK(res.merged.empty());
                CHECK(models.size() == 4);
                break;
            case MergeMode::always:
                CHECK(models.size() == 1);
                break;
            case MergeMode::similarity:
                CHECK(res.merged.size() == 2);
                CHECK(models.size() == 2);
                for (std::size_t i = 0; i < models.size(); ++i) {
                    if (i == k) continue;
                    const auto z_new = oracle::latent(models[k].ae, batch);
                    const auto z_i = oracle::latent(models[i].ae, batch);
                    CHECK(oracle::cka(z_new, z_i) < pc.gamma);
                }
                break;
        }
    }
}

TEST_CASE("alternating concepts settle into a pool of two") {
    const std::size_t d = 16;
    auto concept_spec = [d](int c) {
        const double mu = c == 0 ? -2.0 : 2.0;
        ConceptSpec cs;
        cs.normal_mean.assign(d, mu);
        cs.normal_var.assign(d, 0.01);
        for (std::size_t k = 4 * static_cast<std::size_t>(c); k < 4 * static_cast<std::size_t>(c) + 4; ++k) {
            cs.normal_var[k] = 0.09;
        }
        cs.anomaly_mean.assign(d, mu / 2);
        cs.anomaly_var = cs.normal_var;
        return cs;
    };
    int settled = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        DriftScenario sc;
        sc.dim = d;
        sc.seed = 100 + s;
        sc.concepts = {concept_spec(0), concept_spec(1)};
        for (int i = 0; i < 6; ++i) {
            sc.schedule.push_back({static_cast<std::size_t>(i % 2), 4, Transition::abrupt});
        }
        ModelConfig mc;
        mc.latent_dim = 4;
        mc.hidden_layers = 3;
        mc.adam.learning_rate = 3e-2;
        mc.seed = s;
        DriftStreamSource src(sc);
        const auto run = run_prequential(src, PoolConfig{}, mc);
        // Both concepts have been seen once the second segment starts (batch 4).
        bool ok = true;
        for (std::size_t t = 0; t < run.scored_batches(); ++t) {
            if (run.batch_indices[t] >= 4 && run.pool_size[t] != 2) ok = false;
        }
        settled += ok;
    }
    CHECK(settled >= 4);
}
