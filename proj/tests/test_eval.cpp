#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "midistega/binio.hpp"
#include "midistega/eval.hpp"
#include "midistega/midi_io.hpp"
#include "midistega/rng.hpp"
#include "test_util.hpp"

using namespace midistega;
using testutil::melody_from_symbols;

namespace {

// Scripted model: after n feeds the session hands out dists[min(n-1, last)].
class StubModel : public ConditionalModel {
public:
    explicit StubModel(std::vector<Distribution> dists) : dists_(std::move(dists)) {}

    std::unique_ptr<ModelSession> new_session() const override {
        struct Session : ModelSession {
            const StubModel* model;
            std::size_t fed = 0;
            void feed(MelodyEvent) override { ++fed; }
            Distribution next() override {
                if (fed == 0) throw std::invalid_argument("no context");
                return model->dists_[std::min(fed - 1, model->dists_.size() - 1)];
            }
        };
        auto s = std::make_unique<Session>();
        s->model = this;
        return s;
    }
    std::vector<std::uint16_t> start_notes() const override { return {62}; }

private:
    std::vector<Distribution> dists_;
};

Distribution uniform_over(const std::vector<std::uint16_t>& symbols) {
    Distribution d;
    for (auto s : symbols) d.entries.push_back({s, 1});
    sort_entries(d.entries);
    return d;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("rate report arithmetic") {
    const std::vector<std::uint64_t> notes = {16, 48};
    const std::vector<std::uint64_t> file_bits = {800, 1200};
    const std::vector<std::uint64_t> melody_bits = {32, 64};
    const std::vector<std::uint64_t> data_notes = {10, 22};
    const RateReport r = rate_report_from_parts(notes, file_bits, melody_bits, data_notes);
    CHECK(r.n_melodies == 2);
    CHECK(r.total_embedded_bits == 96);
    CHECK(r.mean_notes == doctest::Approx(32.0));
    CHECK(r.mean_bits_per_note == doctest::Approx(48.0 / 31.0));
    CHECK(r.mean_bits_per_data_note == doctest::Approx(3.0));
    CHECK(r.embedding_rate == doctest::Approx(96.0 / 2000.0));
}

TEST_CASE("rate report rejects bad input") {
    CHECK_THROWS_AS(rate_report_from_parts({}, {}, {}, {}), EmptyInput);
    CHECK_THROWS_AS(rate_report_from_parts({16}, {800, 900}, {32}, {}), std::invalid_argument);
}

TEST_CASE("a bundle with zero embedded bits has rate zero") {
    StegoBundle bundle;
    bundle.melodies.push_back(melody_from_symbols({62, 0, 0, 1}));
    bundle.embedded_bits = {0};
    bundle.data_notes = {0};
    const RateReport r = embedding_rate(std::span<const StegoBundle>(&bundle, 1));
    CHECK(r.embedding_rate == 0.0);
    CHECK(r.total_embedded_bits == 0);
}

TEST_CASE("embedding rate matches a by-hand recomputation") {
    const NGramModel model = testutil::small_ngram();
    StegoParams params;
    params.cps = 4;
    params.seed = 11;
    Rng rng(0x11);
    const StegoBundle bundle = embed(model, params, testutil::random_bytes(rng, 17));
    const RateReport r = embedding_rate(std::span<const StegoBundle>(&bundle, 1));

    std::uint64_t disk_bits = 0;
    for (const auto& m : bundle.melodies) disk_bits += render_midi(m).size() * 8;
    CHECK(r.total_embedded_bits == 32 + 17 * 8);
    CHECK(r.embedding_rate ==
          doctest::Approx(static_cast<double>(r.total_embedded_bits) /
                          static_cast<double>(disk_bits)));
    CHECK(r.mean_bits_per_data_note ==
          doctest::Approx(static_cast<double>(bundle.total_embedded_bits()) /
                          static_cast<double>(bundle.total_data_notes())));
    CHECK_THROWS_AS(embedding_rate({}), EmptyInput);
}

TEST_CASE("published-mean rate arithmetic stays near the reported figures") {
    struct Row {
        double k_bar, l_bar, b_bar, frozen, published_percent;
    };
    // Frozen recomputations of (L-1)k / 8B for the six published conditions.
    const Row rows[] = {
        {1.00, 147.9, 505.8, 0.036304, 3.7},
        {1.95, 146.3, 518.2, 0.068346, 6.9},
        {2.78, 146.9, 524.9, 0.096590, 9.7},
        {3.59, 160.5, 504.5, 0.141874, 14.3},
        {4.37, 139.5, 530.8, 0.142531, 14.4},
        {5.22, 141.8, 495.4, 0.185450, 18.7},
    };
    for (const Row& row : rows) {
        const double er = rate_from_published_means(row.k_bar, row.l_bar, row.b_bar);
        CHECK(er == doctest::Approx(row.frozen).epsilon(1e-4));
        CHECK(std::abs(er * 100.0 - row.published_percent) <= 0.3);
    }
    CHECK_THROWS_AS(rate_from_published_means(1.0, 100.0, 0.0), std::invalid_argument);
}

TEST_CASE("likelihood score analytic oracles") {
    SUBCASE("probability one-half everywhere scores ln 2") {
        const StubModel model({uniform_over({62, 64})});
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62, 62, 62})};
        const ScoreReport r = likelihood_score(model, seqs);
        CHECK(r.mean == doctest::Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(r.mean_base2 == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("probability one everywhere scores zero") {
        const StubModel model({uniform_over({62})});
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62, 62, 62, 62})};
        CHECK(likelihood_score(model, seqs).mean == doctest::Approx(0.0));
    }
    SUBCASE("three events at one-half then one-quarter") {
        const StubModel model({uniform_over({62, 64}), uniform_over({62, 64, 65, 66})});
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62, 62, 62})};
        const double want = (std::log(2.0) + std::log(4.0)) / 2.0;
        CHECK(likelihood_score(model, seqs).mean == doctest::Approx(want).epsilon(1e-9));
        CHECK(want == doctest::Approx(1.0397).epsilon(1e-3));
    }
    SUBCASE("events outside the support blow up to infinity") {
        const StubModel model({uniform_over({62})});
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62, 70})};
        CHECK(std::isinf(likelihood_score(model, seqs).mean));
    }
    SUBCASE("per-sequence scores average in order") {
        const StubModel model({uniform_over({62, 64})});
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62, 62}),
                                                  melody_from_symbols({62, 64, 64})};
        const ScoreReport r = likelihood_score(model, seqs);
        REQUIRE(r.per_sequence.size() == 2);
        CHECK(r.mean ==
              doctest::Approx((r.per_sequence[0] + r.per_sequence[1]) / 2.0));
    }
    SUBCASE("degenerate inputs") {
        const StubModel model({uniform_over({62})});
        CHECK_THROWS_AS(likelihood_score(model, {}), EmptyInput);
        const std::vector<MelodySequence> seqs = {melody_from_symbols({62})};
        CHECK_THROWS_AS(likelihood_score(model, seqs), SequenceTooShort);
    }
}

TEST_CASE("likelihood score is finite under the smoothed n-gram") {
    const NGramModel model = testutil::small_ngram();
    Rng rng(0x77);
    std::vector<MelodySequence> seqs;
    for (int i = 0; i < 5; ++i) seqs.push_back(testutil::random_valid_melody(rng, 24, 55, 67));
    const ScoreReport r = likelihood_score(model, seqs);
    for (double s : r.per_sequence) {
        CHECK(std::isfinite(s));
        CHECK(s > 0.0);
    }
    CHECK(r.mean_base2 == doctest::Approx(r.mean / std::log(2.0)));
}

TEST_CASE("abx set: clean-only layout") {
    const NGramModel model = testutil::small_ngram();
    testutil::TempDir dir("midistega-abx");
    const auto out = dir.path() / "set";
    const auto key = make_abx_set(model, {}, 0, 3, 99, out);
    REQUIRE(key.size() == 3);
    for (std::size_t i = 0; i < key.size(); ++i) {
        CHECK(key[i].label == "clean");
        CHECK(key[i].cps == 0);
        CHECK(std::filesystem::exists(out / "samples" / key[i].filename));
    }
    CHECK(key[0].filename == "sample_000.mid");
    CHECK(key[2].filename == "sample_002.mid");
    CHECK(std::filesystem::exists(out / "answer_key.csv"));
}

TEST_CASE("abx set: mixed layout, key consistency and determinism") {
    const NGramModel model = testutil::small_ngram();
    testutil::TempDir dir("midistega-abx2");
    StegoParams p2;
    p2.cps = 2;
    StegoParams p4;
    p4.cps = 4;
    const std::vector<StegoParams> params = {p2, p4};

    const auto out_a = dir.path() / "a";
    const auto key_a = make_abx_set(model, params, 4, 2, 1234, out_a);
    REQUIRE(key_a.size() == 6);

    int stego = 0, clean = 0, cps2 = 0, cps4 = 0;
    for (const auto& e : key_a) {
        if (e.label == "stego") {
            ++stego;
            if (e.cps == 2) ++cps2;
            if (e.cps == 4) ++cps4;
        } else {
            ++clean;
            CHECK(e.cps == 0);
        }
    }
    CHECK(stego == 4);
    CHECK(clean == 2);
    CHECK(cps2 == 2);
    CHECK(cps4 == 2);

    // The CSV mirrors the returned key exactly.
    std::string want_csv = "filename,label,cps\n";
    for (const auto& e : key_a)
        want_csv += e.filename + "," + e.label + "," + std::to_string(e.cps) + "\n";
    CHECK(slurp(out_a / "answer_key.csv") == want_csv);

    // Every sample parses back as a melody.
    for (const auto& e : key_a) {
        const auto bytes = read_file_bytes(out_a / "samples" / e.filename);
        CHECK(parse_and_extract(bytes, QuantizationConfig::lossless()).size() == 1);
    }

    // Same seed, fresh directory: bit-identical tree.
    const auto out_b = dir.path() / "b";
    const auto key_b = make_abx_set(model, params, 4, 2, 1234, out_b);
    REQUIRE(key_b.size() == key_a.size());
    for (std::size_t i = 0; i < key_a.size(); ++i) {
        CHECK(key_a[i].filename == key_b[i].filename);
        CHECK(key_a[i].label == key_b[i].label);
        CHECK(read_file_bytes(out_a / "samples" / key_a[i].filename) ==
              read_file_bytes(out_b / "samples" / key_b[i].filename));
    }
    CHECK(slurp(out_a / "answer_key.csv") == slurp(out_b / "answer_key.csv"));
}

TEST_CASE("abx set input validation") {
    const NGramModel model = testutil::small_ngram();
    testutil::TempDir dir("midistega-abx3");
    CHECK_THROWS_AS(make_abx_set(model, {}, -1, 0, 1, dir.path() / "x"), std::invalid_argument);
    CHECK_THROWS_AS(make_abx_set(model, {}, 1, 0, 1, dir.path() / "x"), std::invalid_argument);
    StegoParams bad;
    bad.cps = 1;
    const std::vector<StegoParams> params = {bad};
    CHECK_THROWS_AS(make_abx_set(model, params, 1, 0, 1, dir.path() / "x"),
                    std::invalid_argument);
    // Refuses to clobber an existing directory.
    const auto existing = dir.path() / "taken";
    std::filesystem::create_directories(existing);
    StegoParams ok;
    const std::vector<StegoParams> good = {ok};
    CHECK_THROWS_AS(make_abx_set(model, good, 1, 1, 1, existing), std::invalid_argument);
}
