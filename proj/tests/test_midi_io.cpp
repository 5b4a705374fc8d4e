#include <cstdint>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "midistega/binio.hpp"
#include "midistega/midi_io.hpp"
#include "midistega/rng.hpp"
#include "test_util.hpp"

using namespace midistega;
using testutil::melody_from_symbols;
using testutil::symbols_of;

namespace {

using Bytes = std::vector<std::uint8_t>;

void u32be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void u16be(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

Bytes smf(std::uint16_t format, std::uint16_t division, const std::vector<Bytes>& tracks) {
    Bytes out;
    u32be(out, 0x4D546864u);
    u32be(out, 6);
    u16be(out, format);
    u16be(out, static_cast<std::uint16_t>(tracks.size()));
    u16be(out, division);
    for (const Bytes& t : tracks) {
        u32be(out, 0x4D54726Bu);
        u32be(out, static_cast<std::uint32_t>(t.size()));
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

const QuantizationConfig kLoose = QuantizationConfig::lossless();

}  // namespace

TEST_CASE("single C4 quarter note parses to [62,0,0,0,1]") {
    // division 480, 4 steps per quarter -> 120 ticks per step. Note on at 0,
    // off at 480, end-of-track one step later so the release step exists.
    Bytes track = {
        0x00, 0x90, 0x3C, 0x64,        // on, pitch 60
        0x83, 0x60, 0x80, 0x3C, 0x40,  // delta 480, off
        0x78, 0xFF, 0x2F, 0x00,        // delta 120, end of track
    };
    auto melodies = parse_and_extract(smf(0, 480, {track}), kLoose);
    REQUIRE(melodies.size() == 1);
    CHECK(symbols_of(melodies[0]) == std::vector<std::uint16_t>{62, 0, 0, 0, 1});
    CHECK(melodies[0].steps_per_quarter == 4);
    CHECK(melodies[0].valid());
}

TEST_CASE("file with zero note events yields no melodies") {
    Bytes track = {
        0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20,  // tempo meta
        0x00, 0xFF, 0x2F, 0x00,
    };
    CHECK(parse_and_extract(smf(0, 480, {track}), kLoose).empty());
}

TEST_CASE("bytes not starting with MThd raise MalformedMidi") {
    Bytes junk = {'R', 'I', 'F', 'F', 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(parse_and_extract(junk, kLoose), MalformedMidi);
    CHECK_THROWS_AS(parse_and_extract(Bytes{}, kLoose), MalformedMidi);
}

TEST_CASE("format 2 and SMPTE division are unsupported") {
    Bytes track = {0x00, 0xFF, 0x2F, 0x00};
    CHECK_THROWS_AS(parse_and_extract(smf(2, 480, {track}), kLoose), UnsupportedFormat);
    CHECK_THROWS_AS(parse_and_extract(smf(0, 0xE250, {track}), kLoose), UnsupportedFormat);
}

TEST_CASE("structural damage raises MalformedMidi") {
    SUBCASE("truncated variable-length delta") {
        Bytes track = {0x81};  // continuation bit set, nothing follows
        CHECK_THROWS_AS(parse_and_extract(smf(0, 480, {track}), kLoose), MalformedMidi);
    }
    SUBCASE("five-byte variable-length quantity") {
        Bytes track = {0x81, 0x81, 0x81, 0x81, 0x01, 0xFF, 0x2F, 0x00};
        CHECK_THROWS_AS(parse_and_extract(smf(0, 480, {track}), kLoose), MalformedMidi);
    }
    SUBCASE("track chunk shorter than declared") {
        Bytes file = smf(0, 480, {{0x00, 0xFF, 0x2F, 0x00}});
        file.resize(file.size() - 2);
        CHECK_THROWS_AS(parse_and_extract(file, kLoose), MalformedMidi);
    }
    SUBCASE("data byte with no running status") {
        Bytes track = {0x00, 0x3C, 0x64, 0x00, 0xFF, 0x2F, 0x00};
        CHECK_THROWS_AS(parse_and_extract(smf(0, 480, {track}), kLoose), MalformedMidi);
    }
    SUBCASE("zero division") {
        Bytes track = {0x00, 0xFF, 0x2F, 0x00};
        CHECK_THROWS_AS(parse_and_extract(smf(0, 0, {track}), kLoose), MalformedMidi);
    }
}

TEST_CASE("note-on with velocity zero releases the note") {
    Bytes track = {
        0x00, 0x90, 0x3C, 0x64,        //
        0x83, 0x60, 0x90, 0x3C, 0x00,  // velocity-0 off at 480
        0x78, 0xFF, 0x2F, 0x00,
    };
    auto melodies = parse_and_extract(smf(0, 480, {track}), kLoose);
    REQUIRE(melodies.size() == 1);
    CHECK(symbols_of(melodies[0]) == std::vector<std::uint16_t>{62, 0, 0, 0, 1});
}

TEST_CASE("running status is honored") {
    Bytes track = {
        0x00, 0x90, 0x3C, 0x64,  // explicit status
        0x83, 0x60, 0x3C, 0x00,  // running status: same 0x90, velocity 0
        0x78, 0xFF, 0x2F, 0x00,
    };
    auto melodies = parse_and_extract(smf(0, 480, {track}), kLoose);
    REQUIRE(melodies.size() == 1);
    CHECK(symbols_of(melodies[0]) == std::vector<std::uint16_t>{62, 0, 0, 0, 1});
}

TEST_CASE("overlapping notes keep the highest pitch") {
    SUBCASE("later higher note truncates the current one") {
        Bytes track = {
            0x00, 0x90, 0x3C, 0x64,        // 60 on at 0
            0x81, 0x70, 0x90, 0x48, 0x64,  // 72 on at 240
            0x81, 0x70, 0x80, 0x3C, 0x40,  // 60 off at 480
            0x81, 0x70, 0x80, 0x48, 0x40,  // 72 off at 720
            0x78, 0xFF, 0x2F, 0x00,        // end at 840
        };
        auto melodies = parse_and_extract(smf(0, 480, {track}), kLoose);
        REQUIRE(melodies.size() == 1);
        CHECK(symbols_of(melodies[0]) == std::vector<std::uint16_t>{62, 0, 74, 0, 0, 0, 1});
    }
    SUBCASE("simultaneous onsets drop the lower pitch") {
        Bytes track = {
            0x00, 0x90, 0x3C, 0x64,        //
            0x00, 0x90, 0x40, 0x64,        // 64 on at the same tick
            0x83, 0x60, 0x80, 0x3C, 0x40,  //
            0x00, 0x80, 0x40, 0x40,        //
            0x78, 0xFF, 0x2F, 0x00,
        };
        auto melodies = parse_and_extract(smf(0, 480, {track}), kLoose);
        REQUIRE(melodies.size() == 1);
        CHECK(symbols_of(melodies[0]) == std::vector<std::uint16_t>{66, 0, 0, 0, 1});
    }
}

TEST_CASE("format 1 gives one melody per qualifying track") {
    Bytes note_track = {
        0x00, 0x90, 0x3C, 0x64, 0x83, 0x60, 0x80, 0x3C, 0x40, 0x78, 0xFF, 0x2F, 0x00,
    };
    Bytes empty_track = {0x00, 0xFF, 0x2F, 0x00};
    auto melodies = parse_and_extract(smf(1, 480, {empty_track, note_track, note_track}), kLoose);
    CHECK(melodies.size() == 2);
}

TEST_CASE("min_melody_events filters short tracks") {
    Bytes track = {
        0x00, 0x90, 0x3C, 0x64, 0x83, 0x60, 0x80, 0x3C, 0x40, 0x78, 0xFF, 0x2F, 0x00,
    };
    QuantizationConfig cfg;  // default min_melody_events = 8
    CHECK(parse_and_extract(smf(0, 480, {track}), cfg).empty());
    cfg.min_melody_events = 5;
    CHECK(parse_and_extract(smf(0, 480, {track}), cfg).size() == 1);
}

TEST_CASE("pitch range filter drops out-of-range notes") {
    Bytes track = {
        0x00, 0x90, 0x18, 0x64,  // pitch 24
        0x83, 0x60, 0x80, 0x18, 0x40, 0x78, 0xFF, 0x2F, 0x00,
    };
    QuantizationConfig cfg{4, 1, 40, 90};
    CHECK(parse_and_extract(smf(0, 480, {track}), cfg).empty());
}

TEST_CASE("render emits a parseable format-0 file") {
    const MelodySequence m = melody_from_symbols({62, 0, 0, 0, 1});
    const auto bytes = render_midi(m, 120.0, 0);
    REQUIRE(bytes.size() > 22);
    CHECK(bytes[0] == 'M');
    CHECK(bytes[1] == 'T');
    CHECK(bytes[2] == 'h');
    CHECK(bytes[3] == 'd');
    auto parsed = parse_and_extract(bytes, kLoose);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == m);
}

TEST_CASE("render closes a dangling note at end of track") {
    const MelodySequence m = melody_from_symbols({62});
    auto parsed = parse_and_extract(render_midi(m), kLoose);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == m);
}

TEST_CASE("render is deterministic") {
    const MelodySequence m = melody_from_symbols({62, 0, 64, 1, 70, 0, 0, 1});
    CHECK(render_midi(m, 96.0, 5) == render_midi(m, 96.0, 5));
    CHECK(render_midi(m, 96.0, 5) != render_midi(m, 97.0, 5));
}

TEST_CASE("render rejects invalid inputs") {
    CHECK_THROWS_AS(render_midi(melody_from_symbols({})), std::invalid_argument);
    CHECK_THROWS_AS(render_midi(melody_from_symbols({0, 62})), std::invalid_argument);
    CHECK_THROWS_AS(render_midi(melody_from_symbols({62, 1, 1})), std::invalid_argument);
    CHECK_THROWS_AS(render_midi(melody_from_symbols({62}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(render_midi(melody_from_symbols({62}), 120.0, 128), std::invalid_argument);
}

TEST_CASE("round-trip identity over random valid melodies") {
    Rng rng(0xC0FFEE);
    for (int trial = 0; trial < 200; ++trial) {
        const int len = 1 + static_cast<int>(rng.below(300));
        const int spq = 1 << rng.below(4);
        MelodySequence m = testutil::random_valid_melody(rng, len);
        m.steps_per_quarter = spq;
        REQUIRE(m.valid());
        auto parsed = parse_and_extract(render_midi(m), QuantizationConfig::lossless(spq));
        REQUIRE(parsed.size() == 1);
        CHECK(parsed[0] == m);
    }
}

TEST_CASE("trailing silence survives the round trip") {
    const MelodySequence m = melody_from_symbols({62, 0, 0, 1, 0, 0, 0});
    auto parsed = parse_and_extract(render_midi(m), kLoose);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == m);
}

TEST_CASE("re-articulated pitch survives the round trip") {
    const MelodySequence m = melody_from_symbols({62, 62, 62, 1});
    auto parsed = parse_and_extract(render_midi(m), kLoose);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == m);
}

TEST_CASE("load_corpus") {
    testutil::TempDir dir("midistega-corpus");
    SUBCASE("empty directory") {
        auto r = load_corpus(dir.path(), kLoose);
        CHECK(r.melodies.empty());
        CHECK(r.files_loaded == 0);
        CHECK(r.files_skipped == 0);
    }
    SUBCASE("one valid and one corrupt file") {
        const auto good = render_midi(melody_from_symbols({62, 0, 0, 0, 1}));
        write_file_bytes(dir.path() / "a.mid", good);
        const Bytes bad = {'n', 'o', 't', ' ', 'm', 'i', 'd', 'i'};
        write_file_bytes(dir.path() / "b.mid", bad);
        write_file_bytes(dir.path() / "ignored.txt", bad);
        auto r = load_corpus(dir.path(), kLoose);
        CHECK(r.melodies.size() == 1);
        CHECK(r.files_loaded == 1);
        CHECK(r.files_skipped == 1);
    }
    SUBCASE("deterministic traversal order") {
        std::filesystem::create_directory(dir.path() / "sub");
        write_file_bytes(dir.path() / "b.mid", render_midi(melody_from_symbols({70, 0, 1})));
        write_file_bytes(dir.path() / "a.midi", render_midi(melody_from_symbols({62, 0, 1})));
        write_file_bytes(dir.path() / "sub" / "c.mid",
                         render_midi(melody_from_symbols({64, 0, 1})));
        auto r1 = load_corpus(dir.path(), kLoose);
        auto r2 = load_corpus(dir.path(), kLoose);
        REQUIRE(r1.melodies.size() == 3);
        CHECK(r1.melodies == r2.melodies);
        CHECK(r1.melodies[0].events[0].symbol == 62);  // a.midi sorts first
        CHECK(r1.melodies[1].events[0].symbol == 70);  // then b.mid
        CHECK(r1.melodies[2].events[0].symbol == 64);  // then sub/c.mid
    }
    SUBCASE("missing directory") {
        CHECK_THROWS_AS(load_corpus(dir.path() / "nope", kLoose), DirectoryNotFound);
    }
}
