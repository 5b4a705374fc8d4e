#include "midistega/midi_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace midistega {

namespace {

// ---------------------------------------------------------------------------
// Byte-level reading
// ---------------------------------------------------------------------------

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::size_t pos, std::size_t end)
        : data_(data), pos_(pos), end_(end) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return end_ - pos_; }
    bool done() const { return pos_ >= end_; }

    std::uint8_t u8() {
        if (pos_ >= end_) throw MalformedMidi("unexpected end of chunk");
        return data_[pos_++];
    }

    std::uint8_t peek() const {
        if (pos_ >= end_) throw MalformedMidi("unexpected end of chunk");
        return data_[pos_];
    }

    std::uint16_t u16be() {
        std::uint16_t hi = u8(), lo = u8();
        return static_cast<std::uint16_t>((hi << 8) | lo);
    }

    std::uint32_t u32be() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }

    void skip(std::size_t n) {
        if (remaining() < n) throw MalformedMidi("unexpected end of chunk");
        pos_ += n;
    }

    // Variable-length quantity, at most four bytes per the SMF spec.
    std::uint32_t vlq() {
        std::uint32_t value = 0;
        for (int i = 0; i < 4; ++i) {
            if (pos_ >= end_) throw MalformedMidi("truncated variable-length quantity");
            std::uint8_t b = data_[pos_++];
            value = (value << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return value;
        }
        throw MalformedMidi("variable-length quantity longer than 4 bytes");
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_;
    std::size_t end_;
};

struct RawNote {
    std::int64_t start_tick;
    std::int64_t end_tick;
    int pitch;
};

struct TrackNotes {
    std::vector<RawNote> notes;
    std::int64_t end_tick = 0;  // tick of the end-of-track event (or last event seen)
};

// Collects note on/off pairs from one MTrk chunk. Running status honored;
// note-on with velocity 0 is a note-off; a note-on for an already sounding
// pitch closes it and reopens at the same tick. Dangling notes close at the
// end-of-track tick.
TrackNotes read_track(ByteReader& r) {
    TrackNotes out;
    std::int64_t tick = 0;
    std::uint8_t running_status = 0;
    // active note start per (pitch); later onset wins for duplicate pitch
    std::map<int, std::int64_t> active;

    auto close_note = [&](int pitch, std::int64_t end) {
        auto it = active.find(pitch);
        if (it == active.end()) return;
        out.notes.push_back(RawNote{it->second, end, pitch});
        active.erase(it);
    };

    bool saw_eot = false;
    while (!r.done() && !saw_eot) {
        tick += r.vlq();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.skip(1);
            if (status < 0xF0) running_status = status;
        } else {
            if (running_status == 0) throw MalformedMidi("data byte without running status");
            status = running_status;
        }

        if (status == 0xFF) {  // meta event
            std::uint8_t type = r.u8();
            std::uint32_t len = r.vlq();
            if (type == 0x2F) {
                saw_eot = true;
                r.skip(len);
            } else {
                r.skip(len);  // tempo and other meta events do not affect the tick grid
            }
        } else if (status == 0xF0 || status == 0xF7) {  // sysex
            std::uint32_t len = r.vlq();
            r.skip(len);
        } else {
            std::uint8_t kind = status & 0xF0;
            switch (kind) {
            case 0x80: {  // note off
                std::uint8_t key = r.u8();
                r.u8();
                close_note(key & 0x7F, tick);
                break;
            }
            case 0x90: {  // note on (velocity 0 == off)
                std::uint8_t key = r.u8();
                std::uint8_t vel = r.u8();
                int pitch = key & 0x7F;
                if (vel == 0) {
                    close_note(pitch, tick);
                } else {
                    close_note(pitch, tick);  // re-articulation at the same pitch
                    active[pitch] = tick;
                }
                break;
            }
            case 0xA0:
            case 0xB0:
            case 0xE0:
                r.skip(2);
                break;
            case 0xC0:
            case 0xD0:
                r.skip(1);
                break;
            default:
                throw MalformedMidi("unknown status byte " + std::to_string(status));
            }
        }
        out.end_tick = std::max(out.end_tick, tick);
    }

    for (auto& [pitch, start] : active)
        out.notes.push_back(RawNote{start, out.end_tick, pitch});
    return out;
}

std::int64_t snap(std::int64_t tick, double ticks_per_step) {
    return static_cast<std::int64_t>(std::llround(static_cast<double>(tick) / ticks_per_step));
}

// Turns one track's note list into a monophonic event sequence on the grid.
// Steps run from the first onset to round(end_tick / ticks_per_step); a note
// whose release lands on or after the last step keeps sounding through the
// end and gets no NOTE_OFF event, which is exactly how the renderer encodes
// a melody that ends mid-note.
std::vector<MelodyEvent> quantize_track(const TrackNotes& track, double ticks_per_step,
                                        const QuantizationConfig& cfg) {
    struct StepNote {
        std::int64_t start, end;
        int pitch;
    };
    std::vector<StepNote> notes;
    for (const RawNote& n : track.notes) {
        if (n.pitch < cfg.pitch_low || n.pitch > cfg.pitch_high) continue;
        std::int64_t s = snap(n.start_tick, ticks_per_step);
        std::int64_t e = snap(n.end_tick, ticks_per_step);
        if (e <= s) continue;  // vanished under the grid
        notes.push_back(StepNote{s, e, n.pitch});
    }
    if (notes.empty()) return {};

    std::sort(notes.begin(), notes.end(), [](const StepNote& a, const StepNote& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.pitch != b.pitch) return a.pitch > b.pitch;
        return a.end > b.end;
    });

    // Monophonic sweep: the highest pitch wins an overlap. A higher newcomer
    // truncates the current note; a lower one is dropped.
    std::vector<StepNote> mono;
    for (const StepNote& n : notes) {
        if (mono.empty() || n.start >= mono.back().end) {
            mono.push_back(n);
        } else if (n.start == mono.back().start) {
            continue;  // simultaneous onset, lower pitch
        } else if (n.pitch > mono.back().pitch) {
            mono.back().end = n.start;
            if (mono.back().end <= mono.back().start) mono.pop_back();
            mono.push_back(n);
        }
    }

    const std::int64_t first = mono.front().start;
    std::int64_t n_steps = snap(track.end_tick, ticks_per_step);
    for (const StepNote& n : mono) n_steps = std::max(n_steps, n.start + 1);
    if (n_steps <= first) return {};

    std::vector<MelodyEvent> events(static_cast<std::size_t>(n_steps - first),
                                    MelodyEvent(kNoEvent));
    for (const StepNote& n : mono) {
        events[static_cast<std::size_t>(n.start - first)] = note_on(n.pitch);
        if (n.end < n_steps) {
            auto& slot = events[static_cast<std::size_t>(n.end - first)];
            if (!slot.is_note_on()) slot = MelodyEvent(kNoteOff);
        }
    }
    return events;
}

void append_vlq(std::vector<std::uint8_t>& out, std::uint32_t value) {
    std::uint8_t buf[4];
    int n = 0;
    do {
        buf[n++] = value & 0x7F;
        value >>= 7;
    } while (value != 0);
    for (int i = n - 1; i >= 0; --i) out.push_back(i == 0 ? buf[i] : (buf[i] | 0x80));
}

void append_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

constexpr int kTicksPerStep = 120;
constexpr std::uint8_t kNoteVelocity = 100;

}  // namespace

std::vector<MelodySequence> parse_and_extract(std::span<const std::uint8_t> midi_bytes,
                                              const QuantizationConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("invalid quantization config");
    ByteReader header(midi_bytes, 0, midi_bytes.size());
    if (header.remaining() < 14 || header.u32be() != 0x4D546864u)  // 'MThd'
        throw MalformedMidi("missing MThd header");
    std::uint32_t header_len = header.u32be();
    if (header_len < 6) throw MalformedMidi("MThd chunk too short");
    std::uint16_t format = header.u16be();
    std::uint16_t ntrks = header.u16be();
    std::uint16_t division = header.u16be();
    if (format > 1) throw UnsupportedFormat("SMF format " + std::to_string(format));
    if (division & 0x8000) throw UnsupportedFormat("SMPTE time division");
    if (division == 0) throw MalformedMidi("zero ticks per quarter");
    header.skip(header_len - 6);

    const double ticks_per_step =
        static_cast<double>(division) / static_cast<double>(cfg.steps_per_quarter);

    std::vector<MelodySequence> melodies;
    std::size_t pos = header.pos();
    for (std::uint16_t t = 0; t < ntrks; ++t) {
        // locate the next MTrk, skipping alien chunks
        for (;;) {
            if (midi_bytes.size() - pos < 8) throw MalformedMidi("missing track chunk");
            ByteReader ch(midi_bytes, pos, midi_bytes.size());
            std::uint32_t tag = ch.u32be();
            std::uint32_t len = ch.u32be();
            if (ch.remaining() < len) throw MalformedMidi("track chunk overruns file");
            if (tag == 0x4D54726Bu) {  // 'MTrk'
                ByteReader body(midi_bytes, ch.pos(), ch.pos() + len);
                TrackNotes notes = read_track(body);
                auto events = quantize_track(notes, ticks_per_step, cfg);
                if (static_cast<int>(events.size()) >= cfg.min_melody_events)
                    melodies.push_back(MelodySequence{std::move(events), cfg.steps_per_quarter});
                pos = ch.pos() + len;
                break;
            }
            pos = ch.pos() + len;
        }
    }
    return melodies;
}

std::vector<std::uint8_t> render_midi(const MelodySequence& melody, double tempo_bpm,
                                      int program) {
    if (!melody.valid()) throw std::invalid_argument("melody violates sequence invariants");
    if (!(tempo_bpm > 0) || program < 0 || program > 127)
        throw std::invalid_argument("invalid render parameters");

    const int division = melody.steps_per_quarter * kTicksPerStep;

    std::vector<std::uint8_t> track;
    auto event = [&](std::uint32_t delta, std::initializer_list<std::uint8_t> bytes) {
        append_vlq(track, delta);
        track.insert(track.end(), bytes);
    };

    const auto tempo_us = static_cast<std::uint32_t>(std::llround(60'000'000.0 / tempo_bpm));
    event(0, {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(tempo_us >> 16),
              static_cast<std::uint8_t>(tempo_us >> 8), static_cast<std::uint8_t>(tempo_us)});
    event(0, {0xC0, static_cast<std::uint8_t>(program)});

    int sounding = -1;  // pitch currently on, or -1
    std::int64_t last_tick = 0;
    auto delta_to = [&](std::int64_t tick) {
        auto d = static_cast<std::uint32_t>(tick - last_tick);
        last_tick = tick;
        return d;
    };

    for (std::size_t i = 0; i < melody.events.size(); ++i) {
        const MelodyEvent e = melody.events[i];
        const std::int64_t tick = static_cast<std::int64_t>(i) * kTicksPerStep;
        if (e.is_note_on()) {
            if (sounding >= 0)
                event(delta_to(tick), {0x80, static_cast<std::uint8_t>(sounding), 0x40});
            event(delta_to(tick), {0x90, static_cast<std::uint8_t>(e.pitch()), kNoteVelocity});
            sounding = e.pitch();
        } else if (e.is_note_off()) {
            event(delta_to(tick), {0x80, static_cast<std::uint8_t>(sounding), 0x40});
            sounding = -1;
        }
    }

    // End-of-track sits exactly n_events steps in; a still-sounding note is
    // closed at that same tick so the parser reproduces the dangling shape.
    const std::int64_t end_tick =
        static_cast<std::int64_t>(melody.events.size()) * kTicksPerStep;
    if (sounding >= 0)
        event(delta_to(end_tick), {0x80, static_cast<std::uint8_t>(sounding), 0x40});
    event(delta_to(end_tick), {0xFF, 0x2F, 0x00});

    std::vector<std::uint8_t> out;
    append_u32be(out, 0x4D546864u);  // MThd
    append_u32be(out, 6);
    append_u16be(out, 0);  // format 0
    append_u16be(out, 1);  // one track
    append_u16be(out, static_cast<std::uint16_t>(division));
    append_u32be(out, 0x4D54726Bu);  // MTrk
    append_u32be(out, static_cast<std::uint32_t>(track.size()));
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

CorpusLoadResult load_corpus(const std::filesystem::path& directory,
                             const QuantizationConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory))
        throw DirectoryNotFound("no such directory: " + directory.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

    CorpusLoadResult result;
    for (const fs::path& file : files) {
        std::ifstream in(file, std::ios::binary);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
        try {
            auto melodies = parse_and_extract(bytes, cfg);
            result.melodies.insert(result.melodies.end(),
                                   std::make_move_iterator(melodies.begin()),
                                   std::make_move_iterator(melodies.end()));
            result.files_loaded += 1;
        } catch (const StegaError&) {
            result.files_skipped += 1;
        }
    }
    return result;
}

}  // namespace midistega
