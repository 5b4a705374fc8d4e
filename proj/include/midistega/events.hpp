#ifndef MIDISTEGA_EVENTS_HPP
#define MIDISTEGA_EVENTS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace midistega {

// Monophonic melody alphabet: one symbol per grid step.
//   0        NO_EVENT  (sustain the sounding note, or silence)
//   1        NOTE_OFF  (release the sounding note)
//   2..129   NOTE_ON with MIDI pitch = symbol - 2
inline constexpr int kVocabSize = 130;
inline constexpr std::uint16_t kNoEvent = 0;
inline constexpr std::uint16_t kNoteOff = 1;
inline constexpr std::uint16_t kFirstNoteOn = 2;
inline constexpr std::uint16_t kLastNoteOn = 129;

// Context-padding symbol, deliberately outside the vocabulary.
inline constexpr std::uint16_t kPadSymbol = 130;

struct MelodyEvent {
    std::uint16_t symbol = kNoEvent;

    constexpr MelodyEvent() = default;
    constexpr explicit MelodyEvent(std::uint16_t s) : symbol(s) {}

    constexpr bool is_note_on() const { return symbol >= kFirstNoteOn && symbol <= kLastNoteOn; }
    constexpr bool is_note_off() const { return symbol == kNoteOff; }
    constexpr bool is_no_event() const { return symbol == kNoEvent; }
    constexpr int pitch() const { return static_cast<int>(symbol) - kFirstNoteOn; }

    friend constexpr bool operator==(MelodyEvent a, MelodyEvent b) { return a.symbol == b.symbol; }
};

constexpr MelodyEvent note_on(int pitch) {
    return MelodyEvent(static_cast<std::uint16_t>(pitch + kFirstNoteOn));
}

// Tracks whether a note is sounding while a symbol stream is consumed.
// NOTE_ON starts (or replaces) a note, NOTE_OFF releases it, NO_EVENT holds.
struct SoundingTracker {
    bool sounding = false;

    void feed(MelodyEvent e) {
        if (e.is_note_on())
            sounding = true;
        else if (e.is_note_off())
            sounding = false;
    }
};

struct MelodySequence {
    std::vector<MelodyEvent> events;
    int steps_per_quarter = 4;

    std::size_t size() const { return events.size(); }

    // A sequence is valid when it is non-empty, opens with a NOTE_ON and
    // never releases a note that is not sounding. Sequences of this shape
    // are exactly the ones the MIDI renderer can reproduce losslessly.
    bool valid() const {
        if (events.empty() || steps_per_quarter < 1) return false;
        if (!events.front().is_note_on()) return false;
        SoundingTracker st;
        for (MelodyEvent e : events) {
            if (e.symbol >= kVocabSize) return false;
            if (e.is_note_off() && !st.sounding) return false;
            st.feed(e);
        }
        return true;
    }

    friend bool operator==(const MelodySequence& a, const MelodySequence& b) {
        return a.steps_per_quarter == b.steps_per_quarter && a.events == b.events;
    }
};

struct QuantizationConfig {
    int steps_per_quarter = 4;
    int min_melody_events = 8;
    int pitch_low = 0;
    int pitch_high = 127;

    bool valid() const {
        return steps_per_quarter >= 1 && min_melody_events >= 1 && pitch_low >= 0 &&
               pitch_low <= pitch_high && pitch_high <= 127;
    }

    // Configuration that preserves every melody the renderer can emit.
    static QuantizationConfig lossless(int steps_per_quarter = 4) {
        return QuantizationConfig{steps_per_quarter, 1, 0, 127};
    }
};

}  // namespace midistega

#endif
