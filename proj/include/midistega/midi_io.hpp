#ifndef MIDISTEGA_MIDI_IO_HPP
#define MIDISTEGA_MIDI_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "midistega/errors.hpp"
#include "midistega/events.hpp"

namespace midistega {

// Parses a Standard MIDI File (format 0 or 1) and extracts one quantized
// monophonic melody per track. Tracks producing fewer than
// cfg.min_melody_events events are dropped. Overlapping notes keep the
// highest pitch; notes snap to the nearest grid step and zero-length notes
// are discarded.
//
// Throws MalformedMidi on structural damage and UnsupportedFormat for
// format-2 files or SMPTE time division.
std::vector<MelodySequence> parse_and_extract(std::span<const std::uint8_t> midi_bytes,
                                              const QuantizationConfig& cfg);

// Renders a melody to a format-0 SMF: one tempo meta event, one program
// change, fixed-velocity note on/off pairs on the quantization grid. Any
// note still sounding at the end is closed at the end-of-track tick.
// Deterministic: equal inputs give byte-identical files, and the output
// parses back to an event-identical melody.
std::vector<std::uint8_t> render_midi(const MelodySequence& melody, double tempo_bpm = 120.0,
                                      int program = 0);

struct CorpusLoadResult {
    std::vector<MelodySequence> melodies;
    std::size_t files_loaded = 0;
    std::size_t files_skipped = 0;
};

// Recursively loads every .mid/.midi file under `directory` in lexicographic
// path order. Files that fail to parse are counted and skipped.
CorpusLoadResult load_corpus(const std::filesystem::path& directory,
                             const QuantizationConfig& cfg = QuantizationConfig{});

}  // namespace midistega

#endif
