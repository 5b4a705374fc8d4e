#ifndef MIDISTEGA_DISTRIBUTION_HPP
#define MIDISTEGA_DISTRIBUTION_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "midistega/events.hpp"

namespace midistega {

// One time step's conditional distribution in unnormalized integer form.
// Entries are sorted by descending weight, ties by ascending symbol, which
// makes every downstream construction (candidate pool, Huffman tree)
// reproducible on both sides of the channel.
struct Distribution {
    struct Entry {
        std::uint16_t symbol;
        std::uint64_t weight;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    std::vector<Entry> entries;

    std::uint64_t total_weight() const {
        std::uint64_t sum = 0;
        for (const Entry& e : entries) sum += e.weight;
        return sum;
    }

    friend bool operator==(const Distribution&, const Distribution&) = default;
};

inline void sort_entries(std::vector<Distribution::Entry>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Distribution::Entry& a, const Distribution::Entry& b) {
                  if (a.weight != b.weight) return a.weight > b.weight;
                  return a.symbol < b.symbol;
              });
}

// Builds a Distribution from per-symbol weights (index = symbol). Zero
// weights are excluded.
inline Distribution distribution_from_weights(std::span<const std::uint64_t> weights) {
    Distribution d;
    d.entries.reserve(weights.size());
    for (std::size_t s = 0; s < weights.size(); ++s)
        if (weights[s] > 0)
            d.entries.push_back({static_cast<std::uint16_t>(s), weights[s]});
    sort_entries(d.entries);
    return d;
}

// Restricts a distribution to symbols the MIDI renderer can encode at this
// point of the melody: NOTE_OFF is meaningless (and unrecoverable after
// rendering) when no note is sounding, so it is removed. Applied identically
// during generation, embedding and extraction.
inline Distribution renderable_subset(const Distribution& d, bool note_sounding) {
    if (note_sounding) return d;
    Distribution out;
    out.entries.reserve(d.entries.size());
    for (const auto& e : d.entries)
        if (e.symbol != kNoteOff) out.entries.push_back(e);
    return out;
}

}  // namespace midistega

#endif
