#ifndef MIDISTEGA_CODEC_HPP
#define MIDISTEGA_CODEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "midistega/bits.hpp"
#include "midistega/distribution.hpp"
#include "midistega/errors.hpp"
#include "midistega/events.hpp"
#include "midistega/model.hpp"

namespace midistega {

// ---------------------------------------------------------------------------
// Payload framing: 32-bit big-endian length-in-bits header, then the payload
// bits MSB-first per byte. The header is what lets the receiver discard the
// tree-walk padding and the cover-only tail notes.
// ---------------------------------------------------------------------------

BitString frame_payload(std::span<const std::uint8_t> secret);
std::vector<std::uint8_t> unframe_payload(std::span<const std::uint8_t> bits);

// ---------------------------------------------------------------------------
// Candidate pool and its prefix code
// ---------------------------------------------------------------------------

struct StegoParams {
    int cps = 8;  // candidate pool size m, in [2, kVocabSize]
    std::uint64_t seed = 0;
    int max_events_per_melody = 160;
    int steps_per_quarter = 4;

    bool valid() const {
        return cps >= 2 && cps <= kVocabSize && max_events_per_melody >= 1 &&
               steps_per_quarter >= 1;
    }
};

// The top-m entries of a Distribution, order inherited from the
// distribution's deterministic sort.
struct CandidatePool {
    std::vector<Distribution::Entry> entries;

    std::size_t size() const { return entries.size(); }
};

CandidatePool build_candidate_pool(const Distribution& dist, int m);

// Huffman code over the pool with fully pinned tie-breaking: nodes are
// ordered by (weight ascending, rank ascending) where a leaf's rank is its
// pool position and a merged node takes the smaller rank of its children;
// of the two nodes popped, the first becomes the left child (bit 0), the
// second the right child (bit 1). The receiver rebuilds the identical tree
// from the identical pool.
class HuffmanCode {
public:
    explicit HuffmanCode(const CandidatePool& pool);

    std::size_t leaf_count() const { return code_bits_.size(); }

    // Code word of one pool entry as '0'/'1' bits.
    const std::vector<std::uint8_t>& code(std::size_t pool_index) const {
        return code_bits_[pool_index];
    }
    std::string code_string(std::size_t pool_index) const;

    // Walks from the root, consuming bits from `reader` (zero-padded once the
    // stream runs out), and returns the pool index of the reached leaf.
    // real_bits reports how many consumed bits were real stream bits.
    std::size_t walk(BitReader& reader, std::size_t& real_bits) const;

private:
    struct Node {
        std::uint64_t weight;
        std::size_t rank;
        int left = -1;
        int right = -1;
        int pool_index = -1;
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<std::vector<std::uint8_t>> code_bits_;
};

// ---------------------------------------------------------------------------
// Embedding and extraction
// ---------------------------------------------------------------------------

struct StegoBundle {
    std::vector<MelodySequence> melodies;
    int cps = 0;
    int max_events_per_melody = 0;
    std::vector<std::uint64_t> embedded_bits;  // per melody, real payload/frame bits
    std::vector<std::uint64_t> data_notes;     // per melody, notes that carried real bits

    std::uint64_t total_embedded_bits() const {
        std::uint64_t sum = 0;
        for (auto b : embedded_bits) sum += b;
        return sum;
    }
    std::uint64_t total_data_notes() const {
        std::uint64_t sum = 0;
        for (auto n : data_notes) sum += n;
        return sum;
    }
};

// Frames the secret and generates melodies whose notes are selected by the
// payload bits: each melody opens with a seeded random start note (carrying
// no data); every later note is the leaf of the step's Huffman-coded
// candidate pool reached by consuming frame bits. When a melody reaches
// max_events_per_melody with bits left, a new one begins. After the frame is
// exhausted the current melody is extended greedily until its length is a
// multiple of 16.
StegoBundle embed(const ConditionalModel& model, const StegoParams& params,
                  std::span<const std::uint8_t> secret);

// Inverse of embed: re-runs the model on each melody (first note is the key),
// rebuilds pool and code at every step, and accumulates the code bits of the
// observed symbols. A symbol outside its step's pool raises DesyncDetected;
// the concatenated bits are unframed into the payload.
std::vector<std::uint8_t> extract(const ConditionalModel& model, const StegoParams& params,
                                  const StegoBundle& bundle);

// Extraction variant for melodies parsed back from MIDI files.
std::vector<std::uint8_t> extract_melodies(const ConditionalModel& model,
                                           const StegoParams& params,
                                           std::span<const MelodySequence> melodies);

}  // namespace midistega

#endif
