#include "midistega/codec.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include "midistega/rng.hpp"

namespace midistega {

namespace {

constexpr std::size_t kHeaderBits = 32;
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 29;
constexpr int kBarAlignment = 16;

}  // namespace

BitString frame_payload(std::span<const std::uint8_t> secret) {
    if (secret.size() >= kMaxPayloadBytes)
        throw PayloadTooLarge("payload exceeds 2^29 bytes");
    const std::uint32_t bit_count = static_cast<std::uint32_t>(secret.size() * 8);
    BitString bits;
    bits.reserve(kHeaderBits + bit_count);
    for (int i = 31; i >= 0; --i) bits.push_back((bit_count >> i) & 1);
    BitString body = bits_from_bytes(secret);
    bits.insert(bits.end(), body.begin(), body.end());
    return bits;
}

std::vector<std::uint8_t> unframe_payload(std::span<const std::uint8_t> bits) {
    if (bits.size() < kHeaderBits)
        throw TruncatedFrame("bit stream shorter than the length header");
    std::uint32_t bit_count = 0;
    for (std::size_t i = 0; i < kHeaderBits; ++i)
        bit_count = (bit_count << 1) | (bits[i] & 1);
    if (bit_count % 8 != 0)
        throw NonByteAlignedLength("header declares a non-byte-aligned payload");
    if (bit_count > bits.size() - kHeaderBits)
        throw TruncatedFrame("header declares more bits than the stream holds");
    return bytes_from_bits(bits.subspan(kHeaderBits, bit_count));
}

CandidatePool build_candidate_pool(const Distribution& dist, int m) {
    if (m < 2 || static_cast<std::size_t>(m) > dist.entries.size())
        throw PoolTooSmall("candidate pool size " + std::to_string(m) +
                           " unavailable from a distribution of " +
                           std::to_string(dist.entries.size()) + " entries");
    CandidatePool pool;
    pool.entries.assign(dist.entries.begin(), dist.entries.begin() + m);
    return pool;
}

HuffmanCode::HuffmanCode(const CandidatePool& pool) {
    const std::size_t m = pool.size();
    nodes_.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i)
        nodes_.push_back(Node{pool.entries[i].weight, i, -1, -1, static_cast<int>(i)});

    auto order = [this](int a, int b) {  // reversed: priority_queue pops the "largest"
        if (nodes_[a].weight != nodes_[b].weight) return nodes_[a].weight > nodes_[b].weight;
        return nodes_[a].rank > nodes_[b].rank;
    };
    std::priority_queue<int, std::vector<int>, decltype(order)> heap(order);
    for (std::size_t i = 0; i < m; ++i) heap.push(static_cast<int>(i));

    while (heap.size() > 1) {
        int left = heap.top();
        heap.pop();
        int right = heap.top();
        heap.pop();
        nodes_.push_back(Node{nodes_[left].weight + nodes_[right].weight,
                              std::min(nodes_[left].rank, nodes_[right].rank), left, right, -1});
        heap.push(static_cast<int>(nodes_.size() - 1));
    }
    root_ = heap.top();

    code_bits_.assign(m, {});
    std::vector<std::pair<int, std::vector<std::uint8_t>>> stack{{root_, {}}};
    while (!stack.empty()) {
        auto [node, prefix] = std::move(stack.back());
        stack.pop_back();
        if (nodes_[node].pool_index >= 0) {
            code_bits_[static_cast<std::size_t>(nodes_[node].pool_index)] = std::move(prefix);
            continue;
        }
        auto left_prefix = prefix;
        left_prefix.push_back(0);
        prefix.push_back(1);
        stack.push_back({nodes_[node].right, std::move(prefix)});
        stack.push_back({nodes_[node].left, std::move(left_prefix)});
    }
}

std::string HuffmanCode::code_string(std::size_t pool_index) const {
    std::string s;
    for (std::uint8_t b : code_bits_[pool_index]) s.push_back(b ? '1' : '0');
    return s;
}

std::size_t HuffmanCode::walk(BitReader& reader, std::size_t& real_bits) const {
    int node = root_;
    real_bits = 0;
    while (nodes_[static_cast<std::size_t>(node)].pool_index < 0) {
        bool real = false;
        const int bit = reader.next_or_pad(real);
        if (real) ++real_bits;
        node = bit ? nodes_[static_cast<std::size_t>(node)].right
                   : nodes_[static_cast<std::size_t>(node)].left;
    }
    return static_cast<std::size_t>(nodes_[static_cast<std::size_t>(node)].pool_index);
}

namespace {

// Pool size at one step: the renderable restriction can remove NOTE_OFF from
// the support, so the pool shrinks to the available entries when cps exceeds
// them. Both sides compute this identically.
int effective_pool_size(const Distribution& dist, int cps) {
    return std::min<int>(cps, static_cast<int>(dist.entries.size()));
}

}  // namespace

StegoBundle embed(const ConditionalModel& model, const StegoParams& params,
                  std::span<const std::uint8_t> secret) {
    if (!params.valid() || params.max_events_per_melody < 2)
        throw std::invalid_argument("invalid stego parameters");
    const std::vector<std::uint16_t> starts = model.start_notes();
    if (starts.empty()) throw std::invalid_argument("model has no start notes");

    const BitString frame = frame_payload(secret);
    BitReader reader(frame);
    Rng rng(params.seed);

    StegoBundle bundle;
    bundle.cps = params.cps;
    bundle.max_events_per_melody = params.max_events_per_melody;

    do {
        MelodySequence melody;
        melody.steps_per_quarter = params.steps_per_quarter;
        melody.events.push_back(MelodyEvent(starts[rng.below(starts.size())]));

        auto session = model.new_session();
        session->feed(melody.events.back());
        SoundingTracker sounding;
        sounding.feed(melody.events.back());

        std::uint64_t melody_bits = 0;
        std::uint64_t melody_data_notes = 0;

        auto emit = [&](std::uint16_t symbol) {
            MelodyEvent e(symbol);
            melody.events.push_back(e);
            session->feed(e);
            sounding.feed(e);
        };

        while (melody.events.size() < static_cast<std::size_t>(params.max_events_per_melody) &&
               !reader.exhausted()) {
            const Distribution dist = renderable_subset(session->next(), sounding.sounding);
            const CandidatePool pool =
                build_candidate_pool(dist, effective_pool_size(dist, params.cps));
            const HuffmanCode code(pool);
            std::size_t real_bits = 0;
            const std::size_t leaf = code.walk(reader, real_bits);
            melody_bits += real_bits;
            if (real_bits > 0) melody_data_notes += 1;
            emit(pool.entries[leaf].symbol);
        }

        if (reader.exhausted()) {
            // Cover-only tail: continue the melody greedily to a bar boundary
            // so the payload end leaves no length artifact.
            while (melody.events.size() % kBarAlignment != 0) {
                const Distribution dist =
                    renderable_subset(session->next(), sounding.sounding);
                emit(dist.entries.front().symbol);
            }
        }

        bundle.melodies.push_back(std::move(melody));
        bundle.embedded_bits.push_back(melody_bits);
        bundle.data_notes.push_back(melody_data_notes);
    } while (!reader.exhausted());

    return bundle;
}

std::vector<std::uint8_t> extract_melodies(const ConditionalModel& model,
                                           const StegoParams& params,
                                           std::span<const MelodySequence> melodies) {
    if (!params.valid()) throw std::invalid_argument("invalid stego parameters");

    BitString bits;
    for (const MelodySequence& melody : melodies) {
        if (melody.events.empty() || !melody.events.front().is_note_on())
            throw DesyncDetected("melody does not open with a key note");

        auto session = model.new_session();
        session->feed(melody.events.front());
        SoundingTracker sounding;
        sounding.feed(melody.events.front());

        for (std::size_t i = 1; i < melody.events.size(); ++i) {
            const Distribution dist = renderable_subset(session->next(), sounding.sounding);
            const CandidatePool pool =
                build_candidate_pool(dist, effective_pool_size(dist, params.cps));
            const HuffmanCode code(pool);

            const std::uint16_t symbol = melody.events[i].symbol;
            std::size_t leaf = pool.size();
            for (std::size_t j = 0; j < pool.size(); ++j) {
                if (pool.entries[j].symbol == symbol) {
                    leaf = j;
                    break;
                }
            }
            if (leaf == pool.size())
                throw DesyncDetected("observed symbol outside the candidate pool");

            const auto& word = code.code(leaf);
            bits.insert(bits.end(), word.begin(), word.end());
            session->feed(melody.events[i]);
            sounding.feed(melody.events[i]);
        }
    }
    return unframe_payload(bits);
}

std::vector<std::uint8_t> extract(const ConditionalModel& model, const StegoParams& params,
                                  const StegoBundle& bundle) {
    return extract_melodies(model, params, bundle.melodies);
}

}  // namespace midistega
