#ifndef MIDISTEGA_MODEL_HPP
#define MIDISTEGA_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "midistega/distribution.hpp"
#include "midistega/errors.hpp"
#include "midistega/events.hpp"

namespace midistega {

// Incremental evaluation state for one melody. Feed the prefix symbol by
// symbol; next() returns the conditional distribution over the following
// symbol. Sessions are cheap for the n-gram model and carry the recurrent
// state for the neural one; they must not be shared between melodies.
class ModelSession {
public:
    virtual ~ModelSession() = default;
    virtual void feed(MelodyEvent e) = 0;
    virtual Distribution next() = 0;
};

// The conditional-distribution interface shared by every backing model.
// Implementations must be deterministic: the same prefix always yields the
// same Distribution, which is what makes embedding invertible.
class ConditionalModel {
public:
    virtual ~ConditionalModel() = default;
    virtual std::unique_ptr<ModelSession> new_session() const = 0;
    virtual std::vector<std::uint16_t> start_notes() const = 0;
};

// Convenience wrapper matching the one-shot signature: feeds the whole
// context into a fresh session and returns the next-step distribution.
Distribution predict(const ConditionalModel& model, std::span<const MelodyEvent> context);

// ---------------------------------------------------------------------------
// N-gram model with additive smoothing, entirely in integer arithmetic so
// that sender and receiver agree bit for bit on every platform.
// ---------------------------------------------------------------------------

class NGramModel : public ConditionalModel {
public:
    using Context = std::vector<std::uint16_t>;
    using CountTable = std::map<Context, std::map<std::uint16_t, std::uint64_t>>;

    NGramModel(int order, std::uint32_t alpha_num, std::uint32_t alpha_den);

    int order() const { return order_; }
    std::uint32_t alpha_num() const { return alpha_num_; }
    std::uint32_t alpha_den() const { return alpha_den_; }
    const CountTable& counts() const { return counts_; }

    std::uint64_t count(const Context& ctx, std::uint16_t symbol) const;

    // Smoothed weights over the whole vocabulary given the last order-1
    // events of `context` (left-padded with the PAD symbol when shorter):
    //   w(s) = alpha_den * count(ctx, s) + alpha_num
    Distribution predict(std::span<const MelodyEvent> context) const;

    std::unique_ptr<ModelSession> new_session() const override;
    std::vector<std::uint16_t> start_notes() const override;

    // Binary model file, magic "AAGM", little-endian fixed-width integers,
    // canonical ordering: saving a loaded model reproduces the bytes.
    std::vector<std::uint8_t> save() const;
    static NGramModel load(std::span<const std::uint8_t> bytes);
    void save_file(const std::filesystem::path& path) const;
    static NGramModel load_file(const std::filesystem::path& path);

private:
    friend NGramModel train_ngram(std::span<const MelodySequence>, int, std::uint32_t,
                                  std::uint32_t);

    int order_;
    std::uint32_t alpha_num_;
    std::uint32_t alpha_den_;
    CountTable counts_;
    std::vector<std::uint16_t> start_notes_;
};

// Tallies context -> symbol counts over every window of every melody,
// including the left-padded windows at the start of each melody, and
// harvests the set of first events as the start-note list.
// alpha = alpha_num / alpha_den is the additive smoothing constant.
NGramModel train_ngram(std::span<const MelodySequence> corpus, int order,
                       std::uint32_t alpha_num = 1, std::uint32_t alpha_den = 10);

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

enum class GenerationMode { kGreedy, kSampled };

struct GenerationParams {
    int max_events = 160;
    std::uint64_t seed = 0;
    std::vector<std::uint16_t> start_notes;  // NOTE_ON symbols, non-empty

    bool valid() const;
};

// Generates a melody: the first event is drawn uniformly from
// params.start_notes with the seeded generator; later events come from the
// model's distribution restricted to renderable symbols, chosen by argmax
// (greedy) or seeded weighted sampling. Greedy consumes no randomness after
// the start note.
MelodySequence generate(const ConditionalModel& model, const GenerationParams& params,
                        GenerationMode mode, int steps_per_quarter = 4);

}  // namespace midistega

#endif
