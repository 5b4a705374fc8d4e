#include "midistega/model.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include "midistega/binio.hpp"
#include "midistega/rng.hpp"

namespace midistega {

namespace {

constexpr char kModelMagic[4] = {'A', 'A', 'G', 'M'};
constexpr std::uint16_t kModelVersion = 1;

class NGramSession : public ModelSession {
public:
    explicit NGramSession(const NGramModel& model) : model_(model) {}

    void feed(MelodyEvent e) override { window_.push_back(e); }

    Distribution next() override {
        return model_.predict(std::span<const MelodyEvent>(window_));
    }

private:
    const NGramModel& model_;
    std::vector<MelodyEvent> window_;
};

}  // namespace

Distribution predict(const ConditionalModel& model, std::span<const MelodyEvent> context) {
    auto session = model.new_session();
    for (MelodyEvent e : context) session->feed(e);
    return session->next();
}

NGramModel::NGramModel(int order, std::uint32_t alpha_num, std::uint32_t alpha_den)
    : order_(order), alpha_num_(alpha_num), alpha_den_(alpha_den) {
    if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
    if (alpha_num == 0 || alpha_den == 0)
        throw std::invalid_argument("smoothing constant must be positive");
}

std::uint64_t NGramModel::count(const Context& ctx, std::uint16_t symbol) const {
    auto it = counts_.find(ctx);
    if (it == counts_.end()) return 0;
    auto jt = it->second.find(symbol);
    return jt == it->second.end() ? 0 : jt->second;
}

Distribution NGramModel::predict(std::span<const MelodyEvent> context) const {
    if (context.empty()) throw std::invalid_argument("prediction context must be non-empty");
    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    Context key(ctx_len, kPadSymbol);
    const std::size_t take = std::min(ctx_len, context.size());
    for (std::size_t i = 0; i < take; ++i)
        key[ctx_len - take + i] = context[context.size() - take + i].symbol;

    std::array<std::uint64_t, kVocabSize> weights;
    weights.fill(alpha_num_);
    auto it = counts_.find(key);
    if (it != counts_.end())
        for (const auto& [sym, c] : it->second)
            weights[sym] = static_cast<std::uint64_t>(alpha_den_) * c + alpha_num_;
    return distribution_from_weights(weights);
}

std::unique_ptr<ModelSession> NGramModel::new_session() const {
    return std::make_unique<NGramSession>(*this);
}

std::vector<std::uint16_t> NGramModel::start_notes() const { return start_notes_; }

NGramModel train_ngram(std::span<const MelodySequence> corpus, int order,
                       std::uint32_t alpha_num, std::uint32_t alpha_den) {
    if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
    NGramModel model(order, alpha_num, alpha_den);

    const std::size_t ctx_len = static_cast<std::size_t>(order - 1);
    std::set<std::uint16_t> starts;
    for (const MelodySequence& melody : corpus) {
        if (melody.events.empty()) continue;
        starts.insert(melody.events.front().symbol);
        for (std::size_t t = 0; t < melody.events.size(); ++t) {
            NGramModel::Context ctx(ctx_len, kPadSymbol);
            const std::size_t take = std::min(ctx_len, t);
            for (std::size_t i = 0; i < take; ++i)
                ctx[ctx_len - take + i] = melody.events[t - take + i].symbol;
            model.counts_[std::move(ctx)][melody.events[t].symbol] += 1;
        }
    }
    model.start_notes_.assign(starts.begin(), starts.end());
    return model;
}

std::vector<std::uint8_t> NGramModel::save() const {
    BinWriter w;
    w.raw(kModelMagic, 4);
    w.le<std::uint16_t>(kModelVersion);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(order_));
    w.le<std::uint16_t>(kVocabSize);
    w.le<std::uint32_t>(alpha_num_);
    w.le<std::uint32_t>(alpha_den_);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(start_notes_.size()));
    for (std::uint16_t s : start_notes_) w.le<std::uint16_t>(s);
    w.le<std::uint64_t>(counts_.size());
    for (const auto& [ctx, row] : counts_) {  // std::map iterates in canonical order
        for (std::uint16_t s : ctx) w.le<std::uint16_t>(s);
        w.le<std::uint32_t>(static_cast<std::uint32_t>(row.size()));
        for (const auto& [sym, c] : row) {
            w.le<std::uint16_t>(sym);
            w.le<std::uint64_t>(c);
        }
    }
    return std::move(w.bytes);
}

NGramModel NGramModel::load(std::span<const std::uint8_t> bytes) {
    BinReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kModelMagic, 4) != 0)
        throw BadMagic("not a model file (bad magic)");
    const auto version = r.le<std::uint16_t>();
    if (version != kModelVersion)
        throw VersionMismatch("unsupported model file version " + std::to_string(version));
    const auto order = r.le<std::uint16_t>();
    const auto vocab = r.le<std::uint16_t>();
    if (order < 1 || vocab != kVocabSize)
        throw TruncatedFile("model header out of range");
    const auto alpha_num = r.le<std::uint32_t>();
    const auto alpha_den = r.le<std::uint32_t>();

    NGramModel model(order, alpha_num, alpha_den);
    const auto n_starts = r.le<std::uint16_t>();
    model.start_notes_.reserve(n_starts);
    for (std::uint16_t i = 0; i < n_starts; ++i)
        model.start_notes_.push_back(r.le<std::uint16_t>());

    const auto n_contexts = r.le<std::uint64_t>();
    const std::size_t ctx_len = static_cast<std::size_t>(order - 1);
    for (std::uint64_t i = 0; i < n_contexts; ++i) {
        Context ctx(ctx_len);
        for (std::size_t j = 0; j < ctx_len; ++j) ctx[j] = r.le<std::uint16_t>();
        const auto n_entries = r.le<std::uint32_t>();
        auto& row = model.counts_[std::move(ctx)];
        for (std::uint32_t j = 0; j < n_entries; ++j) {
            const auto sym = r.le<std::uint16_t>();
            row[sym] = r.le<std::uint64_t>();
        }
    }
    r.expect_end();
    return model;
}

void NGramModel::save_file(const std::filesystem::path& path) const {
    write_file_bytes(path, save());
}

NGramModel NGramModel::load_file(const std::filesystem::path& path) {
    return load(read_file_bytes(path));
}

bool GenerationParams::valid() const {
    if (max_events < 1 || start_notes.empty()) return false;
    return std::all_of(start_notes.begin(), start_notes.end(), [](std::uint16_t s) {
        return s >= kFirstNoteOn && s <= kLastNoteOn;
    });
}

MelodySequence generate(const ConditionalModel& model, const GenerationParams& params,
                        GenerationMode mode, int steps_per_quarter) {
    if (!params.valid()) throw std::invalid_argument("invalid generation parameters");
    Rng rng(params.seed);

    MelodySequence melody;
    melody.steps_per_quarter = steps_per_quarter;
    melody.events.reserve(static_cast<std::size_t>(params.max_events));
    melody.events.push_back(
        MelodyEvent(params.start_notes[rng.below(params.start_notes.size())]));

    auto session = model.new_session();
    session->feed(melody.events.back());
    SoundingTracker sounding;
    sounding.feed(melody.events.back());

    while (melody.events.size() < static_cast<std::size_t>(params.max_events)) {
        const Distribution dist = renderable_subset(session->next(), sounding.sounding);
        std::uint16_t symbol;
        if (mode == GenerationMode::kGreedy) {
            symbol = dist.entries.front().symbol;
        } else {
            std::uint64_t r = rng.below(dist.total_weight());
            std::size_t idx = 0;
            while (r >= dist.entries[idx].weight) {
                r -= dist.entries[idx].weight;
                ++idx;
            }
            symbol = dist.entries[idx].symbol;
        }
        MelodyEvent e(symbol);
        melody.events.push_back(e);
        session->feed(e);
        sounding.feed(e);
    }
    return melody;
}

}  // namespace midistega
