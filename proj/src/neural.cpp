#include "midistega/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "midistega/binio.hpp"
#include "midistega/errors.hpp"
#include "midistega/rng.hpp"

namespace midistega {

namespace {

constexpr char kWeightsMagic[4] = {'A', 'A', 'G', 'W'};
constexpr std::uint16_t kWeightsVersion = 1;
constexpr double kQuantGrid = 4294967296.0;  // 2^32

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = M x, with M row-major rows x cols.
void matvec(std::span<const double> m, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

void check_dim(bool ok, const char* what) {
    if (!ok) throw DimensionMismatch(std::string("weight array size mismatch: ") + what);
}

}  // namespace

std::size_t LstmWeights::layer_input_dim(std::size_t layer) const {
    return layer == 0 ? static_cast<std::size_t>(embed_dim) + hidden_dim
                      : static_cast<std::size_t>(hidden_dim);
}

void LstmWeights::validate() const {
    if (vocab != kVocabSize) throw DimensionMismatch("vocabulary size must be 130");
    if (embed_dim == 0 || hidden_dim == 0 || att_hidden == 0 || att_window == 0)
        throw DimensionMismatch("all dimensions must be positive");
    if (layers.size() != 2) throw DimensionMismatch("expected exactly two LSTM layers");
    check_dim(embedding.size() == std::size_t{embed_dim} * vocab, "embedding");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::size_t msz = hidden_dim * (hidden_dim + layer_input_dim(l));
        const LstmLayerWeights& lw = layers[l];
        check_dim(lw.w_i.size() == msz && lw.w_f.size() == msz && lw.w_c.size() == msz &&
                      lw.w_o.size() == msz,
                  "gate matrix");
        check_dim(lw.b_i.size() == hidden_dim && lw.b_f.size() == hidden_dim &&
                      lw.b_c.size() == hidden_dim && lw.b_o.size() == hidden_dim,
                  "gate bias");
    }
    check_dim(w_att.size() == std::size_t{att_hidden} * 2 * hidden_dim, "attention matrix");
    check_dim(b_att.size() == att_hidden && v_att.size() == att_hidden, "attention vector");
    check_dim(out_h.size() == std::size_t{embed_dim} * hidden_dim, "output gate (recurrent)");
    check_dim(out_z.size() == std::size_t{embed_dim} * hidden_dim, "output gate (attention)");
    check_dim(out_proj.size() == std::size_t{vocab} * embed_dim, "output projection");
}

void lstm_step(const LstmLayerWeights& w, std::size_t hidden, std::span<const double> input,
               std::vector<double>& h, std::vector<double>& c) {
    const std::size_t cols = hidden + input.size();
    if (h.size() != hidden || c.size() != hidden || w.w_i.size() != hidden * cols)
        throw DimensionMismatch("lstm_step operand sizes disagree");
    std::vector<double> concat(cols);
    std::copy(h.begin(), h.end(), concat.begin());
    std::copy(input.begin(), input.end(), concat.begin() + static_cast<std::ptrdiff_t>(hidden));

    std::vector<double> gi(hidden), gf(hidden), gc(hidden), go(hidden);
    matvec(w.w_i, hidden, cols, concat, gi);
    matvec(w.w_f, hidden, cols, concat, gf);
    matvec(w.w_c, hidden, cols, concat, gc);
    matvec(w.w_o, hidden, cols, concat, go);
    for (std::size_t j = 0; j < hidden; ++j) {
        const double in_gate = sigmoid(gi[j] + w.b_i[j]);
        const double forget_gate = sigmoid(gf[j] + w.b_f[j]);
        const double candidate = std::tanh(gc[j] + w.b_c[j]);
        const double out_gate = sigmoid(go[j] + w.b_o[j]);
        c[j] = forget_gate * c[j] + in_gate * candidate;
        h[j] = out_gate * std::tanh(c[j]);
    }
}

std::vector<double> attention_mix(const LstmWeights& w,
                                  const std::deque<std::vector<double>>& history,
                                  std::span<const double> cell) {
    if (history.empty()) throw EmptyHistory("attention needs at least one stored output");
    const std::size_t hidden = w.hidden_dim;
    if (cell.size() != hidden) throw DimensionMismatch("cell state size disagrees");

    std::vector<double> pair(2 * hidden);
    std::copy(cell.begin(), cell.end(), pair.begin() + static_cast<std::ptrdiff_t>(hidden));
    std::vector<double> proj(w.att_hidden);
    std::vector<double> scores;
    scores.reserve(history.size());
    for (const std::vector<double>& h : history) {
        if (h.size() != hidden) throw DimensionMismatch("stored output size disagrees");
        std::copy(h.begin(), h.end(), pair.begin());
        matvec(w.w_att, w.att_hidden, 2 * hidden, pair, proj);
        double s = 0.0;
        for (std::size_t j = 0; j < proj.size(); ++j)
            s += w.v_att[j] * std::tanh(proj[j] + w.b_att[j]);
        scores.push_back(s);
    }

    const std::vector<double> alpha = softmax(scores);
    std::vector<double> z(hidden, 0.0);
    std::size_t k = 0;
    for (const std::vector<double>& h : history) {
        for (std::size_t d = 0; d < hidden; ++d) z[d] += alpha[k] * h[d];
        ++k;
    }
    return z;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax of an empty vector");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<std::uint64_t> quantize_probabilities(std::span<const double> probs) {
    std::vector<std::uint64_t> weights(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const long long r = std::llround(probs[i] * kQuantGrid);
        weights[i] = r < 1 ? 1 : static_cast<std::uint64_t>(r);
    }
    return weights;
}

namespace {

class NeuralSession final : public ModelSession {
public:
    explicit NeuralSession(const LstmWeights& w) : weights_(w), z_prev_(w.hidden_dim, 0.0) {
        for (int l = 0; l < 2; ++l) {
            h_[l].assign(weights_.hidden_dim, 0.0);
            c_[l].assign(weights_.hidden_dim, 0.0);
        }
    }

    void feed(MelodyEvent e) override {
        if (e.symbol >= weights_.vocab)
            throw std::invalid_argument("event symbol outside model vocabulary");
        const std::size_t embed = weights_.embed_dim;
        const std::size_t hidden = weights_.hidden_dim;

        // Column e.symbol of the embedding table.
        std::vector<double> emb(embed);
        for (std::size_t r = 0; r < embed; ++r)
            emb[r] = weights_.embedding[r * weights_.vocab + e.symbol];

        // Two stacked cells; the first also sees the previous attention mix.
        std::vector<double> input0(embed + hidden);
        std::copy(emb.begin(), emb.end(), input0.begin());
        std::copy(z_prev_.begin(), z_prev_.end(), input0.begin() + static_cast<std::ptrdiff_t>(embed));
        lstm_step(weights_.layers[0], hidden, input0, h_[0], c_[0]);
        lstm_step(weights_.layers[1], hidden, h_[0], h_[1], c_[1]);

        history_.push_back(h_[1]);
        if (history_.size() > weights_.att_window) history_.pop_front();
        std::vector<double> z = attention_mix(weights_, history_, c_[1]);

        std::vector<double> from_h(embed), from_z(embed), mixed(embed);
        matvec(weights_.out_h, embed, hidden, h_[1], from_h);
        matvec(weights_.out_z, embed, hidden, z, from_z);
        for (std::size_t r = 0; r < embed; ++r) mixed[r] = emb[r] + from_h[r] + from_z[r];

        std::vector<double> logits(weights_.vocab);
        matvec(weights_.out_proj, weights_.vocab, embed, mixed, logits);

        dist_ = distribution_from_weights(quantize_probabilities(softmax(logits)));
        has_dist_ = true;
        z_prev_ = std::move(z);
    }

    Distribution next() override {
        if (!has_dist_) throw std::invalid_argument("next() before any feed()");
        return dist_;
    }

private:
    const LstmWeights& weights_;
    std::vector<double> h_[2], c_[2];
    std::deque<std::vector<double>> history_;
    std::vector<double> z_prev_;
    Distribution dist_;
    bool has_dist_ = false;
};

}  // namespace

NeuralModel::NeuralModel(LstmWeights weights) : weights_(std::move(weights)) {
    weights_.validate();
}

NeuralModel NeuralModel::random_init(std::uint16_t embed_dim, std::uint16_t hidden_dim,
                                     std::uint16_t att_hidden, std::uint16_t att_window,
                                     std::uint64_t seed) {
    LstmWeights w;
    w.embed_dim = embed_dim;
    w.hidden_dim = hidden_dim;
    w.att_hidden = att_hidden;
    w.att_window = att_window;
    Rng rng(seed);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        for (double& x : v) x = rng.uniform(-0.1, 0.1);
    };
    fill(w.embedding, std::size_t{embed_dim} * w.vocab);
    w.layers.resize(2);
    for (std::size_t l = 0; l < 2; ++l) {
        const std::size_t msz = hidden_dim * (hidden_dim + w.layer_input_dim(l));
        LstmLayerWeights& lw = w.layers[l];
        fill(lw.w_i, msz);
        fill(lw.b_i, hidden_dim);
        fill(lw.w_f, msz);
        fill(lw.b_f, hidden_dim);
        fill(lw.w_c, msz);
        fill(lw.b_c, hidden_dim);
        fill(lw.w_o, msz);
        fill(lw.b_o, hidden_dim);
    }
    fill(w.w_att, std::size_t{att_hidden} * 2 * hidden_dim);
    fill(w.b_att, att_hidden);
    fill(w.v_att, att_hidden);
    fill(w.out_h, std::size_t{embed_dim} * hidden_dim);
    fill(w.out_z, std::size_t{embed_dim} * hidden_dim);
    fill(w.out_proj, std::size_t{w.vocab} * embed_dim);
    return NeuralModel(std::move(w));
}

std::unique_ptr<ModelSession> NeuralModel::new_session() const {
    return std::make_unique<NeuralSession>(weights_);
}

std::vector<std::uint16_t> NeuralModel::start_notes() const {
    std::vector<std::uint16_t> notes;
    notes.reserve(kLastNoteOn - kFirstNoteOn + 1);
    for (std::uint16_t s = kFirstNoteOn; s <= kLastNoteOn; ++s) notes.push_back(s);
    return notes;
}

std::vector<std::uint8_t> NeuralModel::save() const {
    BinWriter w;
    w.raw(kWeightsMagic, 4);
    w.le<std::uint16_t>(kWeightsVersion);
    w.le<std::uint16_t>(weights_.vocab);
    w.le<std::uint16_t>(weights_.embed_dim);
    w.le<std::uint16_t>(weights_.hidden_dim);
    w.le<std::uint16_t>(weights_.att_hidden);
    w.le<std::uint16_t>(weights_.att_window);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(weights_.layers.size()));
    auto arr = [&](const std::vector<double>& v) {
        for (double d : v) w.f64(d);
    };
    arr(weights_.embedding);
    for (const LstmLayerWeights& l : weights_.layers) {
        arr(l.w_i);
        arr(l.b_i);
        arr(l.w_f);
        arr(l.b_f);
        arr(l.w_c);
        arr(l.b_c);
        arr(l.w_o);
        arr(l.b_o);
    }
    arr(weights_.w_att);
    arr(weights_.b_att);
    arr(weights_.v_att);
    arr(weights_.out_h);
    arr(weights_.out_z);
    arr(weights_.out_proj);
    return std::move(w.bytes);
}

NeuralModel NeuralModel::load(std::span<const std::uint8_t> bytes) {
    BinReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kWeightsMagic, 4) != 0)
        throw BadMagic("not a weight file (bad magic)");
    const auto version = r.le<std::uint16_t>();
    if (version != kWeightsVersion)
        throw VersionMismatch("unsupported weight file version " + std::to_string(version));

    LstmWeights w;
    w.vocab = r.le<std::uint16_t>();
    w.embed_dim = r.le<std::uint16_t>();
    w.hidden_dim = r.le<std::uint16_t>();
    w.att_hidden = r.le<std::uint16_t>();
    w.att_window = r.le<std::uint16_t>();
    const auto n_layers = r.le<std::uint16_t>();
    if (w.vocab != kVocabSize || n_layers != 2)
        throw DimensionMismatch("weight file declares unsupported dimensions");

    auto arr = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        for (double& d : v) d = r.f64();
    };
    arr(w.embedding, std::size_t{w.embed_dim} * w.vocab);
    w.layers.resize(2);
    for (std::size_t l = 0; l < 2; ++l) {
        const std::size_t msz = w.hidden_dim * (w.hidden_dim + w.layer_input_dim(l));
        LstmLayerWeights& lw = w.layers[l];
        arr(lw.w_i, msz);
        arr(lw.b_i, w.hidden_dim);
        arr(lw.w_f, msz);
        arr(lw.b_f, w.hidden_dim);
        arr(lw.w_c, msz);
        arr(lw.b_c, w.hidden_dim);
        arr(lw.w_o, msz);
        arr(lw.b_o, w.hidden_dim);
    }
    arr(w.w_att, std::size_t{w.att_hidden} * 2 * w.hidden_dim);
    arr(w.b_att, w.att_hidden);
    arr(w.v_att, w.att_hidden);
    arr(w.out_h, std::size_t{w.embed_dim} * w.hidden_dim);
    arr(w.out_z, std::size_t{w.embed_dim} * w.hidden_dim);
    arr(w.out_proj, std::size_t{w.vocab} * w.embed_dim);
    r.expect_end();
    return NeuralModel(std::move(w));
}

void NeuralModel::save_file(const std::filesystem::path& path) const {
    write_file_bytes(path, save());
}

NeuralModel NeuralModel::load_file(const std::filesystem::path& path) {
    return load(read_file_bytes(path));
}

}  // namespace midistega
