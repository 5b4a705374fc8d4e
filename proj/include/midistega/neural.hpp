#ifndef MIDISTEGA_NEURAL_HPP
#define MIDISTEGA_NEURAL_HPP

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "midistega/distribution.hpp"
#include "midistega/events.hpp"
#include "midistega/model.hpp"

namespace midistega {

// ---------------------------------------------------------------------------
// Recurrent melody model: embedding -> two LSTM layers -> attention over the
// recent top-layer outputs -> softmax over the event vocabulary. Weights are
// plain double arrays so a file trained (or initialised) once can be shipped
// to the receiver byte for byte; both sides must evaluate the same binary,
// since cross-platform float determinism is not promised.
// ---------------------------------------------------------------------------

// One LSTM layer. Gate matrices are row-major with shape
// hidden x (hidden + input); the gate input vector is [h_prev ; x].
struct LstmLayerWeights {
    std::vector<double> w_i, w_f, w_c, w_o;
    std::vector<double> b_i, b_f, b_c, b_o;
};

struct LstmWeights {
    std::uint16_t vocab = kVocabSize;
    std::uint16_t embed_dim = 64;
    std::uint16_t hidden_dim = 64;
    std::uint16_t att_hidden = 40;
    std::uint16_t att_window = 40;  // how many recent outputs attention sees

    std::vector<double> embedding;         // embed_dim x vocab
    std::vector<LstmLayerWeights> layers;  // exactly two
    std::vector<double> w_att;             // att_hidden x (2 * hidden_dim)
    std::vector<double> b_att;             // att_hidden
    std::vector<double> v_att;             // att_hidden
    std::vector<double> out_h;             // embed_dim x hidden_dim
    std::vector<double> out_z;             // embed_dim x hidden_dim
    std::vector<double> out_proj;          // vocab x embed_dim

    // Layer 0 consumes [embedding(x) ; z_prev], layer 1 the layer-0 output.
    std::size_t layer_input_dim(std::size_t layer) const;

    // Throws DimensionMismatch if any array disagrees with the declared dims.
    void validate() const;
};

// One LSTM cell update; h and c are the layer's state vectors (size `hidden`)
// and are updated in place.
void lstm_step(const LstmLayerWeights& w, std::size_t hidden, std::span<const double> input,
               std::vector<double>& h, std::vector<double>& c);

// Additive attention over `history` (oldest first, the current output last),
// scored against the current top-layer cell state:
//   score_i = v . tanh(W_a [h_i ; cell] + b_a)
// Softmax of the scores weighs the history into one context vector.
std::vector<double> attention_mix(const LstmWeights& w,
                                  const std::deque<std::vector<double>>& history,
                                  std::span<const double> cell);

std::vector<double> softmax(std::span<const double> logits);

// Probabilities snapped to a 2^32 integer grid. Every symbol keeps weight at
// least 1, so no event is ever impossible and the receiver can always invert.
std::vector<std::uint64_t> quantize_probabilities(std::span<const double> probs);

class NeuralModel : public ConditionalModel {
public:
    explicit NeuralModel(LstmWeights weights);

    // Fresh model with every weight drawn uniformly from [-0.1, 0.1] by the
    // seeded generator. Useful as a deterministic stand-in when no trained
    // weight file is available.
    static NeuralModel random_init(std::uint16_t embed_dim, std::uint16_t hidden_dim,
                                   std::uint16_t att_hidden, std::uint16_t att_window,
                                   std::uint64_t seed);

    const LstmWeights& weights() const { return weights_; }

    std::unique_ptr<ModelSession> new_session() const override;
    std::vector<std::uint16_t> start_notes() const override;

    // Binary weight file, magic "AAGW", little-endian; doubles are stored as
    // their IEEE-754 bit patterns so save(load(b)) == b.
    std::vector<std::uint8_t> save() const;
    static NeuralModel load(std::span<const std::uint8_t> bytes);
    void save_file(const std::filesystem::path& path) const;
    static NeuralModel load_file(const std::filesystem::path& path);

private:
    LstmWeights weights_;
};

}  // namespace midistega

#endif
