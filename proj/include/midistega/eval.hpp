#ifndef MIDISTEGA_EVAL_HPP
#define MIDISTEGA_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "midistega/codec.hpp"
#include "midistega/model.hpp"

namespace midistega {

// ---------------------------------------------------------------------------
// Embedding rate
// ---------------------------------------------------------------------------

struct RateReport {
    std::size_t n_melodies = 0;
    std::uint64_t total_embedded_bits = 0;
    std::vector<std::uint64_t> note_counts;  // L_i, events per melody
    std::vector<std::uint64_t> file_bits;    // rendered file size in bits per melody
    std::vector<std::uint64_t> melody_bits;  // embedded bits per melody

    double mean_notes = 0.0;               // mean L
    double mean_bits_per_note = 0.0;       // (bits per melody) / (mean L - 1)
    double mean_bits_per_data_note = 0.0;  // bits / notes that actually carried bits
    double embedding_rate = 0.0;           // total bits / total file bits, in [0, 1)
};

// Core computation over per-melody figures. `data_notes` may be empty when the
// caller does not know which notes carried bits.
RateReport rate_report_from_parts(std::vector<std::uint64_t> note_counts,
                                  std::vector<std::uint64_t> file_bits,
                                  std::vector<std::uint64_t> melody_bits,
                                  std::span<const std::uint64_t> data_notes);

// Renders every melody (fixed tempo/program, so file sizes are reproducible)
// and relates the embedded-bit totals to the bits the files occupy on disk.
RateReport embedding_rate(std::span<const StegoBundle> bundles, double tempo_bpm = 120.0,
                          int program = 0);

// Expected rate when only per-condition averages are known: mean embedded
// bits (L-1) * k over mean file bits. Used to sanity-check reported figures.
double rate_from_published_means(double k_bar, double l_bar, double b_bar_bytes);

// ---------------------------------------------------------------------------
// Likelihood score
// ---------------------------------------------------------------------------

struct ScoreReport {
    std::vector<double> per_sequence;  // negative mean log-likelihood, natural log
    double mean = 0.0;
    double mean_base2 = 0.0;  // same figure in bits
};

// score_i = -(1/(L_i-1)) * sum over events after the first of ln p(event |
// prefix), with p taken from the model's full normalized distribution (the
// first event is the key note and is never scored). The corpus mean averages
// the per-sequence scores in order.
ScoreReport likelihood_score(const ConditionalModel& model,
                             std::span<const MelodySequence> sequences);

// ---------------------------------------------------------------------------
// Blinded listening-test set
// ---------------------------------------------------------------------------

struct AbxEntry {
    std::string filename;  // relative to the samples/ subdirectory
    std::string label;     // "stego" or "clean"
    int cps = 0;           // 0 for clean samples
};

// Builds a blinded test set under `out_dir`: `samples/sample_NNN.mid` holds
// the shuffled mix of n_stego embeddings of random payloads (cycling through
// params_list) and n_clean sampled generations, and `answer_key.csv`
// (filename,label,cps) records the ground truth. Everything derives from
// `seed`, so the same call reproduces the directory bit for bit. Returns the
// answer key in file order.
std::vector<AbxEntry> make_abx_set(const ConditionalModel& model,
                                   std::span<const StegoParams> params_list, int n_stego,
                                   int n_clean, std::uint64_t seed,
                                   const std::filesystem::path& out_dir);

}  // namespace midistega

#endif
