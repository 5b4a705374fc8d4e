#include "midistega/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "midistega/binio.hpp"
#include "midistega/bundle_io.hpp"
#include "midistega/errors.hpp"
#include "midistega/midi_io.hpp"
#include "midistega/rng.hpp"

namespace fs = std::filesystem;

namespace midistega {

RateReport rate_report_from_parts(std::vector<std::uint64_t> note_counts,
                                  std::vector<std::uint64_t> file_bits,
                                  std::vector<std::uint64_t> melody_bits,
                                  std::span<const std::uint64_t> data_notes) {
    if (note_counts.empty()) throw EmptyInput("no melodies to rate");
    if (file_bits.size() != note_counts.size() || melody_bits.size() != note_counts.size())
        throw std::invalid_argument("per-melody vectors disagree in length");

    RateReport r;
    r.n_melodies = note_counts.size();
    r.note_counts = std::move(note_counts);
    r.file_bits = std::move(file_bits);
    r.melody_bits = std::move(melody_bits);

    std::uint64_t notes = 0, bits_on_disk = 0, total_data_notes = 0;
    for (std::size_t i = 0; i < r.n_melodies; ++i) {
        notes += r.note_counts[i];
        bits_on_disk += r.file_bits[i];
        r.total_embedded_bits += r.melody_bits[i];
    }
    for (std::uint64_t d : data_notes) total_data_notes += d;

    const double n = static_cast<double>(r.n_melodies);
    r.mean_notes = static_cast<double>(notes) / n;
    const double bits_per_melody = static_cast<double>(r.total_embedded_bits) / n;
    if (r.mean_notes > 1.0) r.mean_bits_per_note = bits_per_melody / (r.mean_notes - 1.0);
    if (total_data_notes > 0)
        r.mean_bits_per_data_note =
            static_cast<double>(r.total_embedded_bits) / static_cast<double>(total_data_notes);
    if (bits_on_disk > 0)
        r.embedding_rate =
            static_cast<double>(r.total_embedded_bits) / static_cast<double>(bits_on_disk);
    return r;
}

RateReport embedding_rate(std::span<const StegoBundle> bundles, double tempo_bpm, int program) {
    std::vector<std::uint64_t> note_counts, file_bits, melody_bits, data_notes;
    for (const StegoBundle& b : bundles) {
        for (std::size_t i = 0; i < b.melodies.size(); ++i) {
            note_counts.push_back(b.melodies[i].size());
            file_bits.push_back(render_midi(b.melodies[i], tempo_bpm, program).size() * 8);
            melody_bits.push_back(i < b.embedded_bits.size() ? b.embedded_bits[i] : 0);
            data_notes.push_back(i < b.data_notes.size() ? b.data_notes[i] : 0);
        }
    }
    if (note_counts.empty()) throw EmptyInput("no melodies to rate");
    return rate_report_from_parts(std::move(note_counts), std::move(file_bits),
                                  std::move(melody_bits), data_notes);
}

double rate_from_published_means(double k_bar, double l_bar, double b_bar_bytes) {
    if (b_bar_bytes <= 0.0) throw std::invalid_argument("mean file size must be positive");
    return (l_bar - 1.0) * k_bar / (8.0 * b_bar_bytes);
}

ScoreReport likelihood_score(const ConditionalModel& model,
                             std::span<const MelodySequence> sequences) {
    if (sequences.empty()) throw EmptyInput("no sequences to score");
    ScoreReport report;
    report.per_sequence.reserve(sequences.size());
    double total = 0.0;
    for (const MelodySequence& seq : sequences) {
        if (seq.size() < 2)
            throw SequenceTooShort("scoring needs at least two events per sequence");
        auto session = model.new_session();
        session->feed(seq.events.front());
        double nll = 0.0;
        for (std::size_t j = 1; j < seq.events.size(); ++j) {
            const Distribution dist = session->next();
            const double denom = static_cast<double>(dist.total_weight());
            double p = 0.0;
            for (const auto& e : dist.entries)
                if (e.symbol == seq.events[j].symbol) {
                    p = static_cast<double>(e.weight) / denom;
                    break;
                }
            nll -= std::log(p);
            session->feed(seq.events[j]);
        }
        const double score = nll / static_cast<double>(seq.size() - 1);
        report.per_sequence.push_back(score);
        total += score;
    }
    report.mean = total / static_cast<double>(sequences.size());
    report.mean_base2 = report.mean / std::log(2.0);
    return report;
}

namespace {

std::string sample_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%03zu.mid", index);
    return buf;
}

}  // namespace

std::vector<AbxEntry> make_abx_set(const ConditionalModel& model,
                                   std::span<const StegoParams> params_list, int n_stego,
                                   int n_clean, std::uint64_t seed, const fs::path& out_dir) {
    if (n_stego < 0 || n_clean < 0) throw std::invalid_argument("sample counts must be >= 0");
    if (n_stego > 0 && params_list.empty())
        throw std::invalid_argument("stego samples requested but no parameters given");
    for (const StegoParams& p : params_list)
        if (!p.valid() || p.max_events_per_melody < 2)
            throw std::invalid_argument("invalid stego parameters in list");

    Rng rng(seed);
    struct Sample {
        MelodySequence melody;
        std::string label;
        int cps = 0;
    };
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(n_stego + n_clean));

    for (int i = 0; i < n_stego; ++i) {
        StegoParams params = params_list[static_cast<std::size_t>(i) % params_list.size()];
        // Random payload of 4..12 bytes, clamped so frame + header fit one
        // melody even at one bit per note.
        std::uint64_t len = 4 + rng.below(9);
        if (params.max_events_per_melody > 33) {
            const auto fit = static_cast<std::uint64_t>((params.max_events_per_melody - 33) / 8);
            if (fit > 0 && len > fit) len = fit;
        } else {
            len = 1;
        }
        std::vector<std::uint8_t> payload(len);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng.below(256));
        params.seed = rng.next_u64();
        StegoBundle bundle = embed(model, params, payload);
        samples.push_back({std::move(bundle.melodies.front()), "stego", params.cps});
    }

    for (int i = 0; i < n_clean; ++i) {
        GenerationParams gp;
        // Bar-aligned lengths in the same range stego melodies land in, so
        // length alone does not give the label away.
        gp.max_events = static_cast<int>(16 * (5 + rng.below(6)));
        gp.seed = rng.next_u64();
        gp.start_notes = model.start_notes();
        samples.push_back({generate(model, gp, GenerationMode::kSampled), "clean", 0});
    }

    for (std::size_t i = samples.size(); i > 1; --i)
        std::swap(samples[i - 1], samples[rng.below(i)]);

    std::vector<AbxEntry> key;
    key.reserve(samples.size());
    atomic_write_dir(out_dir, [&](const fs::path& stage) {
        fs::create_directory(stage / "samples");
        std::ofstream csv(stage / "answer_key.csv");
        csv << "filename,label,cps\n";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const std::string name = sample_filename(i);
            write_file_bytes(stage / "samples" / name, render_midi(samples[i].melody));
            csv << name << ',' << samples[i].label << ',' << samples[i].cps << '\n';
            key.push_back({name, samples[i].label, samples[i].cps});
        }
        if (!csv) throw TruncatedFile("cannot write answer_key.csv");
    });
    return key;
}

}  // namespace midistega
