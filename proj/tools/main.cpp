#include <cstdint>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "midistega/binio.hpp"
#include "midistega/bundle_io.hpp"
#include "midistega/codec.hpp"
#include "midistega/errors.hpp"
#include "midistega/eval.hpp"
#include "midistega/midi_io.hpp"
#include "midistega/model.hpp"
#include "midistega/neural.hpp"
#include "midistega/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace midistega;

namespace {

struct GlobalOpts {
    std::string model_path;
    std::uint64_t seed = kDefaultSeed;
    bool json_output = false;
};

std::unique_ptr<ConditionalModel> load_any_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 4) {
        if (std::memcmp(bytes.data(), "AAGM", 4) == 0)
            return std::make_unique<NGramModel>(NGramModel::load(bytes));
        if (std::memcmp(bytes.data(), "AAGW", 4) == 0)
            return std::make_unique<NeuralModel>(NeuralModel::load(bytes));
    }
    throw BadMagic("unrecognized model file (expected an AAGM or AAGW header)");
}

std::unique_ptr<ConditionalModel> require_model(const GlobalOpts& g,
                                                std::vector<std::uint8_t>* bytes_out = nullptr) {
    if (g.model_path.empty()) throw CLI::RequiredError("--model");
    std::vector<std::uint8_t> bytes = read_file_bytes(g.model_path);
    auto model = load_any_model(bytes);
    if (bytes_out) *bytes_out = std::move(bytes);
    return model;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    write_file_bytes(tmp, bytes);
    fs::rename(tmp, path);
}

// --alpha is a decimal; the model wants an exact rational, so snap to
// millionths and reduce.
std::pair<std::uint32_t, std::uint32_t> alpha_to_rational(double alpha) {
    const auto num = static_cast<std::uint64_t>(std::llround(alpha * 1e6));
    if (!(alpha > 0.0) || alpha > 1000.0 || num == 0)
        throw CLI::ValidationError("--alpha", "must be in (0, 1000]");
    const std::uint64_t den = 1000000;
    const std::uint64_t g = std::gcd(num, den);
    return {static_cast<std::uint32_t>(num / g), static_cast<std::uint32_t>(den / g)};
}

void emit(const GlobalOpts& g, const json& doc, const std::string& text) {
    if (g.json_output)
        std::cout << doc.dump(2) << '\n';
    else
        std::cout << text;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f%%", fraction * 100.0);
    return buf;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

void print_rate_report(const GlobalOpts& g, const RateReport& r) {
    json doc;
    doc["n_melodies"] = r.n_melodies;
    doc["total_embedded_bits"] = r.total_embedded_bits;
    doc["mean_events"] = r.mean_notes;
    doc["mean_bits_per_note"] = r.mean_bits_per_note;
    doc["mean_bits_per_data_note"] = r.mean_bits_per_data_note;
    doc["embedding_rate"] = r.embedding_rate;
    doc["per_melody"] = json::array();
    for (std::size_t i = 0; i < r.n_melodies; ++i)
        doc["per_melody"].push_back({{"events", r.note_counts[i]},
                                     {"file_bits", r.file_bits[i]},
                                     {"embedded_bits", r.melody_bits[i]}});
    std::string text;
    text += "    #  events  file-bits  embedded-bits\n";
    for (std::size_t i = 0; i < r.n_melodies; ++i) {
        char line[128];
        std::snprintf(line, sizeof(line), "%5zu  %6llu  %9llu  %13llu\n", i,
                      static_cast<unsigned long long>(r.note_counts[i]),
                      static_cast<unsigned long long>(r.file_bits[i]),
                      static_cast<unsigned long long>(r.melody_bits[i]));
        text += line;
    }
    text += "melodies:                " + std::to_string(r.n_melodies) + "\n";
    text += "total embedded bits:     " + std::to_string(r.total_embedded_bits) + "\n";
    text += "mean events per melody:  " + fixed3(r.mean_notes) + "\n";
    text += "mean bits per note:      " + fixed3(r.mean_bits_per_note) + "\n";
    text += "mean bits per data note: " + fixed3(r.mean_bits_per_data_note) + "\n";
    text += "embedding rate:          " + percent(r.embedding_rate) + "\n";
    emit(g, doc, text);
}

void print_score_report(const GlobalOpts& g, const ScoreReport& r) {
    json doc;
    doc["per_sequence"] = r.per_sequence;
    doc["mean"] = r.mean;
    doc["mean_base2"] = r.mean_base2;
    std::string text;
    text += "    #  score\n";
    for (std::size_t i = 0; i < r.per_sequence.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof(line), "%5zu  %.6f\n", i, r.per_sequence[i]);
        text += line;
    }
    text += "sequences:        " + std::to_string(r.per_sequence.size()) + "\n";
    text += "mean score (ln):  " + fixed3(r.mean) + "\n";
    text += "mean score (b2):  " + fixed3(r.mean_base2) + "\n";
    emit(g, doc, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hides byte payloads inside generated monophonic MIDI melodies"};
    app.name("midistega");
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GlobalOpts g;
    app.add_option("--model", g.model_path, "Model file (n-gram counts or neural weights)");
    auto* seed_opt =
        app.add_option("--seed", g.seed, "Seed for every random choice (fixed default)");
    app.add_flag("--json-output", g.json_output, "Emit reports as JSON on stdout");

    // train
    auto* train_cmd = app.add_subcommand("train", "Count n-gram statistics over a MIDI corpus");
    train_cmd->fallthrough();
    std::string train_corpus, train_out;
    int train_order = 3;
    double train_alpha = 0.1;
    train_cmd->add_option("--corpus", train_corpus, "Directory of .mid/.midi files")->required();
    train_cmd->add_option("--order", train_order, "Context length + 1")->check(CLI::Range(1, 16));
    train_cmd->add_option("--alpha", train_alpha, "Additive smoothing constant");
    train_cmd->add_option("--out", train_out, "Model file to write")->required();
    train_cmd->callback([&] {
        auto [num, den] = alpha_to_rational(train_alpha);
        CorpusLoadResult corpus = load_corpus(train_corpus);
        NGramModel model = train_ngram(corpus.melodies, train_order, num, den);
        write_file_atomic(train_out, model.save());
        json doc{{"command", "train"},
                 {"melodies", corpus.melodies.size()},
                 {"files_loaded", corpus.files_loaded},
                 {"files_skipped", corpus.files_skipped},
                 {"order", train_order},
                 {"alpha_num", num},
                 {"alpha_den", den},
                 {"out", train_out}};
        emit(g, doc,
             "trained order-" + std::to_string(train_order) + " model on " +
                 std::to_string(corpus.melodies.size()) + " melodies (" +
                 std::to_string(corpus.files_loaded) + " files, " +
                 std::to_string(corpus.files_skipped) + " skipped) -> " + train_out + "\n");
    });

    // init-neural
    auto* ninit_cmd =
        app.add_subcommand("init-neural", "Write seeded random neural weights (untrained)");
    ninit_cmd->fallthrough();
    std::string ninit_out;
    int ninit_embed = 64, ninit_hidden = 64, ninit_att_hidden = 40, ninit_att_window = 40;
    ninit_cmd->add_option("--out", ninit_out, "Weight file to write")->required();
    ninit_cmd->add_option("--embed-dim", ninit_embed)->check(CLI::Range(1, 4096));
    ninit_cmd->add_option("--hidden-dim", ninit_hidden)->check(CLI::Range(1, 4096));
    ninit_cmd->add_option("--att-hidden", ninit_att_hidden)->check(CLI::Range(1, 4096));
    ninit_cmd->add_option("--att-window", ninit_att_window)->check(CLI::Range(1, 4096));
    ninit_cmd->callback([&] {
        NeuralModel model = NeuralModel::random_init(
            static_cast<std::uint16_t>(ninit_embed), static_cast<std::uint16_t>(ninit_hidden),
            static_cast<std::uint16_t>(ninit_att_hidden),
            static_cast<std::uint16_t>(ninit_att_window), g.seed);
        write_file_atomic(ninit_out, model.save());
        json doc{{"command", "init-neural"}, {"embed_dim", ninit_embed},
                 {"hidden_dim", ninit_hidden}, {"att_hidden", ninit_att_hidden},
                 {"att_window", ninit_att_window}, {"out", ninit_out}};
        emit(g, doc, "wrote random neural weights -> " + ninit_out + "\n");
    });

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "Generate melodies without a payload");
    gen_cmd->fallthrough();
    std::string gen_out, gen_mode = "sampled";
    int gen_count = 1, gen_max_events = 160, gen_program = 0;
    double gen_tempo = 120.0;
    gen_cmd->add_option("--count", gen_count, "Number of melodies")->check(CLI::Range(1, 100000));
    gen_cmd->add_option("--mode", gen_mode, "greedy or sampled")
        ->check(CLI::IsMember({"greedy", "sampled"}));
    gen_cmd->add_option("--out", gen_out, "Directory to create")->required();
    gen_cmd->add_option("--max-events", gen_max_events)->check(CLI::Range(1, 100000));
    gen_cmd->add_option("--tempo", gen_tempo, "Rendering tempo in BPM")
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--program", gen_program, "MIDI program number")
        ->check(CLI::Range(0, 127));
    gen_cmd->callback([&] {
        auto model = require_model(g);
        const GenerationMode mode =
            gen_mode == "greedy" ? GenerationMode::kGreedy : GenerationMode::kSampled;
        Rng rng(g.seed);
        const std::vector<std::uint16_t> starts = model->start_notes();
        atomic_write_dir(gen_out, [&](const fs::path& stage) {
            for (int i = 0; i < gen_count; ++i) {
                GenerationParams p{gen_max_events, rng.next_u64(), starts};
                char name[16];
                std::snprintf(name, sizeof(name), "%04d.mid", i);
                write_file_bytes(stage / name,
                                 render_midi(generate(*model, p, mode), gen_tempo, gen_program));
            }
        });
        json doc{{"command", "gen"}, {"count", gen_count}, {"mode", gen_mode}, {"out", gen_out}};
        emit(g, doc,
             "generated " + std::to_string(gen_count) + " " + gen_mode + " melodies -> " +
                 gen_out + "\n");
    });

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Hide a secret file in generated melodies");
    embed_cmd->fallthrough();
    std::string embed_in, embed_out;
    int embed_cps = 8, embed_max_events = 160, embed_program = 0;
    double embed_tempo = 120.0;
    embed_cmd->add_option("--cps", embed_cps, "Candidate pool size")->check(CLI::Range(2, 130));
    embed_cmd->add_option("--in", embed_in, "Secret file (raw bytes)")->required();
    embed_cmd->add_option("--out", embed_out, "Bundle directory to create")->required();
    embed_cmd->add_option("--max-events", embed_max_events)->check(CLI::Range(2, 100000));
    embed_cmd->add_option("--tempo", embed_tempo, "Rendering tempo in BPM")
        ->check(CLI::PositiveNumber);
    embed_cmd->add_option("--program", embed_program, "MIDI program number")
        ->check(CLI::Range(0, 127));
    embed_cmd->callback([&] {
        std::vector<std::uint8_t> model_bytes;
        auto model = require_model(g, &model_bytes);
        const std::vector<std::uint8_t> secret = read_file_bytes(embed_in);
        if (seed_opt->count() == 0)
            std::cerr << "warning: embedding with the default seed; anyone can re-derive the "
                         "start notes. Pass --seed for real use.\n";
        const StegoParams params{embed_cps, g.seed, embed_max_events, 4};
        const StegoBundle bundle = embed(*model, params, secret);
        write_bundle(bundle, embed_out, hex64(fnv1a64(model_bytes)), embed_tempo, embed_program);
        json doc{{"command", "embed"},
                 {"melodies", bundle.melodies.size()},
                 {"embedded_bits", bundle.total_embedded_bits()},
                 {"payload_bytes", secret.size()},
                 {"cps", embed_cps},
                 {"out", embed_out}};
        emit(g, doc,
             "embedded " + std::to_string(secret.size()) + " bytes into " +
                 std::to_string(bundle.melodies.size()) + " melodies (cps " +
                 std::to_string(embed_cps) + ") -> " + embed_out + "\n");
    });

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "Recover a secret from a bundle");
    extract_cmd->fallthrough();
    std::vector<std::string> extract_in;
    std::string extract_out;
    int extract_cps = 8;
    extract_cmd->add_option("--cps", extract_cps, "Candidate pool size used when embedding")
        ->check(CLI::Range(2, 130));
    extract_cmd->add_option("--in", extract_in, "Bundle directory, or .mid files in order")
        ->required()
        ->expected(-1);
    extract_cmd->add_option("--out", extract_out, "Secret file to write")->required();
    extract_cmd->callback([&] {
        auto model = require_model(g);
        std::vector<MelodySequence> melodies;
        if (extract_in.size() == 1 && fs::is_directory(extract_in.front())) {
            melodies = read_bundle(extract_in.front());
        } else {
            std::vector<fs::path> files(extract_in.begin(), extract_in.end());
            melodies = read_bundle_files(files);
        }
        const StegoParams params{extract_cps, g.seed, 160, 4};
        const std::vector<std::uint8_t> secret = extract_melodies(*model, params, melodies);
        write_file_atomic(extract_out, secret);
        json doc{{"command", "extract"}, {"payload_bytes", secret.size()}, {"out", extract_out}};
        emit(g, doc,
             "extracted " + std::to_string(secret.size()) + " bytes -> " + extract_out + "\n");
    });

    // eval rate | eval score
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation reports");
    eval_cmd->require_subcommand(1);
    eval_cmd->fallthrough();

    auto* rate_cmd = eval_cmd->add_subcommand("rate", "Embedding rate of a bundle directory");
    rate_cmd->fallthrough();
    std::string rate_in;
    rate_cmd->add_option("--in", rate_in, "Bundle directory (needs manifest.json)")->required();
    rate_cmd->callback([&] {
        const fs::path dir = rate_in;
        if (!fs::is_directory(dir))
            throw DirectoryNotFound("bundle directory does not exist: " + rate_in);
        json manifest;
        try {
            const auto bytes = read_file_bytes(dir / "manifest.json");
            manifest = json::parse(bytes.begin(), bytes.end());
        } catch (const json::exception&) {
            throw MalformedMidi("manifest.json missing or invalid in " + rate_in);
        }
        if (!g.model_path.empty() && manifest.contains("model_digest")) {
            const std::string digest = hex64(fnv1a64(read_file_bytes(g.model_path)));
            if (digest != manifest["model_digest"].get<std::string>())
                std::cerr << "warning: --model digest differs from the manifest\n";
        }
        std::vector<std::uint64_t> note_counts, file_bits, melody_bits, data_notes;
        for (const json& entry : manifest.at("melodies")) {
            const fs::path file = dir / entry.at("file").get<std::string>();
            const auto bytes = read_file_bytes(file);
            const auto parsed = parse_and_extract(bytes, QuantizationConfig::lossless());
            if (parsed.size() != 1)
                throw MalformedMidi("bundle file must contain exactly one melody: " +
                                    file.string());
            note_counts.push_back(parsed.front().size());
            file_bits.push_back(bytes.size() * 8);
            melody_bits.push_back(entry.at("embedded_bits").get<std::uint64_t>());
            data_notes.push_back(entry.value("data_notes", std::uint64_t{0}));
        }
        print_rate_report(g, rate_report_from_parts(std::move(note_counts), std::move(file_bits),
                                                    std::move(melody_bits), data_notes));
    });

    auto* score_cmd =
        eval_cmd->add_subcommand("score", "Mean negative log-likelihood under the model");
    score_cmd->fallthrough();
    std::string score_in;
    score_cmd->add_option("--in", score_in, "Directory of .mid files")->required();
    score_cmd->callback([&] {
        auto model = require_model(g);
        CorpusLoadResult corpus = load_corpus(score_in, QuantizationConfig::lossless());
        if (corpus.files_skipped > 0)
            std::cerr << "warning: skipped " << corpus.files_skipped << " unreadable files\n";
        print_score_report(g, likelihood_score(*model, corpus.melodies));
    });

    // abx
    auto* abx_cmd = app.add_subcommand("abx", "Build a blinded listening-test set");
    abx_cmd->fallthrough();
    std::string abx_out;
    int abx_stego = 50, abx_clean = 15, abx_max_events = 160;
    std::vector<int> abx_cps{2, 4, 8, 16, 32};
    abx_cmd->add_option("--out", abx_out, "Directory to create")->required();
    abx_cmd->add_option("--n-stego", abx_stego, "Stego samples")->check(CLI::Range(0, 100000));
    abx_cmd->add_option("--n-clean", abx_clean, "Clean samples")->check(CLI::Range(0, 100000));
    abx_cmd->add_option("--cps", abx_cps, "CPS values cycled across stego samples")
        ->check(CLI::Range(2, 130));
    abx_cmd->add_option("--max-events", abx_max_events)->check(CLI::Range(34, 100000));
    abx_cmd->callback([&] {
        auto model = require_model(g);
        std::vector<StegoParams> params_list;
        params_list.reserve(abx_cps.size());
        for (int cps : abx_cps) params_list.push_back({cps, 0, abx_max_events, 4});
        const auto key = make_abx_set(*model, params_list, abx_stego, abx_clean, g.seed, abx_out);
        json doc{{"command", "abx"},
                 {"files", key.size()},
                 {"stego", abx_stego},
                 {"clean", abx_clean},
                 {"out", abx_out}};
        emit(g, doc,
             "wrote " + std::to_string(key.size()) + " samples (" + std::to_string(abx_stego) +
                 " stego, " + std::to_string(abx_clean) + " clean) -> " + abx_out + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const StegaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
