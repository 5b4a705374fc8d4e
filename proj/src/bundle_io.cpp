#include "midistega/bundle_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "midistega/binio.hpp"
#include "midistega/errors.hpp"
#include "midistega/midi_io.hpp"

namespace fs = std::filesystem;

namespace midistega {

namespace {

constexpr int kBundleFormatVersion = 1;

bool has_midi_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".mid" || ext == ".midi";
}

std::string melody_filename(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu.mid", index);
    return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void atomic_write_dir(const fs::path& target,
                      const std::function<void(const fs::path&)>& fill) {
    if (fs::exists(target))
        throw std::invalid_argument("output already exists: " + target.string());
    const fs::path parent = target.parent_path().empty() ? "." : target.parent_path();
    if (!fs::is_directory(parent))
        throw DirectoryNotFound("parent directory does not exist: " + parent.string());
    fs::path stage = target;
    stage += ".tmp";
    fs::remove_all(stage);
    fs::create_directory(stage);
    try {
        fill(stage);
        fs::rename(stage, target);
    } catch (...) {
        fs::remove_all(stage);
        throw;
    }
}

void write_bundle(const StegoBundle& bundle, const fs::path& dir, const std::string& model_digest,
                  double tempo_bpm, int program) {
    if (bundle.melodies.empty()) throw std::invalid_argument("bundle has no melodies");

    atomic_write_dir(dir, [&](const fs::path& stage) {
        nlohmann::json manifest;
        manifest["format_version"] = kBundleFormatVersion;
        manifest["cps"] = bundle.cps;
        manifest["max_events_per_melody"] = bundle.max_events_per_melody;
        manifest["model_digest"] = model_digest;
        manifest["melodies"] = nlohmann::json::array();

        for (std::size_t i = 0; i < bundle.melodies.size(); ++i) {
            const std::string name = melody_filename(i);
            write_file_bytes(stage / name, render_midi(bundle.melodies[i], tempo_bpm, program));
            nlohmann::json entry;
            entry["file"] = name;
            entry["embedded_bits"] = i < bundle.embedded_bits.size() ? bundle.embedded_bits[i] : 0;
            entry["data_notes"] = i < bundle.data_notes.size() ? bundle.data_notes[i] : 0;
            manifest["melodies"].push_back(std::move(entry));
        }

        std::ofstream out(stage / "manifest.json");
        out << manifest.dump(2) << '\n';
        if (!out) throw TruncatedFile("cannot write manifest.json");
    });
}

std::vector<MelodySequence> read_bundle(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw DirectoryNotFound("bundle directory does not exist: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_midi_extension(entry.path()))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return read_bundle_files(files);
}

std::vector<MelodySequence> read_bundle_files(const std::vector<fs::path>& files) {
    if (files.empty()) throw EmptyCorpus("bundle contains no MIDI files");
    std::vector<MelodySequence> melodies;
    melodies.reserve(files.size());
    for (const fs::path& file : files) {
        auto parsed = parse_and_extract(read_file_bytes(file), QuantizationConfig::lossless());
        if (parsed.size() != 1)
            throw MalformedMidi("bundle file must contain exactly one melody: " + file.string());
        melodies.push_back(std::move(parsed.front()));
    }
    return melodies;
}

}  // namespace midistega
