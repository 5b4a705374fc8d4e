#ifndef MIDISTEGA_BUNDLE_IO_HPP
#define MIDISTEGA_BUNDLE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "midistega/codec.hpp"

namespace midistega {

// FNV-1a, used to fingerprint the model file inside bundle manifests.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::string hex64(std::uint64_t value);

// Populates `target` atomically: `fill` writes into a temporary sibling
// directory which is renamed to `target` on success, so a failing run leaves
// no partial output. Throws std::invalid_argument if `target` exists.
void atomic_write_dir(const std::filesystem::path& target,
                      const std::function<void(const std::filesystem::path&)>& fill);

// On-disk bundle layout: NNNN.mid (zero-padded, order-significant) plus a
// manifest.json recording format version, cps, max_events_per_melody, the
// model-file digest and per-melody embedded-bit counts. The manifest is
// advisory: extraction works from the .mid files alone.
void write_bundle(const StegoBundle& bundle, const std::filesystem::path& dir,
                  const std::string& model_digest, double tempo_bpm = 120.0, int program = 0);

// Reads the melodies back in filename order; every .mid file must contain
// exactly one melody. The manifest, if present, is ignored here.
std::vector<MelodySequence> read_bundle(const std::filesystem::path& dir);
std::vector<MelodySequence> read_bundle_files(const std::vector<std::filesystem::path>& files);

}  // namespace midistega

#endif
