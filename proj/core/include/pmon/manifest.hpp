// pmon/manifest.hpp -- run provenance: version, seed, config, output hashes.
//
// Every experiment run ends by writing manifest.json next to its outputs.
// The manifest records the resolved configuration, the master seed, the
// library version, and the SHA-256 of every emitted file, so a run can be
// reproduced and verified byte for byte.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pmon {

inline constexpr char kVersion[] = "0.1.0";

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& text);

// Hash of a file's bytes. Throws ConfigError when the file cannot be read.
std::string sha256_file(const std::string& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
};

// Serializes the manifest document. `resolved_config` must be a JSON text;
// it is embedded as an object, not as a string.
std::string manifest_text(const std::string& resolved_config,
                          std::uint64_t seed,
                          const std::vector<ManifestEntry>& outputs);

}  // namespace pmon
