#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace obq {

// Reproducibility record written next to every CLI output file
// (`<output>.manifest.json`): enough to replay the exact run.
struct RunManifest {
  std::string command_line;
  std::uint64_t seed = 0;
  std::string version;
  // (path, SHA-256 hex digest) per input file, in command-line order.
  std::vector<std::pair<std::string, std::string>> inputs;
  std::string timestamp;  // ISO-8601 UTC
};

// SHA-256 of a file's bytes, lowercase hex.
std::string sha256_file_hex(const std::string& path);

// Current UTC time as ISO-8601 (e.g. 2026-01-31T12:00:00Z). Honors the
// SOURCE_DATE_EPOCH convention so archived runs can be byte-reproducible.
std::string iso8601_utc_now();

// Reconstructs a shell-replayable command line from argv.
std::string command_line_of(int argc, const char* const* argv);

void write_manifest(const std::string& manifest_path, const RunManifest& m);

// Writes `<output_path>.manifest.json`.
void write_manifest_alongside(const std::string& output_path,
                              const RunManifest& m);

}  // namespace obq
