#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gapbench/grammar.hpp"
#include "gapbench/tasks.hpp"

namespace gapbench {

enum class DataFormat : std::uint8_t { text, binary };

// Normative text form. Probabilities print with 17 significant digits so a
// parse/serialize round trip is byte-identical.
std::string serialize_grammar(const Grammar& g);
Grammar parse_grammar(std::string_view text);

std::uint64_t grammar_hash(const Grammar& g);
std::string grammar_hash_hex(const Grammar& g);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// One JSON record per line per sequence. Noise components print with 9
// significant digits, which reloads the stored floats exactly.
std::string serialize_dataset_jsonl(const Dataset& ds, std::uint64_t grammar_hash);
std::vector<std::uint8_t> serialize_dataset_binary(const Dataset& ds, std::uint64_t grammar_hash);

struct LoadedDataset {
  Dataset dataset;
  std::uint64_t grammar_hash = 0;
};

LoadedDataset parse_dataset_jsonl(std::string_view text);
LoadedDataset parse_dataset_binary(const std::vector<std::uint8_t>& bytes);

// Sidecar manifest describing one written split.
std::string dataset_manifest_json(const Dataset& ds, std::uint64_t grammar_hash,
                                  const std::string& records_file, DataFormat format);

struct ManifestInfo {
  int task = 0;
  Split split = Split::train;
  std::uint64_t grammar_hash = 0;
  std::uint64_t num_sequences = 0;
  std::string records_file;
  DataFormat format = DataFormat::text;
};

ManifestInfo parse_dataset_manifest(std::string_view text);

// Writes records plus "<stem>.manifest.json" next to them; returns the
// records path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::string& stem,
                                    const Dataset& ds, std::uint64_t grammar_hash,
                                    DataFormat format);

// Loads records named by the manifest at manifest_path. If expected_hash is
// nonzero and differs from the manifest's, throws hash_mismatch.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path,
                           std::uint64_t expected_hash = 0);

}  // namespace gapbench
