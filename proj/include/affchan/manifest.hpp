#pragma once

#include <filesystem>
#include <string>

#include "affchan/types.hpp"

namespace affchan {

// Parses and validates a dataset manifest. Referenced paths are recorded as-is;
// existence is checked lazily by the consumers. Relative paths inside the
// manifest are resolved against the manifest's own directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Parse from an already-loaded JSON text (paths resolved against base_dir).
DatasetManifest parse_manifest(const std::string& json_text,
                               const std::filesystem::path& base_dir);

std::string serialize_manifest(const DatasetManifest& m);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

}  // namespace affchan
