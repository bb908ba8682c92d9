#pragma once

#include "cikf/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace cikf {

/// Library version string embedded in every file we write.
const char* version();

/// Provenance stamped into output files so results can be re-derived.
struct FileMeta {
  std::string version;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t model_hash = 0;
};

std::string to_hex(std::uint64_t v);
std::uint64_t from_hex(const std::string& s);

/// Model files are JSON objects whose keys match ModelSpec field names;
/// matrices are row-major nested arrays. An optional "meta" object carries
/// FileMeta.
std::string model_to_json(const ModelSpec& spec, const std::optional<FileMeta>& meta = std::nullopt);
ModelSpec model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelSpec& spec,
                const std::optional<FileMeta>& meta = std::nullopt);
ModelSpec load_model(const std::filesystem::path& path);
std::optional<FileMeta> load_model_meta(const std::filesystem::path& path);

std::uint64_t params_hash(const ModelParams& params);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cikf
