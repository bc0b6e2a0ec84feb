#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hallufix {

using Json = nlohmann::ordered_json;

// One corpus record: a source document, the summary under test and, for
// training or evaluation, the gold reference summary.
struct Example {
  std::string id;
  std::string document;
  std::string summary;
  std::optional<std::string> reference;
  std::map<std::string, std::string> metadata;

  bool operator==(const Example&) const = default;
};

inline constexpr const char* kExampleSchemaVersion = "hallufix.example/1";

struct CorpusHandle {
  std::filesystem::path path;
  std::size_t count = 0;
  std::string schema_version = kExampleSchemaVersion;
};

struct LoadDiagnostics {
  std::size_t total_lines = 0;  // non-blank lines
  std::size_t skipped = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based
};

struct LoadResult {
  std::vector<Example> examples;
  LoadDiagnostics diagnostics;
  CorpusHandle handle;
};

Json to_json(const Example& example);
// Throws std::invalid_argument describing the first schema violation.
Example example_from_json(const Json& record);

// Reads one Example per line. Blank lines are ignored. In strict mode the
// first malformed line throws MalformedRecord; otherwise it is skipped and
// counted. Duplicate ids always throw.
LoadResult load_examples(const std::filesystem::path& path, bool strict);

// Reads every non-blank line as a JSON value (used for candidate, pair and
// outcome files, whose schemas are validated by their consumers).
std::vector<Json> load_records(const std::filesystem::path& path);

// One compact JSON object per line. Returns the number of records written.
std::size_t write_records(const std::filesystem::path& path,
                          std::span<const Json> records);
std::size_t write_examples(const std::filesystem::path& path,
                           std::span<const Example> examples);

}  // namespace hallufix
