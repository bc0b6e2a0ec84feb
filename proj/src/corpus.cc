#include "hallufix/corpus.h"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "hallufix/error.h"

namespace hallufix {

namespace {

constexpr const char* kModule = "corpus";

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

const std::string& required_text(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' is not a string");
  }
  return it->get_ref<const std::string&>();
}

}  // namespace

Json to_json(const Example& example) {
  Json record;
  record["id"] = example.id;
  record["document"] = example.document;
  record["summary"] = example.summary;
  if (example.reference) record["reference"] = *example.reference;
  if (!example.metadata.empty()) {
    Json meta = Json::object();
    for (const auto& [k, v] : example.metadata) meta[k] = v;
    record["metadata"] = std::move(meta);
  }
  return record;
}

Example example_from_json(const Json& record) {
  if (!record.is_object()) throw std::invalid_argument("record is not an object");
  Example ex;
  ex.id = required_text(record, "id");
  ex.document = required_text(record, "document");
  ex.summary = required_text(record, "summary");
  if (ex.id.empty()) throw std::invalid_argument("empty id");
  if (blank(ex.document)) throw std::invalid_argument("blank document");
  if (blank(ex.summary)) throw std::invalid_argument("blank summary");
  if (auto it = record.find("reference"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw std::invalid_argument("field 'reference' is not a string");
    }
    ex.reference = it->get<std::string>();
  }
  if (auto it = record.find("metadata"); it != record.end() && !it->is_null()) {
    if (!it->is_object()) {
      throw std::invalid_argument("field 'metadata' is not an object");
    }
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) {
        throw std::invalid_argument("metadata value '" + k +
                                    "' is not a string");
      }
      ex.metadata[k] = v.get<std::string>();
    }
  }
  return ex;
}

LoadResult load_examples(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileUnreadable, kModule,
                "cannot read " + path.string());
  }
  LoadResult result;
  result.handle.path = path;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    ++result.diagnostics.total_lines;
    Example ex;
    try {
      ex = example_from_json(Json::parse(line));
    } catch (const std::exception& e) {
      if (strict) {
        throw Error(ErrorCode::kMalformedRecord, kModule,
                    path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
      }
      ++result.diagnostics.skipped;
      result.diagnostics.malformed_lines.push_back(line_no);
      continue;
    }
    if (!seen.insert(ex.id).second) {
      throw Error(ErrorCode::kDuplicateId, kModule,
                  "duplicate id '" + ex.id + "' at " + path.string() + ":" +
                      std::to_string(line_no));
    }
    result.examples.push_back(std::move(ex));
  }
  result.handle.count = result.examples.size();
  return result;
}

std::vector<Json> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileUnreadable, kModule,
                "cannot read " + path.string());
  }
  std::vector<Json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      records.push_back(Json::parse(line));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, kModule,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return records;
}

std::size_t write_records(const std::filesystem::path& path,
                          std::span<const Json> records) {
  std::string buffer;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      buffer += records[i].dump(-1, ' ', false, Json::error_handler_t::strict);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kSerializationFailure, kModule,
                  "record " + std::to_string(i) + ": " + e.what());
    }
    buffer.push_back('\n');
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, kModule,
                "cannot write " + path.string());
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.flush();
  if (!out) {
    throw Error(ErrorCode::kIoFailure, kModule,
                "write failed for " + path.string());
  }
  return records.size();
}

std::size_t write_examples(const std::filesystem::path& path,
                           std::span<const Example> examples) {
  std::vector<Json> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) records.push_back(to_json(ex));
  return write_records(path, records);
}

}  // namespace hallufix
