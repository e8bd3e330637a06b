#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "probeset/calibrate.hpp"
#include "probeset/probes.hpp"

namespace probeset {
namespace io {

// Minimal JSON value with deterministic serialization: object keys come out
// sorted (std::map), doubles are printed with %.17g so reruns are
// byte-identical and round-trip exactly. Parsing is delegated to a vendored
// reader in the implementation.
struct JsonValue {
    using Array = std::vector<JsonValue>;
    using Object = std::map<std::string, JsonValue>;
    std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Array, Object> value =
        nullptr;

    JsonValue() = default;
    JsonValue(std::nullptr_t) : value(nullptr) {}
    JsonValue(bool b) : value(b) {}
    JsonValue(std::int64_t i) : value(i) {}
    JsonValue(int i) : value(static_cast<std::int64_t>(i)) {}
    JsonValue(std::uint64_t i) : value(static_cast<std::int64_t>(i)) {}
    JsonValue(double d) : value(d) {}
    JsonValue(const char* s) : value(std::string(s)) {}
    JsonValue(std::string s) : value(std::move(s)) {}
    JsonValue(Array a) : value(std::move(a)) {}
    JsonValue(Object o) : value(std::move(o)) {}
};

std::string dump(const JsonValue& value);
std::string format_double(double x);  // %.17g

// FNV-1a 64-bit of the raw bytes, hex-encoded: the dataset digest recorded in
// calibration outcomes.
std::string fnv1a64_hex(std::string_view bytes);

// Family tags on the wire: "pairwise:K", "rank-position:K", "bitvector:K",
// "tree" (tree structure travels in the dataset's sidecar metadata).
std::string format_family_tag(const ProbeFamily& family);
FamilyKind family_tag_kind(const std::string& tag);
ProbeFamily parse_family_tag(const std::string& tag, const std::optional<Tree>& tree);

// One weakly supervised record per JSONL line. Wire fields: id, family,
// queries (probe keys), answers (key -> +/-1), optional scores (key ->
// float), optional acc/pred (accuracy estimates and hard calls), optional
// label (ground truth, family-specific encoding).
std::string record_to_json(const Example& example, const std::string& family_tag);
Example record_from_json(const std::string& json_line, const std::string& expected_family_tag,
                         int line_number);

struct Dataset {
    std::string family_tag;
    std::vector<Example> examples;
    std::string digest;  // of the raw file bytes
};

// Sidecar metadata written next to a generated dataset.
struct DatasetMeta {
    std::string task;
    std::string family_tag;
    std::uint64_t seed = 0;
    std::uint64_t count = 0;
    JsonValue generator;  // generator configuration, free-form object
    std::optional<Tree> tree;
};

std::string dataset_to_jsonl(const std::vector<Example>& examples, const std::string& family_tag);

// Parses a whole JSONL payload; every record must carry the same family tag
// and satisfy the record invariants (nonempty queries, answers matching
// queries, accuracies covering queries when present). Throws DataError with
// the offending line.
Dataset dataset_from_jsonl(const std::string& bytes);

std::string meta_to_json(const DatasetMeta& meta);
DatasetMeta meta_from_json(const std::string& bytes);

// Conventional sidecar path: "<dataset>.meta.json".
std::string meta_path_for(const std::string& dataset_path);

std::string outcome_to_json(const CalibrationOutcome& outcome);
CalibrationOutcome outcome_from_json(const std::string& bytes);

// Whole-file helpers; throw DataError on I/O failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
bool file_exists(const std::string& path);

}  // namespace io
}  // namespace probeset
