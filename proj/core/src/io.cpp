#include "probeset/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "probeset/errors.hpp"

namespace probeset {
namespace io {

namespace {

void dump_into(const JsonValue& value, std::string& out);

void dump_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;  // UTF-8 passes through
                }
        }
    }
    out += '"';
}

void dump_into(const JsonValue& value, std::string& out) {
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                out += "null";
            } else if constexpr (std::is_same_v<T, bool>) {
                out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out += std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                out += format_double(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                dump_string(v, out);
            } else if constexpr (std::is_same_v<T, JsonValue::Array>) {
                out += '[';
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ',';
                    dump_into(v[i], out);
                }
                out += ']';
            } else {
                out += '{';
                bool first = true;
                for (const auto& [key, item] : v) {
                    if (!first) out += ',';
                    first = false;
                    dump_string(key, out);
                    out += ':';
                    dump_into(item, out);
                }
                out += '}';
            }
        },
        value.value);
}

using nlohmann::json;

json parse_json(const std::string& bytes, int line_number = 0) {
    json parsed = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) throw DataError("malformed JSON", line_number);
    return parsed;
}

double as_finite_double(const json& j, const char* field, int line_number) {
    if (!j.is_number()) throw DataError(std::string(field) + " must be a number", line_number);
    double x = j.get<double>();
    if (!std::isfinite(x)) throw DataError(std::string(field) + " must be finite", line_number);
    return x;
}

Sign as_sign(const json& j, const char* field, int line_number) {
    if (j.is_number_integer()) {
        auto v = j.get<std::int64_t>();
        if (v == 1) return Sign{1};
        if (v == -1) return Sign{-1};
    }
    throw DataError(std::string(field) + " values must be +1 or -1", line_number);
}

ProbeIndex parse_key_checked(const std::string& key, FamilyKind expected, int line_number) {
    try {
        auto [kind, index] = parse_probe_key(key);
        if (kind != expected) throw DataError("probe key '" + key + "' does not match the record family", line_number);
        return index;
    } catch (const DomainError& e) {
        throw DataError(e.what(), line_number);
    }
}

JsonValue label_to_value(const Label& label) {
    if (const auto* perm = std::get_if<Permutation>(&label)) {
        JsonValue::Array items;
        for (std::int32_t item : perm->items) items.emplace_back(std::int64_t{item});
        return items;
    }
    if (const auto* bits = std::get_if<BitVector>(&label)) {
        JsonValue::Array values;
        for (Sign s : bits->bits) values.emplace_back(std::int64_t{s});
        return values;
    }
    return std::int64_t{std::get<TreeLeaf>(label).node};
}

Label label_from_value(const json& j, FamilyKind kind, int line_number) {
    switch (kind) {
        case FamilyKind::pairwise_ranking:
        case FamilyKind::rank_position: {
            if (!j.is_array()) throw DataError("label must be an item array", line_number);
            Permutation perm;
            for (const auto& item : j)
                perm.items.push_back(static_cast<std::int32_t>(
                    as_finite_double(item, "label", line_number)));
            return perm;
        }
        case FamilyKind::bitvector: {
            if (!j.is_array()) throw DataError("label must be a bit array", line_number);
            BitVector bits;
            for (const auto& bit : j) bits.bits.push_back(as_sign(bit, "label", line_number));
            return bits;
        }
        case FamilyKind::tree_ancestor: {
            if (!j.is_number_integer()) throw DataError("label must be a leaf id", line_number);
            return TreeLeaf{j.get<std::int32_t>()};
        }
    }
    throw DataError("unknown family", line_number);
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string dump(const JsonValue& value) {
    std::string out;
    dump_into(value, out);
    return out;
}

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
}

std::string format_family_tag(const ProbeFamily& family) {
    switch (family.kind) {
        case FamilyKind::pairwise_ranking: return "pairwise:" + std::to_string(family.k);
        case FamilyKind::rank_position: return "rank-position:" + std::to_string(family.k);
        case FamilyKind::bitvector: return "bitvector:" + std::to_string(family.k);
        case FamilyKind::tree_ancestor: return "tree";
    }
    throw DomainError("unknown family kind");
}

FamilyKind family_tag_kind(const std::string& tag) {
    if (tag.rfind("pairwise:", 0) == 0) return FamilyKind::pairwise_ranking;
    if (tag.rfind("rank-position:", 0) == 0) return FamilyKind::rank_position;
    if (tag.rfind("bitvector:", 0) == 0) return FamilyKind::bitvector;
    if (tag == "tree") return FamilyKind::tree_ancestor;
    throw DataError("unknown family tag '" + tag + "'");
}

ProbeFamily parse_family_tag(const std::string& tag, const std::optional<Tree>& tree) {
    FamilyKind kind = family_tag_kind(tag);
    if (kind == FamilyKind::tree_ancestor) {
        if (!tree) throw DataError("family 'tree' needs the tree from the dataset metadata");
        return make_tree_family(*tree);
    }
    auto colon = tag.find(':');
    std::int32_t k = 0;
    try {
        k = std::stoi(tag.substr(colon + 1));
    } catch (const std::exception&) {
        throw DataError("family tag '" + tag + "' has no item count");
    }
    switch (kind) {
        case FamilyKind::pairwise_ranking: return make_pairwise_family(k);
        case FamilyKind::rank_position: return make_rank_position_family(k);
        default: return make_bitvector_family(k);
    }
}

std::string record_to_json(const Example& example, const std::string& family_tag) {
    FamilyKind kind = family_tag_kind(family_tag);
    JsonValue::Object record;
    record.emplace("id", example.id);
    record.emplace("family", family_tag);

    JsonValue::Array queries;
    JsonValue::Object answers;
    for (const auto& [index, answer] : example.feedback.answers) {
        std::string key = format_probe_key(kind, index);
        queries.emplace_back(key);
        answers.emplace(key, std::int64_t{answer});
    }
    record.emplace("queries", std::move(queries));
    record.emplace("answers", std::move(answers));

    if (example.scores) {
        JsonValue::Object scores;
        for (const auto& [index, s] : example.scores->scores)
            scores.emplace(format_probe_key(kind, index), s);
        record.emplace("scores", std::move(scores));
    }
    if (example.acc) {
        JsonValue::Object acc;
        JsonValue::Object pred;
        for (const auto& [index, pi] : example.acc->accuracies)
            acc.emplace(format_probe_key(kind, index), pi);
        for (const auto& [index, p] : example.acc->predictions)
            pred.emplace(format_probe_key(kind, index), std::int64_t{p});
        record.emplace("acc", std::move(acc));
        record.emplace("pred", std::move(pred));
    }
    if (example.label) record.emplace("label", label_to_value(*example.label));
    return dump(JsonValue(std::move(record)));
}

Example record_from_json(const std::string& json_line, const std::string& expected_family_tag,
                         int line_number) {
    json j = parse_json(json_line, line_number);
    if (!j.is_object()) throw DataError("record must be a JSON object", line_number);

    std::string tag = j.value("family", "");
    if (tag.empty()) throw DataError("record has no family tag", line_number);
    if (!expected_family_tag.empty() && tag != expected_family_tag)
        throw DataError("family tag '" + tag + "' differs from '" + expected_family_tag + "'",
                        line_number);
    FamilyKind kind = family_tag_kind(tag);

    Example example;
    example.id = j.value("id", "");

    if (!j.contains("queries") || !j["queries"].is_array())
        throw DataError("record needs a queries array", line_number);
    if (!j.contains("answers") || !j["answers"].is_object())
        throw DataError("record needs an answers object", line_number);

    std::vector<ProbeIndex> queries;
    for (const auto& key : j["queries"]) {
        if (!key.is_string()) throw DataError("queries must be probe keys", line_number);
        queries.push_back(parse_key_checked(key.get<std::string>(), kind, line_number));
    }
    if (queries.empty()) throw DataError("record has no queries", line_number);

    for (const auto& [key, answer] : j["answers"].items()) {
        ProbeIndex index = parse_key_checked(key, kind, line_number);
        example.feedback.answers.emplace(index, as_sign(answer, "answers", line_number));
    }
    if (example.feedback.answers.size() != queries.size())
        throw DataError("answers must cover exactly the queries", line_number);
    for (const auto& q : queries)
        if (!example.feedback.answers.contains(q))
            throw DataError("answers must cover exactly the queries", line_number);

    if (j.contains("scores")) {
        if (!j["scores"].is_object()) throw DataError("scores must be an object", line_number);
        ScoreVector scores;
        for (const auto& [key, s] : j["scores"].items())
            scores.scores.emplace(parse_key_checked(key, kind, line_number),
                                  as_finite_double(s, "scores", line_number));
        example.scores = std::move(scores);
    }
    if (j.contains("acc") || j.contains("pred")) {
        if (!j.contains("acc") || !j.contains("pred") || !j["acc"].is_object() ||
            !j["pred"].is_object())
            throw DataError("acc and pred must be present together", line_number);
        AccuracyVector acc;
        for (const auto& [key, pi] : j["acc"].items()) {
            double v = as_finite_double(pi, "acc", line_number);
            if (v < 0.0 || v > 1.0) throw DataError("acc values must lie in [0,1]", line_number);
            acc.accuracies.emplace(parse_key_checked(key, kind, line_number), v);
        }
        for (const auto& [key, p] : j["pred"].items())
            acc.predictions.emplace(parse_key_checked(key, kind, line_number),
                                    as_sign(p, "pred", line_number));
        if (acc.accuracies.size() != acc.predictions.size())
            throw DataError("acc and pred must share one key set", line_number);
        for (const auto& [index, pi] : acc.accuracies)
            if (!acc.predictions.contains(index))
                throw DataError("acc and pred must share one key set", line_number);
        example.acc = std::move(acc);
    }
    if (!example.scores && !example.acc)
        throw DataError("record needs scores or acc/pred", line_number);
    if (j.contains("label")) example.label = label_from_value(j["label"], kind, line_number);
    return example;
}

std::string dataset_to_jsonl(const std::vector<Example>& examples,
                             const std::string& family_tag) {
    std::string out;
    for (const auto& example : examples) {
        out += record_to_json(example, family_tag);
        out += '\n';
    }
    return out;
}

Dataset dataset_from_jsonl(const std::string& bytes) {
    Dataset dataset;
    dataset.digest = fnv1a64_hex(bytes);
    std::istringstream stream(bytes);
    std::string line;
    int line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        if (line.empty()) continue;
        Example example = record_from_json(line, dataset.family_tag, line_number);
        if (dataset.family_tag.empty()) {
            json j = parse_json(line, line_number);
            dataset.family_tag = j["family"].get<std::string>();
        }
        dataset.examples.push_back(std::move(example));
    }
    return dataset;
}

std::string meta_to_json(const DatasetMeta& meta) {
    JsonValue::Object object;
    object.emplace("schema", std::int64_t{1});
    object.emplace("task", meta.task);
    object.emplace("family", meta.family_tag);
    object.emplace("seed", static_cast<std::int64_t>(meta.seed));
    object.emplace("count", static_cast<std::int64_t>(meta.count));
    object.emplace("generator", meta.generator);
    if (meta.tree) {
        JsonValue::Array parents;
        for (std::int32_t p : meta.tree->parents()) parents.emplace_back(std::int64_t{p});
        object.emplace("tree", std::move(parents));
    }
    return dump(JsonValue(std::move(object)));
}

namespace {

JsonValue to_json_value(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return nullptr;
        case json::value_t::boolean: return j.get<bool>();
        case json::value_t::number_integer:
        case json::value_t::number_unsigned: return j.get<std::int64_t>();
        case json::value_t::number_float: return j.get<double>();
        case json::value_t::string: return j.get<std::string>();
        case json::value_t::array: {
            JsonValue::Array array;
            for (const auto& item : j) array.push_back(to_json_value(item));
            return array;
        }
        case json::value_t::object: {
            JsonValue::Object object;
            for (const auto& [key, item] : j.items()) object.emplace(key, to_json_value(item));
            return object;
        }
        default: return nullptr;
    }
}

}  // namespace

DatasetMeta meta_from_json(const std::string& bytes) {
    json j = parse_json(bytes);
    if (!j.is_object()) throw DataError("metadata must be a JSON object");
    DatasetMeta meta;
    meta.task = j.value("task", "");
    meta.family_tag = j.value("family", "");
    meta.seed = j.value("seed", std::uint64_t{0});
    meta.count = j.value("count", std::uint64_t{0});
    if (j.contains("generator")) meta.generator = to_json_value(j["generator"]);
    if (j.contains("tree")) {
        if (!j["tree"].is_array()) throw DataError("tree must be a parent array");
        std::vector<std::int32_t> parents;
        for (const auto& p : j["tree"]) parents.push_back(p.get<std::int32_t>());
        try {
            meta.tree = Tree(std::move(parents));
        } catch (const DomainError& e) {
            throw DataError(e.what());
        }
    }
    return meta;
}

std::string meta_path_for(const std::string& dataset_path) {
    return dataset_path + ".meta.json";
}

std::string outcome_to_json(const CalibrationOutcome& outcome) {
    JsonValue::Object object;
    object.emplace("method", to_string(outcome.method));
    object.emplace("family", to_string(outcome.family));
    object.emplace("parameter", outcome.parameter);
    object.emplace("delta", outcome.delta);
    if (outcome.alpha) object.emplace("alpha", *outcome.alpha);
    if (outcome.epsilon) object.emplace("epsilon", *outcome.epsilon);
    if (outcome.alpha_fst) object.emplace("alpha_fst", *outcome.alpha_fst);
    if (!outcome.scores_sorted.empty()) {
        JsonValue::Array scores;
        for (double s : outcome.scores_sorted) scores.emplace_back(s);
        object.emplace("scores_sorted", std::move(scores));
        object.emplace("quantile_index", outcome.quantile_index);
    }
    if (!outcome.grid.empty()) {
        JsonValue::Array grid;
        for (double g : outcome.grid) grid.emplace_back(g);
        object.emplace("grid", std::move(grid));
        JsonValue::Array pvalues;
        for (double p : outcome.p_values) pvalues.emplace_back(p);
        object.emplace("p_values", std::move(pvalues));
        object.emplace("grid_index", outcome.grid_index);
    }
    object.emplace("abstain_all", outcome.abstain_all);
    if (!outcome.created_from.empty()) object.emplace("created_from", outcome.created_from);
    if (!outcome.warning.empty()) object.emplace("warning", outcome.warning);
    return dump(JsonValue(std::move(object)));
}

CalibrationOutcome outcome_from_json(const std::string& bytes) {
    json j = parse_json(bytes);
    if (!j.is_object()) throw DataError("outcome must be a JSON object");
    CalibrationOutcome outcome;
    try {
        outcome.method = method_from_name(j.value("method", ""));
        outcome.family = family_from_name(j.value("family", ""));
    } catch (const DomainError& e) {
        throw DataError(e.what());
    }
    if (!j.contains("parameter")) throw DataError("outcome has no parameter");
    outcome.parameter = j["parameter"].get<double>();
    outcome.delta = j.value("delta", 0.0);
    if (j.contains("alpha")) outcome.alpha = j["alpha"].get<double>();
    if (j.contains("epsilon")) outcome.epsilon = j["epsilon"].get<double>();
    if (j.contains("alpha_fst")) outcome.alpha_fst = j["alpha_fst"].get<double>();
    if (j.contains("scores_sorted"))
        for (const auto& s : j["scores_sorted"]) outcome.scores_sorted.push_back(s.get<double>());
    outcome.quantile_index = j.value("quantile_index", std::int64_t{0});
    if (j.contains("grid"))
        for (const auto& g : j["grid"]) outcome.grid.push_back(g.get<double>());
    if (j.contains("p_values"))
        for (const auto& p : j["p_values"]) outcome.p_values.push_back(p.get<double>());
    outcome.grid_index = j.value("grid_index", std::int64_t{0});
    outcome.abstain_all = j.value("abstain_all", false);
    outcome.created_from = j.value("created_from", "");
    outcome.warning = j.value("warning", "");
    return outcome;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << bytes;
    if (!out) throw DataError("write failed for '" + path + "'");
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

}  // namespace io
}  // namespace probeset
