#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "softseq/dist.hpp"
#include "softseq/errors.hpp"
#include "softseq/numeric.hpp"
#include "softseq/seqspace.hpp"
#include "softseq/table.hpp"
#include "softseq/train.hpp"

namespace softseq {

using Json = nlohmann::json;

namespace detail {

/** doubles round-trip as JSON numbers; -inf (which JSON lacks) as "-inf". */
inline Json value_to_json(double v) {
  if (v == kNegInf) return Json("-inf");
  if (!std::isfinite(v)) throw SchemaError("cannot serialize non-finite value");
  return Json(v);
}

inline double value_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "-inf") return kNegInf;
  throw SchemaError("expected a number or \"-inf\"");
}

inline void require_keys(const Json& j, const std::set<std::string>& required,
                         const std::set<std::string>& optional, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!required.contains(key) && !optional.contains(key)) {
      throw SchemaError("unknown field \"" + key + "\" in " + where);
    }
  }
  for (const std::string& key : required) {
    if (!j.contains(key)) throw SchemaError(where + " is missing field \"" + key + "\"");
  }
}

}  // namespace detail

inline Json to_json(const VocabSpec& spec) {
  return Json{{"vocab_size", spec.vocab_size},
              {"max_len", spec.max_len},
              {"mode", spec.mode == LengthMode::kVariableLen ? "variable" : "fixed"}};
}

inline VocabSpec vocab_spec_from_json(const Json& j) {
  detail::require_keys(j, {"vocab_size", "max_len", "mode"}, {}, "space");
  VocabSpec spec;
  if (!j["vocab_size"].is_number_integer() || !j["max_len"].is_number_integer()) {
    throw SchemaError("vocab_size and max_len must be integers");
  }
  spec.vocab_size = j["vocab_size"].get<std::int32_t>();
  spec.max_len = j["max_len"].get<std::int32_t>();
  const std::string mode = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
  if (mode == "variable") {
    spec.mode = LengthMode::kVariableLen;
  } else if (mode == "fixed") {
    spec.mode = LengthMode::kFixedLen;
  } else {
    throw SchemaError("mode must be \"variable\" or \"fixed\"");
  }
  validate(spec);
  return spec;
}

/** Sequences serialize as plain token-id arrays; EOS is the integer V. */
inline Json to_json(const Sequence& y) {
  Json arr = Json::array();
  for (TokenId t : y) arr.push_back(t);
  return arr;
}

inline Sequence sequence_from_json(const Json& j, const VocabSpec& spec) {
  if (!j.is_array()) throw SchemaError("sequence must be a JSON array of token ids");
  Sequence y;
  for (const Json& t : j) {
    if (!t.is_number_integer()) throw SchemaError("sequence tokens must be integers");
    y.push_back(t.get<TokenId>());
  }
  validate_sequence(spec, y);
  return y;
}

namespace detail {

template <class Tag>
inline Json table_to_json_impl(const StateActionTable<Tag>& t, const std::string& kind) {
  Json rows = Json::object();
  for (StateId s = 0; s < t.tree.state_count(); ++s) {
    Json row = Json::array();
    for (TokenId a = 0; a < t.tree.num_actions(); ++a) row.push_back(value_to_json(t.at(s, a)));
    rows[std::to_string(s)] = std::move(row);
  }
  return Json{{"kind", kind}, {"space", to_json(t.tree.spec())}, {"rows", std::move(rows)}};
}

inline std::vector<double> rows_from_json(const Json& j, const PrefixTree& tree,
                                          const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " rows must be an object keyed by state id");
  const std::size_t num_actions = static_cast<std::size_t>(tree.num_actions());
  std::vector<double> values(static_cast<std::size_t>(tree.state_count()) * num_actions, kNegInf);
  std::vector<bool> seen(static_cast<std::size_t>(tree.state_count()), false);
  for (const auto& [key, row] : j.items()) {
    StateId s = -1;
    try {
      std::size_t used = 0;
      s = std::stoll(key, &used);
      if (used != key.size()) s = -1;
    } catch (const std::exception&) {
      s = -1;
    }
    if (s < 0 || s >= tree.state_count()) {
      throw SchemaError("bad state id \"" + key + "\" in " + where);
    }
    if (!row.is_array() || row.size() != num_actions) {
      throw SchemaError("row for state " + key + " must have " +
                        std::to_string(num_actions) + " entries");
    }
    for (std::size_t a = 0; a < num_actions; ++a) {
      values[static_cast<std::size_t>(s) * num_actions + a] = value_from_json(row[a]);
    }
    seen[static_cast<std::size_t>(s)] = true;
  }
  for (StateId s = 0; s < tree.state_count(); ++s) {
    if (!seen[static_cast<std::size_t>(s)]) {
      throw SchemaError("missing row for state " + std::to_string(s) + " in " + where);
    }
  }
  return values;
}

}  // namespace detail

inline Json to_json(const RewardTable& r) { return detail::table_to_json_impl(r, "reward"); }
inline Json to_json(const LogitTable& q) { return detail::table_to_json_impl(q, "logits"); }
inline Json to_json(const NextTokenPolicy& pi) {
  Json rows = Json::object();
  for (StateId s = 0; s < pi.tree.state_count(); ++s) {
    Json row = Json::array();
    for (TokenId a = 0; a < pi.tree.num_actions(); ++a) {
      row.push_back(detail::value_to_json(pi.at(s, a)));
    }
    rows[std::to_string(s)] = std::move(row);
  }
  return Json{{"kind", "policy"}, {"space", to_json(pi.tree.spec())}, {"rows", std::move(rows)}};
}

inline std::string table_kind(const Json& j) {
  detail::require_keys(j, {"kind", "space", "rows"}, {}, "table document");
  if (!j["kind"].is_string()) throw SchemaError("table kind must be a string");
  return j["kind"].get<std::string>();
}

inline RewardTable reward_table_from_json(const Json& j,
                                          std::int64_t budget = default_state_budget()) {
  if (table_kind(j) != "reward") throw SchemaError("expected a table of kind \"reward\"");
  const PrefixTree tree = build_tree(vocab_spec_from_json(j["space"]), budget);
  return RewardTable{tree, detail::rows_from_json(j["rows"], tree, "reward table")};
}

inline LogitTable logit_table_from_json(const Json& j,
                                        std::int64_t budget = default_state_budget()) {
  if (table_kind(j) != "logits") throw SchemaError("expected a table of kind \"logits\"");
  const PrefixTree tree = build_tree(vocab_spec_from_json(j["space"]), budget);
  return LogitTable{tree, detail::rows_from_json(j["rows"], tree, "logit table")};
}

inline NextTokenPolicy policy_from_json(const Json& j,
                                        std::int64_t budget = default_state_budget()) {
  if (table_kind(j) != "policy") throw SchemaError("expected a table of kind \"policy\"");
  const PrefixTree tree = build_tree(vocab_spec_from_json(j["space"]), budget);
  return make_policy(tree, detail::rows_from_json(j["rows"], tree, "policy table"));
}

inline Json to_json(const SeqDistribution& p) {
  Json logp = Json::array();
  for (double v : p.logp) logp.push_back(detail::value_to_json(v));
  return Json{{"kind", "seq_distribution"}, {"space", to_json(p.space)},
              {"logp", std::move(logp)}};
}

inline SeqDistribution seq_distribution_from_json(const Json& j,
                                                  std::int64_t budget = default_state_budget()) {
  detail::require_keys(j, {"kind", "space", "logp"}, {}, "distribution document");
  if (!j["kind"].is_string() || j["kind"].get<std::string>() != "seq_distribution") {
    throw SchemaError("expected a document of kind \"seq_distribution\"");
  }
  const VocabSpec spec = vocab_spec_from_json(j["space"]);
  const std::int64_t count = sequence_count(spec, budget);
  if (!j["logp"].is_array() || static_cast<std::int64_t>(j["logp"].size()) != count) {
    throw SchemaError("logp must be an array with one entry per response");
  }
  std::vector<double> logp(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < logp.size(); ++i) {
    logp[i] = detail::value_from_json(j["logp"][i]);
  }
  return make_seq_distribution(spec, std::move(logp));
}

namespace detail {

/** Fixed-format float for CSV cells: shortest round-trip via %.17g. */
inline std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/** Strict full-cell double parse; unlike stod this accepts subnormals. */
inline double parse_csv_double(const std::string& cell) {
  double v = 0.0;
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), last, v);
  if (ec != std::errc() || ptr != last) throw SchemaError("bad number \"" + cell + "\"");
  return v;
}

inline std::int64_t parse_csv_int(const std::string& cell) {
  std::int64_t v = 0;
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), last, v);
  if (ec != std::errc() || ptr != last) throw SchemaError("bad integer \"" + cell + "\"");
  return v;
}

}  // namespace detail

inline constexpr const char* kRunRecordHeader = "step,risk,gap,dist_before,dist_after";

inline std::string run_record_to_csv(const RunRecord& record) {
  std::ostringstream out;
  out << kRunRecordHeader << "\n";
  for (const RunRow& row : record) {
    out << row.step << ',' << detail::csv_double(row.risk) << ','
        << detail::csv_double(row.gap) << ',' << detail::csv_double(row.dist_before) << ','
        << detail::csv_double(row.dist_after) << "\n";
  }
  return out.str();
}

inline RunRecord run_record_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRunRecordHeader) {
    throw SchemaError("run record CSV must start with header \"" +
                      std::string(kRunRecordHeader) + "\"");
  }
  RunRecord record;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunRow row;
    std::istringstream cells(line);
    std::string cell;
    const auto next = [&]() {
      if (!std::getline(cells, cell, ',')) throw SchemaError("short row in run record CSV");
      return cell;
    };
    try {
      row.step = detail::parse_csv_int(next());
      row.risk = detail::parse_csv_double(next());
      row.gap = detail::parse_csv_double(next());
      row.dist_before = detail::parse_csv_double(next());
      row.dist_after = detail::parse_csv_double(next());
    } catch (const SchemaError&) {
      throw SchemaError("bad cell in run record CSV row \"" + line + "\"");
    }
    record.push_back(row);
  }
  return record;
}

/** FNV-1a 64-bit content digest, hex encoded. */
inline std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

inline Json load_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("malformed JSON in " + path.string());
  return j;
}

}  // namespace softseq
