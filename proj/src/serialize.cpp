#include "gapbench/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gapbench/error.hpp"
#include "gapbench/hash.hpp"

namespace gapbench {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_float9(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (!line.empty() && line.front() != '#') return true;
    }
    return false;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

[[noreturn]] void parse_fail(const LineReader& r, const std::string& what) {
  throw Error(Errc::parse_error, "grammar parse error at line " + std::to_string(r.line_no()) +
                                     ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t to_u64(std::string_view s, const LineReader& r) {
  std::uint64_t v = 0;
  if (s.empty()) parse_fail(r, "expected integer");
  for (char c : s) {
    if (c < '0' || c > '9') parse_fail(r, "expected integer, got '" + std::string(s) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

double to_double(std::string_view s, const LineReader& r) {
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) parse_fail(r, "expected real, got '" + tmp + "'");
  return v;
}

}  // namespace

std::string serialize_grammar(const Grammar& g) {
  std::ostringstream out;
  out << "gapbench-grammar-v1\n";
  out << "num_observables " << g.config.num_observables << "\n";
  out << "ambiguity " << g.config.ambiguity << "\n";
  out << "p_transition " << fmt_double(g.config.p_transition) << "\n";
  out << "p_end " << fmt_double(g.config.p_end) << "\n";
  out << "seed " << g.config.seed << "\n";
  out << "max_resample_attempts " << g.config.max_resample_attempts << "\n";
  out << "latent_count " << g.latent_count << "\n";
  out << "initial";
  for (std::uint32_t z : g.initial_set) out << " " << z;
  out << "\n";
  std::size_t edge_count = 0;
  for (const auto& row : g.edges) edge_count += row.size();
  out << "edges " << edge_count << "\n";
  for (std::uint32_t src = 0; src < g.latent_count; ++src) {
    for (const Edge& e : g.edges[src]) {
      out << "e " << src << " " << e.dst << " " << fmt_double(e.prob) << "\n";
    }
  }
  std::size_t end_count = 0;
  for (double p : g.end_prob) end_count += p > 0.0;
  out << "terminal_edges " << end_count << "\n";
  for (std::uint32_t src = 0; src < g.latent_count; ++src) {
    if (g.end_prob[src] > 0.0) out << "t " << src << " " << fmt_double(g.end_prob[src]) << "\n";
  }
  out << "end\n";
  return out.str();
}

Grammar parse_grammar(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  auto expect_kv = [&](std::string_view key) -> std::vector<std::string_view> {
    if (!reader.next(line)) parse_fail(reader, "unexpected end of input");
    auto parts = split_ws(line);
    if (parts.empty() || parts[0] != key) {
      parse_fail(reader, "expected '" + std::string(key) + "'");
    }
    return parts;
  };

  if (!reader.next(line) || line != "gapbench-grammar-v1") {
    parse_fail(reader, "unknown format header");
  }
  Grammar g;
  g.config.num_observables = static_cast<std::uint32_t>(to_u64(expect_kv("num_observables").at(1), reader));
  g.config.ambiguity = static_cast<std::uint32_t>(to_u64(expect_kv("ambiguity").at(1), reader));
  g.config.p_transition = to_double(expect_kv("p_transition").at(1), reader);
  g.config.p_end = to_double(expect_kv("p_end").at(1), reader);
  g.config.seed = to_u64(expect_kv("seed").at(1), reader);
  g.config.max_resample_attempts =
      static_cast<std::uint32_t>(to_u64(expect_kv("max_resample_attempts").at(1), reader));
  g.latent_count = static_cast<std::uint32_t>(to_u64(expect_kv("latent_count").at(1), reader));
  if (g.latent_count != std::uint64_t(g.config.num_observables) * g.config.ambiguity) {
    parse_fail(reader, "latent_count does not equal num_observables * ambiguity");
  }
  g.edges.assign(g.latent_count, {});
  g.end_prob.assign(g.latent_count, 0.0);

  auto initial = expect_kv("initial");
  for (std::size_t i = 1; i < initial.size(); ++i) {
    std::uint64_t z = to_u64(initial[i], reader);
    if (z >= g.latent_count) parse_fail(reader, "initial latent out of range");
    g.initial_set.push_back(static_cast<std::uint32_t>(z));
  }

  std::uint64_t edge_count = to_u64(expect_kv("edges").at(1), reader);
  for (std::uint64_t i = 0; i < edge_count; ++i) {
    auto parts = expect_kv("e");
    if (parts.size() != 4) parse_fail(reader, "edge line needs 3 fields");
    std::uint64_t src = to_u64(parts[1], reader);
    std::uint64_t dst = to_u64(parts[2], reader);
    double prob = to_double(parts[3], reader);
    if (src >= g.latent_count || dst >= g.latent_count) {
      parse_fail(reader, "edge endpoint out of range");
    }
    if (!(prob >= 0.0 && prob <= 1.0)) parse_fail(reader, "edge probability outside [0, 1]");
    auto& row = g.edges[src];
    if (!row.empty() && row.back().dst >= dst) parse_fail(reader, "edges must ascend per row");
    row.push_back({static_cast<std::uint32_t>(dst), prob});
  }

  std::uint64_t terminal_count = to_u64(expect_kv("terminal_edges").at(1), reader);
  for (std::uint64_t i = 0; i < terminal_count; ++i) {
    auto parts = expect_kv("t");
    if (parts.size() != 3) parse_fail(reader, "terminal edge line needs 2 fields");
    std::uint64_t src = to_u64(parts[1], reader);
    if (src >= g.latent_count) parse_fail(reader, "terminal edge source out of range");
    g.end_prob[src] = to_double(parts[2], reader);
  }
  expect_kv("end");

  for (std::uint32_t src = 0; src < g.latent_count; ++src) {
    double sum = g.end_prob[src];
    for (const Edge& e : g.edges[src]) sum += e.prob;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(Errc::parse_error,
                  "row " + std::to_string(src) + " probabilities sum to " + fmt_double(sum));
    }
  }
  return g;
}

std::uint64_t grammar_hash(const Grammar& g) { return fnv1a64(serialize_grammar(g)); }

std::string grammar_hash_hex(const Grammar& g) { return hex64(grammar_hash(g)); }

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

const char* tag_name(TokenTag tag) {
  switch (tag) {
    case TokenTag::NoiseGap:
      return "noise";
    case TokenTag::Terminal:
      return "term";
    default:
      return "sym";
  }
}

void append_token_json(std::string& out, const Token& tok) {
  char buf[96];
  if (tok.tag == TokenTag::NoiseGap) {
    out += "{\"t\":\"noise\",\"z\":";
    std::snprintf(buf, sizeof(buf), "%" PRIu32, tok.target);
    out += buf;
    out += ",\"v\":[";
    for (std::size_t i = 0; i < tok.noise.size(); ++i) {
      if (i) out += ',';
      out += fmt_float9(tok.noise[i]);
    }
    out += "]}";
    return;
  }
  std::snprintf(buf, sizeof(buf), "{\"t\":\"%s\",\"id\":%" PRIu32 ",\"z\":%" PRIu32 ",\"gap\":%s}",
                tag_name(tok.tag), tok.id, tok.target,
                tok.tag == TokenTag::NonGrammaticalGap ? "true" : "false");
  out += buf;
}

Token token_from_json(const nlohmann::json& j) {
  Token tok;
  const std::string& t = j.at("t").get_ref<const std::string&>();
  if (t == "noise") {
    tok.tag = TokenTag::NoiseGap;
    tok.target = j.at("z").get<std::uint32_t>();
    for (const auto& c : j.at("v")) tok.noise.push_back(c.get<float>());
    return tok;
  }
  if (t != "sym" && t != "term") {
    throw Error(Errc::parse_error, "unknown token type '" + t + "'");
  }
  tok.id = j.at("id").get<std::uint32_t>();
  tok.target = j.at("z").get<std::uint32_t>();
  if (t == "term") {
    tok.tag = TokenTag::Terminal;
  } else {
    tok.tag = j.at("gap").get<bool>() ? TokenTag::NonGrammaticalGap : TokenTag::Symbol;
  }
  return tok;
}

}  // namespace

std::string serialize_dataset_jsonl(const Dataset& ds, std::uint64_t ghash) {
  std::string out;
  char buf[64];
  for (const TokenStream& stream : ds.streams) {
    out += "{\"grammar\":\"";
    out += hex64(ghash);
    out += "\",\"seed\":";
    std::snprintf(buf, sizeof(buf), "%" PRIu64, stream.seed);
    out += buf;
    out += ",\"tokens\":[";
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
      if (i) out += ',';
      append_token_json(out, stream.tokens[i]);
    }
    out += "]}\n";
  }
  return out;
}

LoadedDataset parse_dataset_jsonl(std::string_view text) {
  LoadedDataset loaded;
  bool have_hash = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::parse_error, "record " + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      std::uint64_t h = 0;
      const std::string& hs = j.at("grammar").get_ref<const std::string&>();
      for (char c : hs) {
        h <<= 4;
        if (c >= '0' && c <= '9') h |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') h |= static_cast<std::uint64_t>(c - 'a' + 10);
        else throw Error(Errc::parse_error, "bad grammar hash");
      }
      if (have_hash && h != loaded.grammar_hash) {
        throw Error(Errc::hash_mismatch, "records reference different grammars");
      }
      loaded.grammar_hash = h;
      have_hash = true;
      TokenStream stream;
      stream.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& tj : j.at("tokens")) stream.tokens.push_back(token_from_json(tj));
      loaded.dataset.streams.push_back(std::move(stream));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error,
                  "record " + std::to_string(line_no) + ": " + std::string(e.what()));
    }
  }
  return loaded;
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(Errc::parse_error, "binary dataset truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_dataset_binary(const Dataset& ds, std::uint64_t ghash) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'G', 'B', 'D', '1'});
  put<std::uint64_t>(out, ghash);
  put<std::uint64_t>(out, ds.streams.size());
  for (const TokenStream& stream : ds.streams) {
    put<std::uint64_t>(out, stream.seed);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(stream.tokens.size()));
    for (const Token& tok : stream.tokens) {
      put<std::uint8_t>(out, static_cast<std::uint8_t>(tok.tag));
      put<std::uint32_t>(out, tok.id);
      put<std::uint32_t>(out, tok.target);
      put<std::uint16_t>(out, static_cast<std::uint16_t>(tok.noise.size()));
      for (float v : tok.noise) put<float>(out, v);
    }
  }
  return out;
}

LoadedDataset parse_dataset_binary(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "GBD1", 4) != 0) {
    throw Error(Errc::parse_error, "bad binary dataset magic");
  }
  pos = 4;
  LoadedDataset loaded;
  loaded.grammar_hash = take<std::uint64_t>(bytes, pos);
  std::uint64_t count = take<std::uint64_t>(bytes, pos);
  for (std::uint64_t i = 0; i < count; ++i) {
    TokenStream stream;
    stream.seed = take<std::uint64_t>(bytes, pos);
    std::uint32_t ntok = take<std::uint32_t>(bytes, pos);
    stream.tokens.reserve(ntok);
    for (std::uint32_t t = 0; t < ntok; ++t) {
      Token tok;
      std::uint8_t tag = take<std::uint8_t>(bytes, pos);
      if (tag > 3) throw Error(Errc::parse_error, "bad token tag");
      tok.tag = static_cast<TokenTag>(tag);
      tok.id = take<std::uint32_t>(bytes, pos);
      tok.target = take<std::uint32_t>(bytes, pos);
      std::uint16_t nn = take<std::uint16_t>(bytes, pos);
      tok.noise.reserve(nn);
      for (std::uint16_t c = 0; c < nn; ++c) tok.noise.push_back(take<float>(bytes, pos));
      stream.tokens.push_back(std::move(tok));
    }
    loaded.dataset.streams.push_back(std::move(stream));
  }
  if (pos != bytes.size()) throw Error(Errc::parse_error, "trailing bytes in binary dataset");
  return loaded;
}

std::string dataset_manifest_json(const Dataset& ds, std::uint64_t ghash,
                                  const std::string& records_file, DataFormat format) {
  nlohmann::ordered_json j;
  j["format"] = "gapbench-dataset";
  j["format_version"] = 1;
  j["task"] = ds.config.task;
  j["split"] = ds.config.split == Split::train ? "train" : "test";
  j["grammar_hash"] = hex64(ghash);
  j["num_sequences"] = ds.config.num_sequences;
  j["seed"] = ds.config.seed;
  j["t_min"] = ds.config.t_min;
  j["t_max"] = ds.config.t_max;
  j["n_min"] = ds.config.n_min;
  j["n_max"] = ds.config.n_max;
  j["gap_test"] = ds.config.gap_test;
  j["gamma"] = ds.config.gamma;
  j["p_gap"] = ds.config.p_gap;
  j["data_format"] = format == DataFormat::text ? "jsonl" : "binary";
  j["records_file"] = records_file;
  return j.dump(2) + "\n";
}

ManifestInfo parse_dataset_manifest(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse_error, "manifest is not valid JSON");
  try {
    ManifestInfo info;
    if (j.at("format").get<std::string>() != "gapbench-dataset") {
      throw Error(Errc::parse_error, "not a dataset manifest");
    }
    info.task = j.at("task").get<int>();
    info.split = j.at("split").get<std::string>() == "train" ? Split::train : Split::test;
    const std::string& hs = j.at("grammar_hash").get_ref<const std::string&>();
    for (char c : hs) {
      info.grammar_hash <<= 4;
      if (c >= '0' && c <= '9') info.grammar_hash |= static_cast<std::uint64_t>(c - '0');
      else if (c >= 'a' && c <= 'f') info.grammar_hash |= static_cast<std::uint64_t>(c - 'a' + 10);
      else throw Error(Errc::parse_error, "bad grammar hash in manifest");
    }
    info.num_sequences = j.at("num_sequences").get<std::uint64_t>();
    info.records_file = j.at("records_file").get<std::string>();
    info.format =
        j.at("data_format").get<std::string>() == "binary" ? DataFormat::binary : DataFormat::text;
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "manifest: " + std::string(e.what()));
  }
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::string& stem,
                                    const Dataset& ds, std::uint64_t ghash, DataFormat format) {
  std::filesystem::create_directories(dir);
  std::string records_file = stem + (format == DataFormat::text ? ".jsonl" : ".bin");
  std::filesystem::path records_path = dir / records_file;
  if (format == DataFormat::text) {
    write_text_file(records_path, serialize_dataset_jsonl(ds, ghash));
  } else {
    std::vector<std::uint8_t> bytes = serialize_dataset_binary(ds, ghash);
    std::ofstream out(records_path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot open " + records_path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io_error, "short write to " + records_path.string());
  }
  write_text_file(dir / (stem + ".manifest.json"),
                  dataset_manifest_json(ds, ghash, records_file, format));
  return records_path;
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path,
                           std::uint64_t expected_hash) {
  ManifestInfo info = parse_dataset_manifest(read_text_file(manifest_path));
  if (expected_hash != 0 && info.grammar_hash != expected_hash) {
    throw Error(Errc::hash_mismatch, "manifest grammar hash " + hex64(info.grammar_hash) +
                                         " does not match grammar " + hex64(expected_hash));
  }
  std::filesystem::path records = manifest_path.parent_path() / info.records_file;
  LoadedDataset loaded;
  if (info.format == DataFormat::text) {
    loaded = parse_dataset_jsonl(read_text_file(records));
  } else {
    std::string raw = read_text_file(records);
    std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
    loaded = parse_dataset_binary(bytes);
  }
  if (loaded.grammar_hash != info.grammar_hash && !loaded.dataset.streams.empty()) {
    throw Error(Errc::hash_mismatch, "records grammar hash does not match manifest");
  }
  loaded.dataset.config.task = info.task;
  loaded.dataset.config.split = info.split;
  loaded.dataset.config.num_sequences =
      static_cast<std::uint32_t>(loaded.dataset.streams.size());
  return loaded;
}

}  // namespace gapbench
