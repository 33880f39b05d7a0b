#include "dtest/formats.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dtest/error.hpp"

namespace dtest::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::string_view kFmatMagic = "FMAT1";
constexpr std::string_view kAtrcMagic = "ATRC1";

[[noreturn]] void malformed_at_offset(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::MalformedFile, "offset " + std::to_string(offset) + ": " + what);
}

[[noreturn]] void malformed_at_line(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line) + ": " + what);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.substr(0, magic.size()) != magic) {
      malformed_at_offset(0, "expected magic \"" + std::string(magic) + "\"");
    }
    pos_ = magic.size();
  }

  template <typename T>
  T read(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) malformed_at_offset(pos_, std::string("truncated ") + what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string read_cstring(const char* what) {
    const auto end = bytes_.find('\0', pos_);
    if (end == std::string_view::npos) malformed_at_offset(pos_, std::string("unterminated ") + what);
    std::string s(bytes_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  std::string read_bytes(std::size_t count, const char* what) {
    if (bytes_.size() - pos_ < count) malformed_at_offset(pos_, std::string("truncated ") + what);
    std::string s(bytes_.substr(pos_, count));
    pos_ += count;
    return s;
  }

  template <typename T>
  void read_array(T* out, std::size_t count, const char* what) {
    if ((bytes_.size() - pos_) / sizeof(T) < count) malformed_at_offset(pos_, std::string("truncated ") + what);
    std::memcpy(out, bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) malformed_at_offset(pos_, "trailing bytes after payload");
  }

  std::size_t offset() const noexcept { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw Error(ErrorCode::InvalidArgument, std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

void check_id(const std::string& id, std::size_t where, bool binary) {
  if (!id.empty()) return;
  if (binary) malformed_at_offset(where, "empty id");
  malformed_at_line(where, "empty id");
}

// Line-oriented CSV without quoting: ids must not contain commas.
struct CsvLine {
  std::size_t number = 0;
  std::vector<std::string_view> fields;
};

std::vector<CsvLine> split_csv(std::string_view text) {
  std::vector<CsvLine> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      CsvLine parsed{number, {}};
      std::size_t f = 0;
      while (true) {
        const auto comma = line.find(',', f);
        parsed.fields.push_back(line.substr(f, comma == std::string_view::npos ? std::string_view::npos : comma - f));
        if (comma == std::string_view::npos) break;
        f = comma + 1;
      }
      lines.push_back(std::move(parsed));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool try_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  if (!try_double(s, v)) malformed_at_line(line, std::string("cannot parse ") + what + " '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, std::size_t line, const char* what) {
  s = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    malformed_at_line(line, std::string("cannot parse ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

void expect_header(const std::vector<CsvLine>& lines, std::initializer_list<std::string_view> names) {
  if (lines.empty()) malformed_at_line(1, "missing header");
  const auto& h = lines.front();
  bool ok = h.fields.size() == names.size();
  std::size_t i = 0;
  for (auto name : names) {
    if (!ok) break;
    ok = trim(h.fields[i++]) == name;
  }
  if (!ok) {
    std::string expected;
    for (auto name : names) expected += (expected.empty() ? "" : ",") + std::string(name);
    malformed_at_line(h.number, "expected header '" + expected + "'");
  }
}

// Parses "id,<prefix>0,...,<prefix>{k-1}" rows into ids plus a dense matrix.
std::pair<std::vector<std::string>, RowMatrix> parse_numeric_table(std::string_view text, char prefix,
                                                                   const char* what) {
  const auto lines = split_csv(text);
  if (lines.empty()) malformed_at_line(1, "missing header");
  const auto& header = lines.front();
  if (header.fields.size() < 2 || trim(header.fields[0]) != "id") {
    malformed_at_line(header.number, std::string("header must be id,") + prefix + "0,...");
  }
  const std::size_t cols = header.fields.size() - 1;
  for (std::size_t j = 0; j < cols; ++j) {
    if (trim(header.fields[j + 1]) != std::string(1, prefix) + std::to_string(j)) {
      malformed_at_line(header.number, "column " + std::to_string(j + 1) + " should be named " + prefix +
                                           std::to_string(j));
    }
  }
  std::vector<std::string> ids;
  RowMatrix values(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(cols));
  std::set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != cols + 1) {
      malformed_at_line(line.number, "expected " + std::to_string(cols + 1) + " fields, got " +
                                         std::to_string(line.fields.size()));
    }
    std::string id(trim(line.fields[0]));
    check_id(id, line.number, false);
    if (!seen.insert(id).second) malformed_at_line(line.number, "duplicate id '" + id + "'");
    for (std::size_t j = 0; j < cols; ++j) {
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
          parse_double(line.fields[j + 1], line.number, what);
    }
    ids.push_back(std::move(id));
  }
  return {std::move(ids), std::move(values)};
}

std::string encode_numeric_table(const std::vector<std::string>& ids, const RowMatrix& values, char prefix) {
  std::string out = "id";
  for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + std::string(1, prefix) + std::to_string(j);
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out += ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + format_double(values(i, j));
    out += '\n';
  }
  return out;
}

// Re-throws format errors with the file name in front.
template <typename F>
auto with_path(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedFile || e.code() == ErrorCode::FileNotFound) {
      const std::string prefix = path.string() + ": ";
      const std::string msg = e.what();
      if (msg.rfind(prefix, 0) == 0) throw;
      throw Error(e.code(), prefix + msg);
    }
    throw;
  }
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileNotFound, path.string() + ": cannot write file");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::FileNotFound, path.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

FeatureMatrix parse_fmat1(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kFmatMagic);
  const auto n = r.read<std::uint32_t>("row count");
  const auto m = r.read<std::uint32_t>("column count");
  if (n == 0 || m == 0) malformed_at_offset(kFmatMagic.size(), "matrix must have at least one row and column");
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto at = r.offset();
    auto id = r.read_cstring("id");
    check_id(id, at, true);
    if (!seen.insert(id).second) malformed_at_offset(at, "duplicate id '" + id + "'");
    ids.push_back(std::move(id));
  }
  RowMatrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  const auto data_at = r.offset();
  r.read_array(values.data(), static_cast<std::size_t>(n) * m, "matrix payload");
  r.expect_end();
  if (!values.allFinite()) malformed_at_offset(data_at, "matrix payload has non-finite values");
  return FeatureMatrix(std::move(ids), std::move(values));
}

std::string encode_fmat1(const FeatureMatrix& matrix) {
  std::string out(kFmatMagic);
  append(out, checked_u32(matrix.rows(), "row count"));
  append(out, checked_u32(matrix.cols(), "column count"));
  for (const auto& id : matrix.ids()) {
    out += id;
    out += '\0';
  }
  out.append(reinterpret_cast<const char*>(matrix.values().data()),
             static_cast<std::size_t>(matrix.values().size()) * sizeof(double));
  return out;
}

FeatureMatrix parse_feature_csv(std::string_view text) {
  auto [ids, values] = parse_numeric_table(text, 'f', "feature value");
  if (ids.empty()) malformed_at_line(2, "feature CSV has no rows");
  if (!values.allFinite()) throw Error(ErrorCode::MalformedFile, "feature CSV has non-finite values");
  return FeatureMatrix(std::move(ids), std::move(values));
}

std::string encode_feature_csv(const FeatureMatrix& matrix) {
  return encode_numeric_table(matrix.ids(), matrix.values(), 'f');
}

FeatureMatrix load_features(const fs::path& path) {
  return with_path(path, [&] {
    const auto bytes = read_file(path);
    if (bytes.rfind(kFmatMagic, 0) == 0) return parse_fmat1(bytes);
    return parse_feature_csv(bytes);
  });
}

void save_features(const fs::path& path, const FeatureMatrix& matrix) {
  write_file(path, path.extension() == ".csv" ? encode_feature_csv(matrix) : encode_fmat1(matrix));
}

ActivationTrace parse_atrc1(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kAtrcMagic);
  const auto inputs = r.read<std::uint32_t>("input count");
  const auto layer_count = r.read<std::uint32_t>("layer count");
  std::vector<LayerInfo> layers;
  std::set<std::string> names;
  std::size_t neurons = 0;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto at = r.offset();
    const auto len = r.read<std::uint32_t>("layer name length");
    auto name = r.read_bytes(len, "layer name");
    const auto width = r.read<std::uint32_t>("layer width");
    if (width == 0) malformed_at_offset(at, "layer '" + name + "' has width 0");
    if (!names.insert(name).second) malformed_at_offset(at, "duplicate layer '" + name + "'");
    neurons += width;
    layers.push_back({std::move(name), width});
  }
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < inputs; ++i) {
    const auto at = r.offset();
    auto id = r.read_cstring("id");
    check_id(id, at, true);
    if (!seen.insert(id).second) malformed_at_offset(at, "duplicate id '" + id + "'");
    ids.push_back(std::move(id));
  }
  ActivationMatrix acts(static_cast<Eigen::Index>(inputs), static_cast<Eigen::Index>(neurons));
  const auto data_at = r.offset();
  r.read_array(acts.data(), static_cast<std::size_t>(inputs) * neurons, "activation payload");
  r.expect_end();
  if (!acts.allFinite()) malformed_at_offset(data_at, "activation payload has non-finite values");
  return ActivationTrace(std::move(ids), std::move(layers), std::move(acts));
}

std::string encode_atrc1(const ActivationTrace& trace) {
  std::string out(kAtrcMagic);
  append(out, checked_u32(trace.inputs(), "input count"));
  append(out, checked_u32(trace.layers().size(), "layer count"));
  for (const auto& layer : trace.layers()) {
    append(out, checked_u32(layer.name.size(), "layer name length"));
    out += layer.name;
    append(out, checked_u32(layer.width, "layer width"));
  }
  for (const auto& id : trace.ids()) {
    out += id;
    out += '\0';
  }
  out.append(reinterpret_cast<const char*>(trace.activations().data()),
             static_cast<std::size_t>(trace.activations().size()) * sizeof(float));
  return out;
}

ActivationTrace load_trace(const fs::path& path) {
  return with_path(path, [&] { return parse_atrc1(read_file(path)); });
}

void save_trace(const fs::path& path, const ActivationTrace& trace) { write_file(path, encode_atrc1(trace)); }

ActivationProfile load_profile(const fs::path& path) {
  return with_path(path, [&] {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      malformed_at_offset(e.byte, "invalid JSON");
    }
    ActivationProfile profile;
    try {
      for (const auto& n : j.at("neurons")) {
        profile.neurons.push_back({n.at("layer").get<std::string>(), n.at("index").get<std::size_t>(),
                                   n.at("low").get<double>(), n.at("high").get<double>()});
      }
      if (j.contains("layer_training_refs")) {
        profile.layer_training_refs = j.at("layer_training_refs").get<std::map<std::string, std::string>>();
      }
      if (j.contains("class_labels")) profile.class_labels = j.at("class_labels").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, std::string("profile JSON: ") + e.what());
    }
    for (const auto& [layer, ref] : profile.layer_training_refs) {
      const fs::path target = fs::path(ref).is_absolute() ? fs::path(ref) : path.parent_path() / ref;
      profile.layer_training[layer] = load_features(target).values();
    }
    try {
      profile.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedFile, std::string("profile: ") + e.what());
    }
    return profile;
  });
}

void save_profile(const fs::path& path, const ActivationProfile& profile) {
  nlohmann::json j;
  j["neurons"] = nlohmann::json::array();
  for (const auto& n : profile.neurons) {
    j["neurons"].push_back({{"layer", n.layer}, {"index", n.index}, {"low", n.low}, {"high", n.high}});
  }
  std::map<std::string, std::string> refs = profile.layer_training_refs;
  for (const auto& [layer, matrix] : profile.layer_training) {
    auto& ref = refs[layer];
    if (ref.empty()) ref = path.stem().string() + "." + layer + ".fmat";
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) ids.push_back("t" + std::to_string(i));
    const fs::path target = fs::path(ref).is_absolute() ? fs::path(ref) : path.parent_path() / ref;
    save_features(target, FeatureMatrix(std::move(ids), matrix));
  }
  j["layer_training_refs"] = refs;
  j["class_labels"] = profile.class_labels;
  write_file(path, j.dump(2) + "\n");
}

OutcomeTable parse_outcomes_csv(std::string_view text) {
  const auto lines = split_csv(text);
  expect_header(lines, {"id", "actual_class", "predicted_class"});
  std::vector<std::pair<std::string, Outcome>> rows;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != 3) malformed_at_line(line.number, "expected 3 fields");
    std::string id(trim(line.fields[0]));
    check_id(id, line.number, false);
    if (!seen.insert(id).second) malformed_at_line(line.number, "duplicate id '" + id + "'");
    rows.push_back({std::move(id),
                    {parse_int(line.fields[1], line.number, "actual class"),
                     parse_int(line.fields[2], line.number, "predicted class")}});
  }
  return OutcomeTable(std::move(rows));
}

std::string encode_outcomes_csv(const OutcomeTable& table) {
  std::string out = "id,actual_class,predicted_class\n";
  for (const auto& [id, o] : table.rows()) {
    out += id + "," + std::to_string(o.actual_class) + "," + std::to_string(o.predicted_class) + "\n";
  }
  return out;
}

FaultClustering parse_clusters_csv(std::string_view text) {
  const auto lines = split_csv(text);
  expect_header(lines, {"id", "cluster"});
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != 2) malformed_at_line(line.number, "expected 2 fields");
    std::string id(trim(line.fields[0]));
    check_id(id, line.number, false);
    if (!seen.insert(id).second) malformed_at_line(line.number, "duplicate id '" + id + "'");
    const int label = parse_int(line.fields[1], line.number, "cluster label");
    if (label < -1) malformed_at_line(line.number, "cluster label must be -1 or non-negative");
    ids.push_back(std::move(id));
    labels.push_back(label);
  }
  return clustering_from_labels(std::move(ids), std::move(labels));
}

std::string encode_clusters_csv(const FaultClustering& clustering) {
  std::string out = "id,cluster\n";
  for (std::size_t i = 0; i < clustering.ids.size(); ++i) {
    out += clustering.ids[i] + "," + std::to_string(clustering.labels[i]) + "\n";
  }
  return out;
}

Embedding parse_embedding_csv(std::string_view text) {
  auto [ids, coords] = parse_numeric_table(text, 'x', "coordinate");
  if (ids.empty()) malformed_at_line(2, "embedding CSV has no rows");
  Embedding e;
  e.ids = std::move(ids);
  e.coordinates = std::move(coords);
  try {
    e.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::MalformedFile, err.what());
  }
  return e;
}

std::string encode_embedding_csv(const Embedding& embedding) {
  return encode_numeric_table(embedding.ids, embedding.coordinates, 'x');
}

std::map<std::string, int> parse_labels_csv(std::string_view text) {
  const auto lines = split_csv(text);
  expect_header(lines, {"id", "class"});
  std::map<std::string, int> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.fields.size() != 2) malformed_at_line(line.number, "expected 2 fields");
    std::string id(trim(line.fields[0]));
    check_id(id, line.number, false);
    const int cls = parse_int(line.fields[1], line.number, "class");
    if (!out.emplace(id, cls).second) malformed_at_line(line.number, "duplicate id '" + id + "'");
  }
  return out;
}

std::vector<std::string> parse_id_list(std::string_view text) {
  std::vector<std::string> ids;
  for (const auto& line : split_csv(text)) {
    const auto id = trim(line.fields.front());
    if (line.fields.size() != 1) malformed_at_line(line.number, "expected one id per line");
    if (!id.empty()) ids.emplace_back(id);
  }
  return ids;
}

std::vector<double> parse_value_column(std::string_view text) {
  const auto lines = split_csv(text);
  std::vector<double> values;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto field = lines[r].fields.back();
    double v = 0.0;
    if (try_double(field, v)) {
      values.push_back(v);
    } else if (r != 0) {
      malformed_at_line(lines[r].number, "cannot parse value '" + std::string(field) + "'");
    }
  }
  return values;
}

FileKind detect_kind(const fs::path& path) {
  return with_path(path, [&] {
    const auto bytes = read_file(path);
    if (bytes.rfind(kFmatMagic, 0) == 0) return FileKind::fmat1;
    if (bytes.rfind(kAtrcMagic, 0) == 0) return FileKind::atrc1;
    const auto first = bytes.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && bytes[first] == '{') return FileKind::profile;
    const auto header = trim(std::string_view(bytes).substr(0, bytes.find('\n')));
    const auto h = header.size() > 0 && header.back() == '\r' ? header.substr(0, header.size() - 1) : header;
    if (h == "id,actual_class,predicted_class") return FileKind::outcomes;
    if (h == "id,cluster") return FileKind::clusters;
    if (h.rfind("id,x0", 0) == 0) return FileKind::embedding;
    if (h.rfind("id,f0", 0) == 0) return FileKind::feature_csv;
    malformed_at_offset(0, "unrecognized file format");
  });
}

std::string_view to_string(FileKind kind) noexcept {
  switch (kind) {
    case FileKind::fmat1: return "fmat1";
    case FileKind::feature_csv: return "feature_csv";
    case FileKind::atrc1: return "atrc1";
    case FileKind::profile: return "profile";
    case FileKind::outcomes: return "outcomes";
    case FileKind::clusters: return "clusters";
    case FileKind::embedding: return "embedding";
  }
  return "unknown";
}

}  // namespace dtest::io
