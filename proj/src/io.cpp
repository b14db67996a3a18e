#include "dtl/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace dtl {

namespace fs = std::filesystem;

namespace {

constexpr char kMatrixMagic[8] = {'D', 'T', 'L', 'M', 'A', 'T', 'R', 'X'};
constexpr char kModelMagic[8] = {'D', 'T', 'L', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint64_t kMaxElements = 250'000'000;  // 2 GB of doubles
constexpr std::uint64_t kMaxDepth = 1024;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof())
    throw InvalidInput("failed reading '" + path.string() + "'");
  return std::move(buffer).str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_double_cell(std::string_view cell, Index row, Index col,
                         const char* what) {
  const std::string_view t = trim(cell);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InvalidInput(std::string(what) + ": non-numeric cell at row " +
                       std::to_string(row + 1) + ", column " +
                       std::to_string(col + 1));
  if (!std::isfinite(value))
    throw InvalidInput(std::string(what) + ": non-finite entry at row " +
                       std::to_string(row + 1) + ", column " +
                       std::to_string(col + 1));
  return value;
}

// Little-endian primitives; byte order is explicit so files are portable.

void put_u64(std::string& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(bytes, 8);
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
  ByteReader(std::string_view data, const char* what) : data_(data), what_(what) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string_view raw(std::size_t n) {
    need(n);
    const std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  void expect_end() {
    if (pos_ != data_.size())
      throw InvalidInput(std::string(what_) + ": trailing bytes after payload");
  }

private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n)
      throw InvalidInput(std::string(what_) + ": truncated file");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  const char* what_;
};

void put_matrix(std::string& out, const MatrixD& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

MatrixD get_matrix(ByteReader& reader, const char* what) {
  const std::uint64_t rows = reader.u64();
  const std::uint64_t cols = reader.u64();
  if (rows == 0 || cols == 0)
    throw InvalidInput(std::string(what) + ": empty matrix in file");
  if (rows > kMaxElements || cols > kMaxElements || rows > kMaxElements / cols)
    throw InvalidInput(std::string(what) + ": dimension overflow (" +
                       std::to_string(rows) + " x " + std::to_string(cols) + ")");
  MatrixD m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = reader.f64();
  return m;
}

void check_label_writable(const std::string& label, const char* what) {
  if (label.empty())
    throw InvalidInput(std::string(what) + ": labels must be non-empty");
  if (label.find_first_of(",\n\r") != std::string::npos)
    throw InvalidInput(std::string(what) +
                       ": label '" + label + "' contains a comma or newline");
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// key = value lines with '#' comments and optional [section] headers.
struct KvEntry {
  int section = -1;  // -1 for the global scope
  std::string key, value;
  int line_no = 0;
};

std::vector<KvEntry> parse_kv_text(const std::string& text, const char* what,
                                   bool allow_sections) {
  std::vector<KvEntry> entries;
  int section = -1;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (!allow_sections || line.back() != ']')
        throw InvalidInput(std::string(what) + ": unexpected section header at line " +
                           std::to_string(line_no));
      std::string_view inner = trim(line.substr(1, line.size() - 2));
      constexpr std::string_view kPrefix = "layer";
      if (inner.substr(0, kPrefix.size()) != kPrefix)
        throw InvalidInput(std::string(what) + ": unknown section '" +
                           std::string(inner) + "' at line " + std::to_string(line_no));
      inner = trim(inner.substr(kPrefix.size()));
      int n = 0;
      const auto res = std::from_chars(inner.data(), inner.data() + inner.size(), n);
      if (res.ec != std::errc() || res.ptr != inner.data() + inner.size() || n < 1)
        throw InvalidInput(std::string(what) + ": bad layer number at line " +
                           std::to_string(line_no));
      section = n;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidInput(std::string(what) + ": expected 'key = value' at line " +
                         std::to_string(line_no));
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty() || value.empty())
      throw InvalidInput(std::string(what) + ": empty key or value at line " +
                         std::to_string(line_no));
    entries.push_back({section, key, value, line_no});
  }
  return entries;
}

double parse_double_value(const KvEntry& e, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size() ||
      !std::isfinite(v))
    throw InvalidInput(std::string(what) + ": bad numeric value for '" + e.key +
                       "' at line " + std::to_string(e.line_no));
  return v;
}

template <typename Int>
Int parse_int_value(const KvEntry& e, const char* what) {
  Int v{};
  const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size())
    throw InvalidInput(std::string(what) + ": bad integer value for '" + e.key +
                       "' at line " + std::to_string(e.line_no));
  return v;
}

}  // namespace

void atomic_write(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw InvalidInput("cannot rename '" + tmp.string() + "' to '" + path.string() +
                       "': " + ec.message());
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

void save_matrix_csv(const fs::path& path, const MatrixD& m) {
  require_finite(m, "save_matrix_csv");
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  for (Index j = 0; j < m.cols(); ++j) {  // one sample (column) per CSV row
    for (Index i = 0; i < m.rows(); ++i) {
      if (i) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  atomic_write(path, out);
}

MatrixD load_matrix_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string_view> rows;
  for (std::string_view line : split(text, '\n'))
    if (!trim(line).empty()) rows.push_back(line);
  if (rows.empty())
    throw InvalidInput("load_matrix_csv: '" + path.string() + "' is empty");

  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(split(rows[0], ',').size());
  MatrixD m(d, n);
  for (Index r = 0; r < n; ++r) {
    const auto cells = split(rows[static_cast<std::size_t>(r)], ',');
    if (static_cast<Index>(cells.size()) != d)
      throw InvalidInput("load_matrix_csv: row " + std::to_string(r + 1) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(d));
    for (Index c = 0; c < d; ++c)
      m(c, r) = parse_double_cell(cells[static_cast<std::size_t>(c)], r, c,
                                  "load_matrix_csv");
  }
  return m;
}

std::string serialize_matrix_binary(const MatrixD& m) {
  require_finite(m, "serialize_matrix_binary");
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(m.size()) * 8 + 9);
  out.append(kMatrixMagic, sizeof(kMatrixMagic));
  out.push_back(static_cast<char>(kFormatVersion));
  put_matrix(out, m);
  return out;
}

MatrixD parse_matrix_binary(std::string_view bytes) {
  ByteReader reader(bytes, "matrix file");
  if (reader.raw(8) != std::string_view(kMatrixMagic, 8))
    throw InvalidInput("matrix file: malformed header (bad magic)");
  if (reader.u8() != kFormatVersion)
    throw InvalidInput("matrix file: unsupported format version");
  MatrixD m = get_matrix(reader, "matrix file");
  reader.expect_end();
  require_finite(m, "matrix file");
  return m;
}

void save_matrix_binary(const fs::path& path, const MatrixD& m) {
  atomic_write(path, serialize_matrix_binary(m));
}

MatrixD load_matrix_binary(const fs::path& path) {
  return parse_matrix_binary(read_file(path));
}

MatrixD load_matrix(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 8 && std::string_view(bytes).substr(0, 8) ==
                               std::string_view(kMatrixMagic, 8))
    return parse_matrix_binary(bytes);
  if (trim(bytes).empty())
    throw InvalidInput("load_matrix: '" + path.string() + "' is empty");
  return load_matrix_csv(path);
}

void save_matrix(const fs::path& path, const MatrixD& m) {
  if (path.extension() == ".dmx")
    save_matrix_binary(path, m);
  else
    save_matrix_csv(path, m);
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

std::vector<std::string> load_labels(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = split(text, '\n');
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) {
      if (i + 1 == lines.size()) break;  // trailing newline
      throw InvalidInput("load_labels: empty label at line " + std::to_string(i + 1) +
                         " of '" + path.string() + "'");
    }
    labels.emplace_back(line);
  }
  if (labels.empty())
    throw InvalidInput("load_labels: '" + path.string() + "' is empty");
  return labels;
}

void save_labels(const fs::path& path, const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& label : labels) {
    check_label_writable(label, "save_labels");
    out += label;
    out += '\n';
  }
  atomic_write(path, out);
}

// ---------------------------------------------------------------------------
// Model container
// ---------------------------------------------------------------------------

std::string serialize_model(const DeepTransform<double>& model) {
  model.validate();
  std::string out;
  out.append(kModelMagic, sizeof(kModelMagic));
  out.push_back(static_cast<char>(kFormatVersion));
  out.push_back(model.kind == CouplingKind::Semi ? '\x00' : '\x01');
  put_u64(out, static_cast<std::uint64_t>(model.depth()));
  for (Index j = 0; j < model.depth(); ++j) {
    for (const auto* stack : {&model.layers1, &model.layers2}) {
      const auto& layer = (*stack)[static_cast<std::size_t>(j)];
      put_f64(out, layer.params.lambda);
      put_f64(out, layer.params.epsilon);
      put_f64(out, layer.params.mu);
      put_u64(out, layer.budget.active()
                       ? static_cast<std::uint64_t>(*layer.budget.tau)
                       : 0);
      put_matrix(out, layer.t);
    }
  }
  put_matrix(out, model.map_12);
  if (model.map_21) put_matrix(out, *model.map_21);
  return out;
}

DeepTransform<double> parse_model(std::string_view bytes) {
  ByteReader reader(bytes, "model file");
  if (reader.raw(8) != std::string_view(kModelMagic, 8))
    throw InvalidInput("model file: malformed header (bad magic)");
  if (reader.u8() != kFormatVersion)
    throw InvalidInput("model file: unsupported format version");
  const std::uint8_t kind_byte = reader.u8();
  if (kind_byte > 1)
    throw InvalidInput("model file: unknown coupling kind byte");
  const std::uint64_t depth = reader.u64();
  if (depth == 0 || depth > kMaxDepth)
    throw InvalidInput("model file: bad depth " + std::to_string(depth));

  DeepTransform<double> model;
  model.kind = kind_byte == 0 ? CouplingKind::Semi : CouplingKind::Symmetric;
  for (std::uint64_t j = 0; j < depth; ++j) {
    for (auto* stack : {&model.layers1, &model.layers2}) {
      TransformLayer<double> layer;
      layer.params.lambda = reader.f64();
      layer.params.epsilon = reader.f64();
      layer.params.mu = reader.f64();
      const std::uint64_t tau = reader.u64();
      layer.t = get_matrix(reader, "model file");
      if (layer.t.rows() != layer.t.cols())
        throw InvalidInput("model file: transform matrix is not square");
      layer.params.validate();
      if (tau > 0) {
        layer.budget = Sparsity::of(static_cast<Index>(tau));
        layer.budget.validate(layer.t.rows());
      }
      require_finite(layer.t, "model file: transform");
      stack->push_back(std::move(layer));
    }
  }
  model.map_12 = get_matrix(reader, "model file");
  require_finite(model.map_12, "model file: map_12");
  if (model.kind == CouplingKind::Symmetric) {
    model.map_21 = get_matrix(reader, "model file");
    require_finite(*model.map_21, "model file: map_21");
  }
  reader.expect_end();
  model.validate();
  return model;
}

void save_model(const fs::path& path, const DeepTransform<double>& model) {
  atomic_write(path, serialize_model(model));
}

DeepTransform<double> load_model(const fs::path& path) {
  return parse_model(read_file(path));
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Gallery: return "gallery";
    case Split::Probe: return "probe";
  }
  throw InvalidInput("unknown split");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "gallery") return Split::Gallery;
  if (s == "probe") return Split::Probe;
  throw InvalidInput("manifest: split must be train, gallery or probe, got '" + s + "'");
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  bool have_labels = false, have_split = false;
  for (const auto& e : parse_kv_text(text, "manifest", /*allow_sections=*/false)) {
    const auto resolve = [&](const std::string& p) { return base / fs::path(p); };
    if (e.key == "domain1") {
      if (manifest.domain1) throw InvalidInput("manifest: duplicate key 'domain1'");
      manifest.domain1 = resolve(e.value);
    } else if (e.key == "domain2") {
      if (manifest.domain2) throw InvalidInput("manifest: duplicate key 'domain2'");
      manifest.domain2 = resolve(e.value);
    } else if (e.key == "labels") {
      if (have_labels) throw InvalidInput("manifest: duplicate key 'labels'");
      manifest.labels = resolve(e.value);
      have_labels = true;
    } else if (e.key == "split") {
      if (have_split) throw InvalidInput("manifest: duplicate key 'split'");
      manifest.split = split_from_string(e.value);
      have_split = true;
    } else {
      throw InvalidInput("manifest: unknown key '" + e.key + "' at line " +
                         std::to_string(e.line_no));
    }
  }
  if (!have_labels) throw InvalidInput("manifest: missing required key 'labels'");
  if (!have_split) throw InvalidInput("manifest: missing required key 'split'");
  if (!manifest.domain1 && !manifest.domain2)
    throw InvalidInput("manifest: at least one of domain1/domain2 is required");
  return manifest;
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset data;
  data.split = manifest.split;
  data.labels = load_labels(manifest.labels);
  const Index n = static_cast<Index>(data.labels.size());
  if (manifest.domain1) {
    data.x1 = load_matrix(*manifest.domain1);
    if (data.x1->cols() != n)
      throw InvalidInput("dataset: domain1 has " + std::to_string(data.x1->cols()) +
                         " samples but the label file lists " + std::to_string(n));
  }
  if (manifest.domain2) {
    data.x2 = load_matrix(*manifest.domain2);
    if (data.x2->cols() != n)
      throw InvalidInput("dataset: domain2 has " + std::to_string(data.x2->cols()) +
                         " samples but the label file lists " + std::to_string(n));
  }
  if (data.x1 && data.x2 && data.x1->rows() != data.x2->rows())
    throw InvalidInput("dataset: feature dimensions differ between domains (" +
                       std::to_string(data.x1->rows()) + " vs " +
                       std::to_string(data.x2->rows()) + "); equalize upstream");
  return data;
}

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

TrainConfig default_train_config() {
  TrainConfig config;
  config.layers.assign(static_cast<std::size_t>(config.depth), LayerSettings{});
  return config;
}

TrainConfig parse_train_config(const std::string& text) {
  const auto entries = parse_kv_text(text, "config", /*allow_sections=*/true);

  TrainConfig config;
  LayerSettings defaults;
  // Global pass: kind/depth/seed/ridge and layer defaults.
  for (const auto& e : entries) {
    if (e.section != -1) continue;
    if (e.key == "kind") {
      if (e.value == "semi") config.kind = CouplingKind::Semi;
      else if (e.value == "symmetric") config.kind = CouplingKind::Symmetric;
      else throw InvalidInput("config: kind must be semi or symmetric, got '" + e.value + "'");
    } else if (e.key == "depth") {
      config.depth = parse_int_value<int>(e, "config");
      if (config.depth < 1) throw InvalidInput("config: depth must be >= 1");
    } else if (e.key == "seed") {
      config.seed = parse_int_value<std::uint64_t>(e, "config");
    } else if (e.key == "ridge") {
      if (e.value == "off") config.ridge = RidgeMode::Off;
      else if (e.value == "auto") config.ridge = RidgeMode::Auto;
      else throw InvalidInput("config: ridge must be off or auto, got '" + e.value + "'");
    } else if (e.key == "lambda") {
      defaults.params.lambda = parse_double_value(e, "config");
    } else if (e.key == "epsilon") {
      defaults.params.epsilon = parse_double_value(e, "config");
    } else if (e.key == "mu") {
      defaults.params.mu = parse_double_value(e, "config");
    } else if (e.key == "tau") {
      defaults.budget = e.value == "none"
                            ? Sparsity::dense()
                            : Sparsity::of(parse_int_value<Index>(e, "config"));
    } else if (e.key == "iters") {
      defaults.iters = parse_int_value<int>(e, "config");
    } else if (e.key == "tol") {
      defaults.tol = parse_double_value(e, "config");
    } else {
      throw InvalidInput("config: unknown key '" + e.key + "' at line " +
                         std::to_string(e.line_no));
    }
  }
  config.layers.assign(static_cast<std::size_t>(config.depth), defaults);

  // Per-layer overrides.
  for (const auto& e : entries) {
    if (e.section == -1) continue;
    if (e.section > config.depth)
      throw InvalidInput("config: [layer " + std::to_string(e.section) +
                         "] exceeds depth " + std::to_string(config.depth));
    LayerSettings& layer = config.layers[static_cast<std::size_t>(e.section - 1)];
    if (e.key == "lambda") layer.params.lambda = parse_double_value(e, "config");
    else if (e.key == "epsilon") layer.params.epsilon = parse_double_value(e, "config");
    else if (e.key == "mu") layer.params.mu = parse_double_value(e, "config");
    else if (e.key == "tau")
      layer.budget = e.value == "none"
                         ? Sparsity::dense()
                         : Sparsity::of(parse_int_value<Index>(e, "config"));
    else if (e.key == "iters") layer.iters = parse_int_value<int>(e, "config");
    else if (e.key == "tol") layer.tol = parse_double_value(e, "config");
    else
      throw InvalidInput("config: key '" + e.key + "' is not valid inside a layer "
                         "section (line " + std::to_string(e.line_no) + ")");
  }

  for (std::size_t j = 0; j < config.layers.size(); ++j) {
    const auto& layer = config.layers[j];
    try {
      layer.params.validate();
      if (layer.budget.active() && *layer.budget.tau < 1)
        throw InvalidInput("tau must be >= 1");
      if (layer.iters < 1) throw InvalidInput("iters must be >= 1");
      if (!(layer.tol > 0.0)) throw InvalidInput("tol must be > 0");
    } catch (const InvalidInput& err) {
      throw InvalidInput("config: layer " + std::to_string(j + 1) + ": " + err.what());
    }
  }
  return config;
}

TrainConfig load_train_config(const fs::path& path) {
  return parse_train_config(read_file(path));
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  out += "kind = ";
  out += config.kind == CouplingKind::Semi ? "semi" : "symmetric";
  out += "\ndepth = " + std::to_string(config.depth);
  out += "\nseed = " + std::to_string(config.seed);
  out += "\nridge = ";
  out += config.ridge == RidgeMode::Off ? "off" : "auto";
  out += '\n';
  for (std::size_t j = 0; j < config.layers.size(); ++j) {
    const auto& layer = config.layers[j];
    out += "\n[layer " + std::to_string(j + 1) + "]\n";
    out += "lambda = " + format_double(layer.params.lambda) + '\n';
    out += "epsilon = " + format_double(layer.params.epsilon) + '\n';
    out += "mu = " + format_double(layer.params.mu) + '\n';
    out += "tau = ";
    out += layer.budget.active() ? std::to_string(*layer.budget.tau) : "none";
    out += '\n';
    out += "iters = " + std::to_string(layer.iters) + '\n';
    out += "tol = " + format_double(layer.tol) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Result CSVs
// ---------------------------------------------------------------------------

void write_trace_csv(const fs::path& path, const std::vector<LayerTraces>& traces) {
  std::string out =
      "layer,stage,iteration,residual,frob_penalty,logdet_penalty,coupling,total\n";
  const auto block = [&out](std::size_t layer, const char* stage,
                            const std::vector<CostBreakdown>& trace) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const CostBreakdown& c = trace[i];
      out += std::to_string(layer + 1);
      out += ',';
      out += stage;
      out += ',' + std::to_string(i + 1);
      out += ',' + format_double(c.residual);
      out += ',' + format_double(c.frob_penalty);
      out += ',' + format_double(c.logdet_penalty);
      out += ',' + format_double(c.coupling);
      out += ',' + format_double(c.total);
      out += '\n';
    }
  };
  for (std::size_t j = 0; j < traces.size(); ++j) {
    block(j, "domain1", traces[j].domain1);
    block(j, "domain2", traces[j].domain2);
    block(j, "coupled", traces[j].coupled);
  }
  atomic_write(path, out);
}

void write_rankings_csv(const fs::path& path, const std::vector<MatchResult>& results,
                        const std::vector<std::string>& probe_labels) {
  if (results.size() != probe_labels.size())
    throw InvalidInput("write_rankings_csv: results/labels size mismatch");
  std::string out = "probe_index,probe_label,rank,gallery_label,distance\n";
  for (std::size_t p = 0; p < results.size(); ++p) {
    check_label_writable(probe_labels[p], "write_rankings_csv");
    for (std::size_t k = 0; k < results[p].ranking.size(); ++k) {
      const auto& [label, distance] = results[p].ranking[k];
      check_label_writable(label, "write_rankings_csv");
      out += std::to_string(p);
      out += ',' + probe_labels[p];
      out += ',' + std::to_string(k + 1);
      out += ',' + label;
      out += ',' + format_double(distance);
      out += '\n';
    }
  }
  atomic_write(path, out);
}

RankingsFile load_rankings_csv(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = split(text, '\n');
  if (lines.empty() ||
      trim(lines[0]) != "probe_index,probe_label,rank,gallery_label,distance")
    throw InvalidInput("rankings file: malformed header");

  RankingsFile file;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5)
      throw InvalidInput("rankings file: line " + std::to_string(i + 1) +
                         " has " + std::to_string(cells.size()) + " cells, expected 5");
    const auto index_cell = trim(cells[0]);
    std::size_t probe = 0;
    auto res = std::from_chars(index_cell.data(), index_cell.data() + index_cell.size(), probe);
    if (res.ec != std::errc() || res.ptr != index_cell.data() + index_cell.size())
      throw InvalidInput("rankings file: bad probe index at line " + std::to_string(i + 1));
    const auto rank_cell = trim(cells[2]);
    std::size_t rank = 0;
    res = std::from_chars(rank_cell.data(), rank_cell.data() + rank_cell.size(), rank);
    if (res.ec != std::errc() || res.ptr != rank_cell.data() + rank_cell.size() || rank < 1)
      throw InvalidInput("rankings file: bad rank at line " + std::to_string(i + 1));
    const double distance =
        parse_double_cell(cells[4], static_cast<Index>(i), 4, "rankings file");

    if (probe == file.results.size() && rank == 1) {
      file.results.emplace_back();
      file.probe_labels.emplace_back(trim(cells[1]));
    } else if (probe != file.results.size() - 1 ||
               rank != file.results.back().ranking.size() + 1) {
      throw InvalidInput("rankings file: rows out of order at line " + std::to_string(i + 1));
    }
    MatchResult& r = file.results.back();
    r.ranking.emplace_back(std::string(trim(cells[3])), distance);
    if (!r.rank_of_true &&
        trim(cells[3]) == file.probe_labels.back())
      r.rank_of_true = static_cast<int>(rank);
  }
  if (file.results.empty())
    throw InvalidInput("rankings file: no ranking rows");
  const std::size_t k = file.results.front().ranking.size();
  for (const auto& r : file.results)
    if (r.ranking.size() != k)
      throw InvalidInput("rankings file: probes have differing ranking lengths");
  return file;
}

void write_cmc_csv(const fs::path& path, const CmcCurve& curve) {
  std::string out = "rank,accuracy\n";
  for (std::size_t k = 0; k < curve.accuracies.size(); ++k)
    out += std::to_string(k + 1) + ',' + format_double(curve.accuracies[k]) + '\n';
  atomic_write(path, out);
}

}  // namespace dtl
