#include "cfgroup/data_io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "cfgroup/error.hpp"

namespace cfgroup {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::optional<double> parse_double(std::string_view tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_uint(std::string_view tok) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

// Splits text into lines, tolerating \r\n.
class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const auto nl = text_.find('\n', pos_);
    const std::size_t end = nl == std::string_view::npos ? text_.size() : nl;
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_no() const { return line_no_; }
  std::size_t offset() const { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

// ---------------------------------------------------------------------------
// PLY

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

double read_scalar(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::kInt8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case ScalarType::kUInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case ScalarType::kInt16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::kUInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case ScalarType::kInt32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::kUInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::kFloat32: { float v; std::memcpy(&v, p, 4); return v; }
    case ScalarType::kFloat64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

[[noreturn]] void header_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kMalformedHeader, "PLY header line " + std::to_string(line) + ": " + what);
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  LineCursor cursor(text);
  std::string_view line;

  if (!cursor.next(line) || line != "ply") header_error(1, "missing 'ply' magic");

  std::optional<PlyFormat> format;
  std::vector<PlyElement> elements;
  bool ended = false;
  while (cursor.next(line)) {
    const auto tok = split_ws(line);
    const std::size_t ln = cursor.line_no();
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) header_error(ln, "format line needs '<format> <version>'");
      if (tok[1] == "ascii") {
        format = PlyFormat::kAscii;
      } else if (tok[1] == "binary_little_endian") {
        format = PlyFormat::kBinaryLittleEndian;
      } else {
        header_error(ln, "unsupported format '" + std::string(tok[1]) + "'");
      }
      if (tok[2] != "1.0") header_error(ln, "unsupported version '" + std::string(tok[2]) + "'");
    } else if (tok[0] == "element") {
      if (tok.size() != 3) header_error(ln, "element line needs '<name> <count>'");
      const auto count = parse_uint(tok[2]);
      if (!count) header_error(ln, "invalid element count '" + std::string(tok[2]) + "'");
      elements.push_back(PlyElement{std::string(tok[1]), *count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) header_error(ln, "property before any element");
      PlyProperty prop;
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) header_error(ln, "list property needs '<count type> <item type> <name>'");
        const auto ct = parse_scalar_type(tok[2]);
        const auto it = parse_scalar_type(tok[3]);
        if (!ct || !it) {
          throw Error(ErrorCode::kUnsupportedPropertyType,
                      "PLY header line " + std::to_string(ln) + ": unknown list types");
        }
        prop = PlyProperty{std::string(tok[4]), *it, true, *ct};
      } else {
        if (tok.size() != 3) header_error(ln, "property line needs '<type> <name>'");
        const auto t = parse_scalar_type(tok[1]);
        if (!t) {
          throw Error(ErrorCode::kUnsupportedPropertyType,
                      "PLY header line " + std::to_string(ln) + ": unknown property type '" +
                          std::string(tok[1]) + "'");
        }
        prop = PlyProperty{std::string(tok[2]), *t, false, ScalarType::kUInt8};
      }
      elements.back().properties.push_back(prop);
    } else {
      header_error(ln, "unexpected keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ended) header_error(cursor.line_no(), "missing end_header");
  if (!format) header_error(cursor.line_no(), "missing format line");

  std::size_t vertex_pos = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].name == "vertex") {
      vertex_pos = i;
      break;
    }
  }
  if (vertex_pos == elements.size()) header_error(cursor.line_no(), "no vertex element");
  const PlyElement& vertex = elements[vertex_pos];

  const std::array<const char*, 6> wanted{"x", "y", "z", "nx", "ny", "nz"};
  std::array<std::optional<std::size_t>, 6> slot;
  for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
    for (std::size_t w = 0; w < wanted.size(); ++w) {
      if (vertex.properties[p].name != wanted[w]) continue;
      const auto& prop = vertex.properties[p];
      if (prop.is_list || (prop.type != ScalarType::kFloat32 && prop.type != ScalarType::kFloat64)) {
        throw Error(ErrorCode::kUnsupportedPropertyType,
                    "vertex property '" + prop.name + "' must be float or double");
      }
      slot[w] = p;
    }
  }
  for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
    if (vertex.properties[p].is_list) {
      throw Error(ErrorCode::kUnsupportedPropertyType,
                  "list property '" + vertex.properties[p].name + "' in vertex element");
    }
  }
  if (!slot[0] || !slot[1] || !slot[2]) header_error(cursor.line_no(), "vertex lacks x, y, z");
  const int normal_slots = (slot[3] ? 1 : 0) + (slot[4] ? 1 : 0) + (slot[5] ? 1 : 0);
  if (normal_slots != 0 && normal_slots != 3) {
    header_error(cursor.line_no(), "vertex has a partial nx, ny, nz set");
  }
  const bool with_normals = normal_slots == 3;

  PointCloud cloud;
  // Guard against absurd counts before reserving.
  if (vertex.count > text.size()) {
    throw Error(ErrorCode::kTruncatedBody, "header advertises " + std::to_string(vertex.count) +
                                               " vertices but the file is only " +
                                               std::to_string(text.size()) + " bytes");
  }
  cloud.points.reserve(vertex.count);
  if (with_normals) cloud.normals.reserve(vertex.count);
  std::vector<double> values(vertex.properties.size());

  auto store = [&](std::size_t where) {
    cloud.points.emplace_back(values[*slot[0]], values[*slot[1]], values[*slot[2]]);
    if (!std::isfinite(cloud.points.back().squaredNorm())) {
      throw Error(ErrorCode::kParse, "non-finite coordinate in vertex " + std::to_string(where));
    }
    if (with_normals) {
      Eigen::Vector3d n(values[*slot[3]], values[*slot[4]], values[*slot[5]]);
      const double norm = n.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::kParse, "zero or non-finite normal in vertex " + std::to_string(where));
      }
      if (std::abs(norm - 1.0) > 1e-6) n /= norm;
      cloud.normals.push_back(n);
    }
  };

  if (*format == PlyFormat::kAscii) {
    // Elements preceding the vertex element are skipped line by line.
    for (std::size_t e = 0; e < vertex_pos; ++e) {
      for (std::uint64_t i = 0; i < elements[e].count; ++i) {
        if (!cursor.next(line)) {
          throw Error(ErrorCode::kTruncatedBody, "PLY body ended at line " +
                                                     std::to_string(cursor.line_no()) +
                                                     " inside element '" + elements[e].name + "'");
        }
      }
    }
    for (std::uint64_t i = 0; i < vertex.count; ++i) {
      if (!cursor.next(line)) {
        throw Error(ErrorCode::kTruncatedBody,
                    "PLY body has " + std::to_string(i) + " of " + std::to_string(vertex.count) +
                        " vertices (ended at line " + std::to_string(cursor.line_no()) + ")");
      }
      const auto tok = split_ws(line);
      if (tok.size() != values.size()) {
        throw Error(ErrorCode::kParse, "PLY line " + std::to_string(cursor.line_no()) +
                                           ": expected " + std::to_string(values.size()) +
                                           " values, found " + std::to_string(tok.size()));
      }
      for (std::size_t p = 0; p < tok.size(); ++p) {
        const auto v = parse_double(tok[p]);
        if (!v) {
          throw Error(ErrorCode::kParse, "PLY line " + std::to_string(cursor.line_no()) +
                                             ": invalid number '" + std::string(tok[p]) + "'");
        }
        values[p] = *v;
      }
      store(static_cast<std::size_t>(i));
    }
    return cloud;
  }

  std::size_t offset = cursor.offset();
  auto need = [&](std::size_t bytes, const std::string& what) {
    if (text.size() - offset < bytes) {
      throw Error(ErrorCode::kTruncatedBody, "PLY body truncated at byte offset " +
                                                 std::to_string(offset) + " while reading " + what);
    }
  };
  for (std::size_t e = 0; e < vertex_pos; ++e) {
    for (std::uint64_t i = 0; i < elements[e].count; ++i) {
      for (const auto& prop : elements[e].properties) {
        if (prop.is_list) {
          need(scalar_size(prop.count_type), elements[e].name);
          const double n = read_scalar(text.data() + offset, prop.count_type);
          offset += scalar_size(prop.count_type);
          if (!(n >= 0.0)) throw Error(ErrorCode::kParse, "negative list length in PLY body");
          const auto bytes = static_cast<std::size_t>(n) * scalar_size(prop.type);
          need(bytes, elements[e].name);
          offset += bytes;
        } else {
          need(scalar_size(prop.type), elements[e].name);
          offset += scalar_size(prop.type);
        }
      }
    }
  }
  for (std::uint64_t i = 0; i < vertex.count; ++i) {
    for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
      const auto t = vertex.properties[p].type;
      need(scalar_size(t), "vertex " + std::to_string(i) + " of " + std::to_string(vertex.count));
      values[p] = read_scalar(text.data() + offset, t);
      offset += scalar_size(t);
    }
    store(static_cast<std::size_t>(i));
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  const bool normals = cloud.has_normals();
  std::ostringstream header;
  header << "ply\n"
         << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                         : "format binary_little_endian 1.0\n")
         << "comment cfgroup\n"
         << "element vertex " << cloud.size() << '\n'
         << "property double x\nproperty double y\nproperty double z\n";
  if (normals) header << "property double nx\nproperty double ny\nproperty double nz\n";
  header << "end_header\n";

  auto out = open_out(path, true);
  out << header.str();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::array<double, 6> v{cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z(), 0, 0, 0};
    if (normals) {
      v[3] = cloud.normals[i].x();
      v[4] = cloud.normals[i].y();
      v[5] = cloud.normals[i].z();
    }
    const std::size_t n = normals ? 6 : 3;
    if (format == PlyFormat::kAscii) {
      for (std::size_t k = 0; k < n; ++k) out << (k ? " " : "") << format_double(v[k]);
      out << '\n';
    } else {
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }
  }
  check_written(out, path);
}

// ---------------------------------------------------------------------------
// Correspondences

CorrespondenceSet read_corrs(const std::filesystem::path& path, std::optional<std::size_t> src_size,
                             std::optional<std::size_t> tgt_size) {
  const std::string text = read_file(path);
  LineCursor cursor(text);
  std::string_view raw;
  CorrespondenceSet corrs;
  while (cursor.next(raw)) {
    const auto tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    const std::string where = "correspondence line " + std::to_string(cursor.line_no());
    if (tok.size() < 2 || tok.size() > 5) {
      throw Error(ErrorCode::kParse, where + ": expected 2 to 5 columns, found " +
                                         std::to_string(tok.size()));
    }
    Correspondence c;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!tok[k].empty() && tok[k][0] == '-') {
        throw Error(ErrorCode::kParse, where + ": negative index '" + std::string(tok[k]) + "'");
      }
      const auto idx = parse_uint(tok[k]);
      if (!idx) {
        throw Error(ErrorCode::kParse, where + ": invalid index '" + std::string(tok[k]) + "'");
      }
      (k == 0 ? c.src_index : c.tgt_index) = static_cast<std::size_t>(*idx);
    }
    auto optional_double = [&](std::size_t k, const char* name) -> std::optional<double> {
      if (tok.size() <= k || tok[k] == "-") return std::nullopt;
      const auto v = parse_double(tok[k]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kParse,
                    where + ": invalid " + name + " '" + std::string(tok[k]) + "'");
      }
      return v;
    };
    c.similarity = optional_double(2, "similarity");
    c.ratio = optional_double(3, "ratio");
    if (tok.size() > 4 && tok[4] != "-") {
      if (tok[4] == "0") {
        c.gt_label = false;
      } else if (tok[4] == "1") {
        c.gt_label = true;
      } else {
        throw Error(ErrorCode::kParse, where + ": gt_label must be 0, 1 or -");
      }
    }
    if ((src_size && c.src_index >= *src_size) || (tgt_size && c.tgt_index >= *tgt_size)) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  where + ": index out of range for clouds of size " +
                      (src_size ? std::to_string(*src_size) : std::string("?")) + " and " +
                      (tgt_size ? std::to_string(*tgt_size) : std::string("?")));
    }
    corrs.push_back(c);
  }
  return corrs;
}

void write_corrs(const CorrespondenceSet& corrs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# src_index tgt_index similarity ratio gt_label\n";
  for (const auto& c : corrs) {
    out << c.src_index << ' ' << c.tgt_index;
    const int last = c.gt_label ? 3 : c.ratio ? 2 : c.similarity ? 1 : 0;
    if (last >= 1) out << ' ' << (c.similarity ? format_double(*c.similarity) : "-");
    if (last >= 2) out << ' ' << (c.ratio ? format_double(*c.ratio) : "-");
    if (last >= 3) out << ' ' << (*c.gt_label ? '1' : '0');
    out << '\n';
  }
  check_written(out, path);
}

// ---------------------------------------------------------------------------
// Transforms, masks, features

RigidTransform read_transform(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  LineCursor cursor(text);
  std::string_view raw;
  std::vector<double> values;
  while (cursor.next(raw)) {
    for (const auto tok : split_ws(strip_comment(raw))) {
      const auto v = parse_double(tok);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kParse, "transform line " + std::to_string(cursor.line_no()) +
                                           ": invalid number '" + std::string(tok) + "'");
      }
      values.push_back(*v);
    }
  }
  if (values.size() != 16) {
    throw Error(ErrorCode::kParse,
                "transform file needs 16 numbers, found " + std::to_string(values.size()));
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  }
  return RigidTransform::from_matrix(m, kTransformFileTolerance);
}

void write_transform(const RigidTransform& t, const std::filesystem::path& path) {
  const Eigen::Matrix4d m = t.matrix();
  auto out = open_out(path);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << (c ? " " : "") << format_double(m(r, c));
    out << '\n';
  }
  check_written(out, path);
}

Mask read_mask(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  LineCursor cursor(text);
  std::string_view raw;
  Mask mask;
  while (cursor.next(raw)) {
    const auto tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    if (tok.size() != 1 || (tok[0] != "0" && tok[0] != "1")) {
      throw Error(ErrorCode::kParse,
                  "mask line " + std::to_string(cursor.line_no()) + ": expected 0 or 1");
    }
    mask.push_back(tok[0] == "1");
  }
  return mask;
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (bool b : mask) out << (b ? "1\n" : "0\n");
  check_written(out, path);
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  LineCursor cursor(text);
  std::string_view raw;
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  while (cursor.next(raw)) {
    if (raw.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = raw.find(',', start);
      const auto cell = raw.substr(start, comma == std::string_view::npos ? raw.size() - start
                                                                          : comma - start);
      const auto v = parse_double(cell);
      if (!v) {
        throw Error(ErrorCode::kParse, "feature CSV line " + std::to_string(cursor.line_no()) +
                                           ": invalid number '" + std::string(cell) + "'");
      }
      values.push_back(*v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw Error(ErrorCode::kParse, "feature CSV line " + std::to_string(cursor.line_no()) +
                                         ": expected " + std::to_string(cols) + " columns, found " +
                                         std::to_string(count));
    }
    ++rows;
  }
  FeatureMatrix features(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), features.data());
  return features;
}

void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      out << (c ? "," : "") << format_double(features(r, c));
    }
    out << '\n';
  }
  check_written(out, path);
}

}  // namespace cfgroup
