#include "ruq/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "binfile.hpp"
#include "csv.hpp"
#include "numeric.hpp"

namespace ruq {

namespace {

using detail::LoadedContainer;

bool is_csv(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv";
}

void check_kind(const nlohmann::json& header, const char* expected,
                const std::filesystem::path& path) {
  if (header.contains("kind") && header["kind"] != expected) {
    throw ValidationError("expected a \"" + std::string(expected) + "\" container, found \"" +
                          header["kind"].dump() + "\" in " + path.string());
  }
}

std::vector<float> payload_as_f32(const LoadedContainer& c, std::size_t n_values,
                                  const std::filesystem::path& path) {
  detail::check_payload_size(c.payload.size(), n_values * 4, path);
  std::vector<float> out(n_values);
  std::memcpy(out.data(), c.payload.data(), c.payload.size());
  return out;
}

std::vector<double> payload_as_real(const LoadedContainer& c, std::size_t n_values,
                                    const std::string& dtype,
                                    const std::filesystem::path& path) {
  std::vector<double> out(n_values);
  if (dtype == "f64") {
    detail::check_payload_size(c.payload.size(), n_values * 8, path);
    std::memcpy(out.data(), c.payload.data(), c.payload.size());
  } else if (dtype == "f32") {
    detail::check_payload_size(c.payload.size(), n_values * 4, path);
    std::vector<float> tmp(n_values);
    std::memcpy(tmp.data(), c.payload.data(), c.payload.size());
    std::copy(tmp.begin(), tmp.end(), out.begin());
  } else {
    throw ValidationError("expected a real dtype (f32/f64) in " + path.string() +
                          ", found \"" + dtype + "\"");
  }
  return out;
}

}  // namespace

LabelKind label_kind_from_string(const std::string& s) {
  if (s == "multilabel") return LabelKind::multilabel;
  if (s == "segmask") return LabelKind::segmask;
  throw ValidationError("unknown label kind \"" + s + "\" (expected multilabel or segmask)");
}

const char* to_string(LabelKind kind) {
  return kind == LabelKind::multilabel ? "multilabel" : "segmask";
}

// ---------------------------------------------------------------------------
// Validation

void EmbeddingSet::validate() const {
  if (count < 2) {
    throw ValidationError("embedding set needs at least 2 samples, got " +
                          std::to_string(count));
  }
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
  if (data.size() != count * dim) {
    throw ValidationError("embedding data size does not match count * dim");
  }
  if (ids.size() != count) {
    throw ValidationError("embedding ids size does not match sample count");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const float* r = row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(r[j])) {
        throw ValidationError("non-finite value at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
  std::unordered_set<std::string> seen;
  seen.reserve(count);
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw ValidationError("duplicate sample id \"" + id + "\"");
    }
  }
}

void MultiLabelSet::validate() const {
  if (num_classes < 2) {
    throw ValidationError("multilabel set needs K >= 2 classes, got " +
                          std::to_string(num_classes));
  }
  if (labels.size() != count * num_classes) {
    throw ValidationError("label data size does not match count * num_classes");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) {
      throw ValidationError("non-binary entry at row " + std::to_string(i / num_classes) +
                            ", class " + std::to_string(i % num_classes));
    }
  }
}

void SegMaskSet::validate() const {
  if (num_classes < 2) {
    throw ValidationError("segmentation mask set needs K >= 2 classes");
  }
  if (height == 0 || width == 0) {
    throw ValidationError("segmentation masks need positive height and width");
  }
  if (masks.size() != count * height * width) {
    throw ValidationError("mask data size does not match count * height * width");
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i] >= num_classes) {
      throw ValidationError("class index " + std::to_string(masks[i]) + " >= K (" +
                            std::to_string(num_classes) + ") at sample " +
                            std::to_string(i / (height * width)));
    }
  }
}

void LossVector::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("non-finite loss at index " + std::to_string(i));
    }
    if (values[i] < 0.0) {
      throw ValidationError("negative loss at index " + std::to_string(i));
    }
  }
}

void TokenGridSet::validate() const {
  if (count == 0 || rows == 0 || cols == 0 || dim == 0) {
    throw ValidationError("token grid set needs positive count, rows, cols, dim");
  }
  if (tokens.size() != count * rows * cols * dim) {
    throw ValidationError("token data size does not match count * rows * cols * dim");
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!std::isfinite(tokens[i])) {
      throw ValidationError("non-finite token value at flat index " + std::to_string(i));
    }
  }
}

void PixelLossMaps::validate() const {
  if (count == 0 || height == 0 || width == 0) {
    throw ValidationError("pixel loss maps need positive count, height, width");
  }
  if (values.size() != count * height * width) {
    throw ValidationError("pixel loss data size does not match count * height * width");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("non-finite pixel loss at flat index " + std::to_string(i));
    }
  }
}

void check_aligned(const EmbeddingSet& e, const LossVector& l) {
  if (e.count != l.count()) {
    throw ValidationError("count mismatch: " + std::to_string(e.count) + " embeddings vs " +
                          std::to_string(l.count()) + " losses");
  }
}

void check_aligned(const EmbeddingSet& e, const MultiLabelSet& l) {
  if (e.count != l.count) {
    throw ValidationError("count mismatch: " + std::to_string(e.count) + " embeddings vs " +
                          std::to_string(l.count) + " label rows");
  }
}

void check_aligned(const EmbeddingSet& e, const SegMaskSet& m) {
  if (e.count != m.count) {
    throw ValidationError("count mismatch: " + std::to_string(e.count) + " embeddings vs " +
                          std::to_string(m.count) + " masks");
  }
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  EmbeddingSet out;
  if (is_csv(path)) {
    const auto lines = detail::read_text_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (i == 0) {
        out.dim = vals.size();
      } else if (vals.size() != out.dim) {
        throw ValidationError("ragged CSV row at " + path.string() + ":" +
                              std::to_string(i + 1));
      }
      for (double v : vals) out.data.push_back(static_cast<float>(v));
    }
    out.count = lines.size();
  } else {
    const auto c = detail::load_container(path);
    check_kind(c.header, "embeddings", path);
    out.count = detail::header_size_field(c.header, "n", path);
    out.dim = detail::header_size_field(c.header, "d", path);
    const auto dtype = detail::header_dtype(c.header, path, "f32");
    if (dtype != "f32") {
      throw ValidationError("embedding payload must be f32, found \"" + dtype + "\" in " +
                            path.string());
    }
    out.data = payload_as_f32(c, out.count * out.dim, path);
    if (c.header.contains("ids")) {
      const auto& ids = c.header["ids"];
      if (!ids.is_array() || ids.size() != out.count) {
        throw ValidationError("ids array in " + path.string() +
                              " must have one entry per sample");
      }
      for (const auto& id : ids) {
        if (!id.is_string()) {
          throw ValidationError("non-string id in " + path.string());
        }
        out.ids.push_back(id.get<std::string>());
      }
    }
  }
  if (out.ids.empty()) {
    out.ids.reserve(out.count);
    for (std::size_t i = 0; i < out.count; ++i) out.ids.push_back(std::to_string(i));
  }
  out.validate();
  return out;
}

void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& path) {
  e.validate();
  if (is_csv(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    for (std::size_t i = 0; i < e.count; ++i) {
      const float* r = e.row(i);
      for (std::size_t j = 0; j < e.dim; ++j) {
        if (j) out << ',';
        out << detail::format_float(r[j]);
      }
      out << '\n';
    }
    return;
  }
  nlohmann::json header{{"kind", "embeddings"}, {"n", e.count}, {"d", e.dim},
                        {"dtype", "f32"},       {"ids", e.ids}};
  detail::save_container(path, header, e.data.data(), e.data.size() * 4);
}

// ---------------------------------------------------------------------------
// Labels

namespace {

MultiLabelSet load_multilabel(const std::filesystem::path& path) {
  MultiLabelSet out;
  if (is_csv(path)) {
    const auto lines = detail::read_text_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (i == 0) {
        out.num_classes = vals.size();
      } else if (vals.size() != out.num_classes) {
        throw ValidationError("ragged CSV row at " + path.string() + ":" +
                              std::to_string(i + 1));
      }
      for (double v : vals) {
        if (v != 0.0 && v != 1.0) {
          throw ValidationError("non-binary entry at " + path.string() + ":" +
                                std::to_string(i + 1));
        }
        out.labels.push_back(static_cast<std::uint8_t>(v));
      }
    }
    out.count = lines.size();
  } else {
    const auto c = detail::load_container(path);
    check_kind(c.header, "multilabel", path);
    out.count = detail::header_size_field(c.header, "n", path);
    out.num_classes = detail::header_size_field(c.header, "k", path);
    const auto dtype = detail::header_dtype(c.header, path, "u8");
    if (dtype != "u8") {
      throw ValidationError("multilabel payload must be u8, found \"" + dtype + "\" in " +
                            path.string());
    }
    const std::size_t n_values = out.count * out.num_classes;
    detail::check_payload_size(c.payload.size(), n_values, path);
    out.labels.resize(n_values);
    std::memcpy(out.labels.data(), c.payload.data(), n_values);
  }
  out.validate();
  return out;
}

SegMaskSet load_segmask(const std::filesystem::path& path) {
  SegMaskSet out;
  if (is_csv(path)) {
    // First row: n,h,w,k. Then n*h rows of w class indices.
    const auto lines = detail::read_text_lines(path);
    if (lines.empty()) throw ValidationError("empty segmask CSV: " + path.string());
    const auto shape = detail::parse_csv_numbers(lines[0], path, 1);
    if (shape.size() != 4) {
      throw ValidationError("segmask CSV must start with a n,h,w,k row: " + path.string());
    }
    out.count = static_cast<std::size_t>(shape[0]);
    out.height = static_cast<std::size_t>(shape[1]);
    out.width = static_cast<std::size_t>(shape[2]);
    out.num_classes = static_cast<std::size_t>(shape[3]);
    if (lines.size() != 1 + out.count * out.height) {
      throw ValidationError("segmask CSV row count does not match n*h in " + path.string());
    }
    out.masks.reserve(out.count * out.height * out.width);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (vals.size() != out.width) {
        throw ValidationError("ragged CSV row at " + path.string() + ":" +
                              std::to_string(i + 1));
      }
      for (double v : vals) {
        if (v < 0.0 || v != std::floor(v)) {
          throw ValidationError("non-integer class index at " + path.string() + ":" +
                                std::to_string(i + 1));
        }
        out.masks.push_back(static_cast<std::uint16_t>(v));
      }
    }
  } else {
    const auto c = detail::load_container(path);
    check_kind(c.header, "segmask", path);
    out.count = detail::header_size_field(c.header, "n", path);
    out.height = detail::header_size_field(c.header, "h", path);
    out.width = detail::header_size_field(c.header, "w", path);
    out.num_classes = detail::header_size_field(c.header, "k", path);
    const auto dtype = detail::header_dtype(c.header, path, "u8");
    const std::size_t n_values = out.count * out.height * out.width;
    out.masks.resize(n_values);
    if (dtype == "u8") {
      detail::check_payload_size(c.payload.size(), n_values, path);
      for (std::size_t i = 0; i < n_values; ++i) {
        out.masks[i] = std::to_integer<std::uint16_t>(c.payload[i]);
      }
    } else if (dtype == "u16") {
      detail::check_payload_size(c.payload.size(), n_values * 2, path);
      std::memcpy(out.masks.data(), c.payload.data(), n_values * 2);
    } else {
      throw ValidationError("segmask payload must be u8 or u16, found \"" + dtype +
                            "\" in " + path.string());
    }
  }
  out.validate();
  return out;
}

}  // namespace

LabelSet load_labels(const std::filesystem::path& path, LabelKind kind) {
  if (kind == LabelKind::multilabel) return load_multilabel(path);
  return load_segmask(path);
}

void save_labels(const MultiLabelSet& l, const std::filesystem::path& path) {
  l.validate();
  if (is_csv(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    for (std::size_t i = 0; i < l.count; ++i) {
      const std::uint8_t* r = l.row(i);
      for (std::size_t j = 0; j < l.num_classes; ++j) {
        if (j) out << ',';
        out << int(r[j]);
      }
      out << '\n';
    }
    return;
  }
  nlohmann::json header{
      {"kind", "multilabel"}, {"n", l.count}, {"k", l.num_classes}, {"dtype", "u8"}};
  detail::save_container(path, header, l.labels.data(), l.labels.size());
}

void save_labels(const SegMaskSet& m, const std::filesystem::path& path) {
  m.validate();
  if (is_csv(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << m.count << ',' << m.height << ',' << m.width << ',' << m.num_classes << '\n';
    for (std::size_t i = 0; i < m.count * m.height; ++i) {
      for (std::size_t j = 0; j < m.width; ++j) {
        if (j) out << ',';
        out << m.masks[i * m.width + j];
      }
      out << '\n';
    }
    return;
  }
  const char* dtype = m.num_classes <= 256 ? "u8" : "u16";
  nlohmann::json header{{"kind", "segmask"}, {"n", m.count},         {"h", m.height},
                        {"w", m.width},      {"k", m.num_classes},   {"dtype", dtype}};
  if (m.num_classes <= 256) {
    std::vector<std::uint8_t> narrow(m.masks.size());
    for (std::size_t i = 0; i < m.masks.size(); ++i) {
      narrow[i] = static_cast<std::uint8_t>(m.masks[i]);
    }
    detail::save_container(path, header, narrow.data(), narrow.size());
  } else {
    detail::save_container(path, header, m.masks.data(), m.masks.size() * 2);
  }
}

// ---------------------------------------------------------------------------
// Losses / pixel losses / token grids

LossVector load_loss(const std::filesystem::path& path) {
  LossVector out;
  if (is_csv(path)) {
    const auto lines = detail::read_text_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (vals.size() != 1) {
        throw ValidationError("loss CSV expects one value per line: " + path.string() + ":" +
                              std::to_string(i + 1));
      }
      out.values.push_back(vals[0]);
    }
  } else {
    const auto c = detail::load_container(path);
    check_kind(c.header, "loss", path);
    const std::size_t n = detail::header_size_field(c.header, "n", path);
    const auto dtype = detail::header_dtype(c.header, path, "f64");
    out.values = payload_as_real(c, n, dtype, path);
  }
  out.validate();
  return out;
}

void save_loss(const LossVector& l, const std::filesystem::path& path) {
  l.validate();
  if (is_csv(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    for (double v : l.values) out << detail::format_double(v) << '\n';
    return;
  }
  nlohmann::json header{{"kind", "loss"}, {"n", l.count()}, {"dtype", "f64"}};
  detail::save_container(path, header, l.values.data(), l.values.size() * 8);
}

TokenGridSet load_token_grids(const std::filesystem::path& path) {
  if (is_csv(path)) {
    throw ValidationError("token grids are binary-only containers: " + path.string());
  }
  const auto c = detail::load_container(path);
  check_kind(c.header, "tokens", path);
  TokenGridSet out;
  out.count = detail::header_size_field(c.header, "n", path);
  out.rows = detail::header_size_field(c.header, "r", path);
  out.cols = detail::header_size_field(c.header, "g", path);
  out.dim = detail::header_size_field(c.header, "d", path);
  out.patch_px =
      c.header.contains("patch_px") ? detail::header_size_field(c.header, "patch_px", path) : 16;
  const auto dtype = detail::header_dtype(c.header, path, "f32");
  if (dtype != "f32") {
    throw ValidationError("token payload must be f32, found \"" + dtype + "\" in " +
                          path.string());
  }
  out.tokens = payload_as_f32(c, out.count * out.rows * out.cols * out.dim, path);
  out.validate();
  return out;
}

void save_token_grids(const TokenGridSet& t, const std::filesystem::path& path) {
  t.validate();
  nlohmann::json header{{"kind", "tokens"}, {"n", t.count},          {"r", t.rows},
                        {"g", t.cols},      {"d", t.dim},            {"patch_px", t.patch_px},
                        {"dtype", "f32"}};
  detail::save_container(path, header, t.tokens.data(), t.tokens.size() * 4);
}

PixelLossMaps load_pixel_losses(const std::filesystem::path& path) {
  PixelLossMaps out;
  if (is_csv(path)) {
    // First row: n,h,w. Then n*h rows of w values.
    const auto lines = detail::read_text_lines(path);
    if (lines.empty()) throw ValidationError("empty pixel loss CSV: " + path.string());
    const auto shape = detail::parse_csv_numbers(lines[0], path, 1);
    if (shape.size() != 3) {
      throw ValidationError("pixel loss CSV must start with a n,h,w row: " + path.string());
    }
    out.count = static_cast<std::size_t>(shape[0]);
    out.height = static_cast<std::size_t>(shape[1]);
    out.width = static_cast<std::size_t>(shape[2]);
    if (lines.size() != 1 + out.count * out.height) {
      throw ValidationError("pixel loss CSV row count does not match n*h in " + path.string());
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (vals.size() != out.width) {
        throw ValidationError("ragged CSV row at " + path.string() + ":" +
                              std::to_string(i + 1));
      }
      out.values.insert(out.values.end(), vals.begin(), vals.end());
    }
  } else {
    const auto c = detail::load_container(path);
    check_kind(c.header, "pixelloss", path);
    out.count = detail::header_size_field(c.header, "n", path);
    out.height = detail::header_size_field(c.header, "h", path);
    out.width = detail::header_size_field(c.header, "w", path);
    const auto dtype = detail::header_dtype(c.header, path, "f64");
    out.values = payload_as_real(c, out.count * out.height * out.width, dtype, path);
  }
  out.validate();
  return out;
}

void save_pixel_losses(const PixelLossMaps& p, const std::filesystem::path& path) {
  p.validate();
  if (is_csv(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << p.count << ',' << p.height << ',' << p.width << '\n';
    for (std::size_t i = 0; i < p.count * p.height; ++i) {
      for (std::size_t j = 0; j < p.width; ++j) {
        if (j) out << ',';
        out << detail::format_double(p.values[i * p.width + j]);
      }
      out << '\n';
    }
    return;
  }
  nlohmann::json header{
      {"kind", "pixelloss"}, {"n", p.count}, {"h", p.height}, {"w", p.width}, {"dtype", "f64"}};
  detail::save_container(path, header, p.values.data(), p.values.size() * 8);
}

// ---------------------------------------------------------------------------
// BCE from cached logits

LossVector bce_per_sample(const RealMatrix& logits, const MultiLabelSet& labels) {
  if (logits.rows != labels.count || logits.cols != labels.num_classes) {
    throw ValidationError("shape mismatch: logits " + std::to_string(logits.rows) + "x" +
                          std::to_string(logits.cols) + " vs labels " +
                          std::to_string(labels.count) + "x" +
                          std::to_string(labels.num_classes));
  }
  constexpr double kFloor = 1e-12;
  LossVector out;
  out.values.resize(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* z = logits.row(i);
    const std::uint8_t* y = labels.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < logits.cols; ++k) {
      const double p = detail::logistic(z[k]);
      const double term = y[k] ? -std::log(std::max(p, kFloor))
                               : -std::log(std::max(1.0 - p, kFloor));
      acc += term;
    }
    out.values[i] = acc / static_cast<double>(logits.cols);
  }
  out.validate();
  return out;
}

}  // namespace ruq
