#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ruq/errors.hpp"

namespace ruq {

// n x d row-major float32 matrix of frozen representations, one row per
// sample, with unique opaque ids. Immutable after construction by
// convention; safe to share across threads read-only.
struct EmbeddingSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> data;       // count * dim
  std::vector<std::string> ids;  // size == count, unique

  const float* row(std::size_t i) const { return data.data() + i * dim; }
  // Checks finiteness, count >= 2, id uniqueness. Throws ValidationError.
  void validate() const;
};

// Binary class vectors c in {0,1}^K, one row per sample.
struct MultiLabelSet {
  std::size_t count = 0;
  std::size_t num_classes = 0;
  std::vector<std::uint8_t> labels;  // count * num_classes

  const std::uint8_t* row(std::size_t i) const { return labels.data() + i * num_classes; }
  void validate() const;
};

// Dense class-index masks, one height x width mask per sample.
struct SegMaskSet {
  std::size_t count = 0;
  std::size_t num_classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> masks;  // count * height * width

  const std::uint16_t* mask(std::size_t i) const { return masks.data() + i * height * width; }
  void validate() const;
};

// Per-sample upstream task loss, the ranking target.
struct LossVector {
  std::vector<double> values;  // finite, >= 0

  std::size_t count() const { return values.size(); }
  void validate() const;
};

// Non-owning view of one sample's spatial token grid.
struct TokenGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t dim = 0;
  std::size_t patch_px = 16;
  const float* tokens = nullptr;  // (rows*cols) x dim, row-major

  const float* token(std::size_t r, std::size_t c) const {
    return tokens + (r * cols + c) * dim;
  }
};

// Owning set of token grids, one grid per sample.
struct TokenGridSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t dim = 0;
  std::size_t patch_px = 16;
  std::vector<float> tokens;  // count * rows * cols * dim

  TokenGrid grid(std::size_t i) const {
    return TokenGrid{rows, cols, dim, patch_px, tokens.data() + i * rows * cols * dim};
  }
  void validate() const;
};

// Per-sample per-pixel loss maps, input to the max/mean aggregation ops.
struct PixelLossMaps {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // count * height * width, finite

  const double* map(std::size_t i) const { return values.data() + i * height * width; }
  void validate() const;
};

// Generic dense real matrix (used for cached logits).
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  const double* row(std::size_t i) const { return data.data() + i * cols; }
};

enum class LabelKind { multilabel, segmask };
using LabelSet = std::variant<MultiLabelSet, SegMaskSet>;

LabelKind label_kind_from_string(const std::string& s);
const char* to_string(LabelKind kind);

// File I/O. Binary containers carry a JSON header line followed by a
// 64-byte-aligned little-endian payload; files ending in ".csv" are parsed
// as plain CSV instead (intended for small hand-authored fixtures).
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& path);

LabelSet load_labels(const std::filesystem::path& path, LabelKind kind);
void save_labels(const MultiLabelSet& l, const std::filesystem::path& path);
void save_labels(const SegMaskSet& m, const std::filesystem::path& path);

LossVector load_loss(const std::filesystem::path& path);
void save_loss(const LossVector& l, const std::filesystem::path& path);

TokenGridSet load_token_grids(const std::filesystem::path& path);
void save_token_grids(const TokenGridSet& t, const std::filesystem::path& path);

PixelLossMaps load_pixel_losses(const std::filesystem::path& path);
void save_pixel_losses(const PixelLossMaps& p, const std::filesystem::path& path);

// Mean binary cross-entropy over the K classes, from cached logits.
// values[i] = -(1/K) * sum_k [y_ik log s(z_ik) + (1-y_ik) log(1-s(z_ik))]
// with the log arguments clamped at 1e-12 so saturated logits stay finite.
LossVector bce_per_sample(const RealMatrix& logits, const MultiLabelSet& labels);

// Throws ValidationError when the two containers are not aligned 1:1.
void check_aligned(const EmbeddingSet& e, const LossVector& l);
void check_aligned(const EmbeddingSet& e, const MultiLabelSet& l);
void check_aligned(const EmbeddingSet& e, const SegMaskSet& m);

}  // namespace ruq
