#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "cfgroup/baselines.hpp"
#include "cfgroup/compatibility.hpp"
#include "cfgroup/correspondence.hpp"
#include "cfgroup/geometry.hpp"

namespace cfgroup {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Reads the `vertex` element of an ASCII or binary little-endian PLY file.
/// x, y, z (and nx, ny, nz when present) must be float or double properties;
/// other scalar properties are skipped.
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::kAscii);

/// One correspondence per line: `src tgt [similarity] [ratio] [gt_label]`.
/// `-` stands for an absent optional column; `#` starts a comment.
CorrespondenceSet read_corrs(const std::filesystem::path& path,
                             std::optional<std::size_t> src_size = std::nullopt,
                             std::optional<std::size_t> tgt_size = std::nullopt);
void write_corrs(const CorrespondenceSet& corrs, const std::filesystem::path& path);

inline constexpr double kTransformFileTolerance = 1e-6;

/// 4x4 row-major homogeneous matrix, validated as a proper rigid motion.
RigidTransform read_transform(const std::filesystem::path& path);
void write_transform(const RigidTransform& t, const std::filesystem::path& path);

/// One 0/1 per line.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);

/// Comma-separated rows, no header.
FeatureMatrix read_features_csv(const std::filesystem::path& path);
void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path);

}  // namespace cfgroup
