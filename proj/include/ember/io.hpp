#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ember/tensor.hpp"

namespace ember {

enum class Endian { little, big };

/// Fields of a single-file NIfTI-1 header that the reader interprets.
struct NiftiHeader {
  std::int16_t dim_count = 0;
  std::array<std::int16_t, 8> dims{};
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  Endian endianness = Endian::little;
  std::string magic;
};

struct VolumeMeta {
  // Voxel spacing in mm, in tensor axis order (slowest axis first).
  std::vector<double> spacing;
  std::int16_t original_dtype = 16;
  std::filesystem::path source_path;
};

namespace nifti {

inline constexpr std::int32_t kHeaderSize = 348;
inline constexpr std::int32_t kDataOffset = 352;

inline constexpr std::int16_t kUint8 = 2;
inline constexpr std::int16_t kInt16 = 4;
inline constexpr std::int16_t kInt32 = 8;
inline constexpr std::int16_t kFloat32 = 16;
inline constexpr std::int16_t kFloat64 = 64;

// Throws BadMagic / UnsupportedDatatype / TruncatedData.
NiftiHeader parse_header(const std::vector<unsigned char>& bytes);

}  // namespace nifti

// Voxels come back as float32 with intensity scaling applied when the slope
// is non-zero. NIfTI stores x fastest, so dims are reversed into a row-major
// shape [z, y, x] (or [y, x] for 2-D images).
std::pair<Tensor, VolumeMeta> read_nifti(const std::filesystem::path& path);
std::pair<Tensor, VolumeMeta> decode_nifti(const std::vector<unsigned char>& bytes);

// Little-endian "n+1" file, float32, slope 1, intercept 0, data at byte 352.
// Rank must be 2 or 3; spacing defaults to 1 mm per axis.
void write_nifti(const std::filesystem::path& path, const Tensor& t, const std::optional<VolumeMeta>& meta = std::nullopt);
std::vector<unsigned char> encode_nifti(const Tensor& t, const std::optional<VolumeMeta>& meta = std::nullopt);

// Raw tensor format: "RTF1", u32 rank, rank x u32 dims, float32 payload, all little-endian.
Tensor read_rtf(const std::filesystem::path& path);
Tensor decode_rtf(const std::vector<unsigned char>& bytes);
void write_rtf(const std::filesystem::path& path, const Tensor& t);
std::vector<unsigned char> encode_rtf(const Tensor& t);

std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace ember
