#include "ember/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ember/error.hpp"

namespace ember {

namespace {

template <class T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <class T>
T load(const unsigned char* p, Endian e) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  const bool host_little = std::endian::native == std::endian::little;
  if ((e == Endian::little) != host_little) v = byteswap(v);
  return v;
}

template <class T>
void store_le(unsigned char* p, T v) {
  if constexpr (std::endian::native != std::endian::little) v = byteswap(v);
  std::memcpy(p, &v, sizeof(T));
}

std::int16_t expected_bitpix(std::int16_t datatype) {
  switch (datatype) {
    case nifti::kUint8: return 8;
    case nifti::kInt16: return 16;
    case nifti::kInt32: return 32;
    case nifti::kFloat32: return 32;
    case nifti::kFloat64: return 64;
    default: return 0;
  }
}

}  // namespace

std::vector<unsigned char> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileError, path.string(), "cannot open for reading");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_binary_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::FileError, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::FileError, path.string(), "write failed");
}

namespace nifti {

NiftiHeader parse_header(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) {
    throw Error(Errc::TruncatedData, "header", "expected 348 bytes, got " + std::to_string(bytes.size()));
  }
  const unsigned char* p = bytes.data();
  NiftiHeader h;
  if (load<std::int32_t>(p, Endian::little) == kHeaderSize) {
    h.endianness = Endian::little;
  } else if (load<std::int32_t>(p, Endian::big) == kHeaderSize) {
    h.endianness = Endian::big;
  } else {
    throw Error(Errc::BadMagic, "sizeof_hdr", "not 348 in either byte order");
  }
  const Endian e = h.endianness;

  h.magic.assign(reinterpret_cast<const char*>(p + 344), strnlen(reinterpret_cast<const char*>(p + 344), 4));
  if (h.magic == "ni1") throw Error(Errc::BadMagic, h.magic, "two-file NIfTI pairs are not supported");
  if (h.magic != "n+1") throw Error(Errc::BadMagic, h.magic, "expected \"n+1\"");

  for (int i = 0; i < 8; ++i) h.dims[i] = load<std::int16_t>(p + 40 + 2 * i, e);
  h.dim_count = h.dims[0];
  h.datatype = load<std::int16_t>(p + 70, e);
  h.bitpix = load<std::int16_t>(p + 72, e);
  for (int i = 0; i < 8; ++i) h.pixdim[i] = load<float>(p + 76 + 4 * i, e);
  h.vox_offset = load<float>(p + 108, e);
  h.scl_slope = load<float>(p + 112, e);
  h.scl_inter = load<float>(p + 116, e);

  if (h.dim_count < 1 || h.dim_count > 7) {
    throw Error(Errc::BadMagic, "dim[0]", "dimension count " + std::to_string(h.dim_count) + " outside 1..7");
  }
  for (int i = 1; i <= h.dim_count; ++i) {
    if (h.dims[i] < 1) throw Error(Errc::BadMagic, "dim[" + std::to_string(i) + "]", "dimensions must be >= 1");
  }
  const auto bits = expected_bitpix(h.datatype);
  if (bits == 0) throw Error(Errc::UnsupportedDatatype, std::to_string(h.datatype));
  if (h.bitpix != bits) {
    throw Error(Errc::UnsupportedDatatype, std::to_string(h.datatype),
                "bitpix " + std::to_string(h.bitpix) + " inconsistent with datatype");
  }
  if (!(h.vox_offset >= static_cast<float>(kDataOffset))) {
    throw Error(Errc::BadMagic, "vox_offset", "single-file data must start at byte 352 or later");
  }
  return h;
}

}  // namespace nifti

std::pair<Tensor, VolumeMeta> decode_nifti(const std::vector<unsigned char>& bytes) {
  const NiftiHeader h = nifti::parse_header(bytes);
  Shape shape;
  VolumeMeta meta;
  meta.original_dtype = h.datatype;
  for (int i = h.dim_count; i >= 1; --i) {
    shape.push_back(h.dims[i]);
    const double s = std::abs(static_cast<double>(h.pixdim[i]));
    meta.spacing.push_back(s > 0 ? s : 1.0);
  }
  const auto count = static_cast<std::size_t>(numel(shape));
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  const std::size_t width = static_cast<std::size_t>(h.bitpix) / 8;
  const std::size_t needed = offset + count * width;
  if (bytes.size() < needed) {
    throw Error(Errc::TruncatedData, "voxels",
                "expected " + std::to_string(needed) + " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<float> data(count);
  const unsigned char* src = bytes.data() + offset;
  const Endian e = h.endianness;
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* q = src + i * width;
    switch (h.datatype) {
      case nifti::kUint8: data[i] = static_cast<float>(*q); break;
      case nifti::kInt16: data[i] = static_cast<float>(load<std::int16_t>(q, e)); break;
      case nifti::kInt32: data[i] = static_cast<float>(load<std::int32_t>(q, e)); break;
      case nifti::kFloat32: data[i] = load<float>(q, e); break;
      case nifti::kFloat64: data[i] = static_cast<float>(load<double>(q, e)); break;
    }
  }
  if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope)) {
    for (auto& v : data) v = v * h.scl_slope + h.scl_inter;
  }
  return {Tensor(std::move(shape), std::move(data)), std::move(meta)};
}

std::pair<Tensor, VolumeMeta> read_nifti(const std::filesystem::path& path) {
  auto result = decode_nifti(read_binary_file(path));
  result.second.source_path = path;
  return result;
}

std::vector<unsigned char> encode_nifti(const Tensor& t, const std::optional<VolumeMeta>& meta) {
  if (t.rank() != 2 && t.rank() != 3) {
    throw Error(Errc::RankError, to_string(t.shape()), "NIfTI export supports rank 2 or 3");
  }
  const auto rank = static_cast<std::size_t>(t.rank());
  std::vector<double> spacing(rank, 1.0);
  if (meta && !meta->spacing.empty()) {
    if (meta->spacing.size() != rank) throw Error(Errc::RankError, "spacing", "one spacing per axis required");
    spacing = meta->spacing;
  }
  for (auto d : t.shape()) {
    if (d > INT16_MAX) throw Error(Errc::RankError, to_string(t.shape()), "dimension exceeds int16 range");
  }

  std::vector<unsigned char> bytes(static_cast<std::size_t>(nifti::kDataOffset) + 4 * static_cast<std::size_t>(t.size()), 0);
  unsigned char* p = bytes.data();
  store_le<std::int32_t>(p, nifti::kHeaderSize);
  store_le<std::int16_t>(p + 40, static_cast<std::int16_t>(rank));
  for (std::size_t i = 0; i < 7; ++i) {
    const std::int16_t d = i < rank ? static_cast<std::int16_t>(t.shape()[rank - 1 - i]) : 1;
    store_le<std::int16_t>(p + 42 + 2 * i, d);
  }
  store_le<std::int16_t>(p + 70, nifti::kFloat32);
  store_le<std::int16_t>(p + 72, 32);
  store_le<float>(p + 76, 1.0f);  // qfac
  for (std::size_t i = 0; i < 7; ++i) {
    const float s = i < rank ? static_cast<float>(spacing[rank - 1 - i]) : 1.0f;
    store_le<float>(p + 80 + 4 * i, s);
  }
  store_le<float>(p + 108, static_cast<float>(nifti::kDataOffset));
  store_le<float>(p + 112, 1.0f);
  store_le<float>(p + 116, 0.0f);
  std::memcpy(p + 344, "n+1\0", 4);
  unsigned char* dst = p + nifti::kDataOffset;
  for (std::int64_t i = 0; i < t.size(); ++i) store_le<float>(dst + 4 * i, t[i]);
  return bytes;
}

void write_nifti(const std::filesystem::path& path, const Tensor& t, const std::optional<VolumeMeta>& meta) {
  write_binary_file(path, encode_nifti(t, meta));
}

std::vector<unsigned char> encode_rtf(const Tensor& t) {
  std::vector<unsigned char> bytes(8 + 4 * static_cast<std::size_t>(t.rank()) + 4 * static_cast<std::size_t>(t.size()));
  unsigned char* p = bytes.data();
  std::memcpy(p, "RTF1", 4);
  store_le<std::uint32_t>(p + 4, static_cast<std::uint32_t>(t.rank()));
  p += 8;
  for (auto d : t.shape()) {
    store_le<std::uint32_t>(p, static_cast<std::uint32_t>(d));
    p += 4;
  }
  for (float v : t.data()) {
    store_le<float>(p, v);
    p += 4;
  }
  return bytes;
}

Tensor decode_rtf(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "RTF1", 4) != 0) throw Error(Errc::BadMagic, "RTF1");
  const auto rank = load<std::uint32_t>(bytes.data() + 4, Endian::little);
  if (bytes.size() < 8 + 4 * static_cast<std::size_t>(rank)) {
    throw Error(Errc::TruncatedData, "dims", "header declares rank " + std::to_string(rank));
  }
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(load<std::uint32_t>(bytes.data() + 8 + 4 * i, Endian::little));
  const auto count = static_cast<std::size_t>(numel(shape));
  const std::size_t start = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < start + 4 * count) {
    throw Error(Errc::TruncatedData, "payload",
                "expected " + std::to_string(start + 4 * count) + " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = load<float>(bytes.data() + start + 4 * i, Endian::little);
  return Tensor(std::move(shape), std::move(data));
}

Tensor read_rtf(const std::filesystem::path& path) { return decode_rtf(read_binary_file(path)); }

void write_rtf(const std::filesystem::path& path, const Tensor& t) { write_binary_file(path, encode_rtf(t)); }

}  // namespace ember
