#include <algorithm>
#include <cstring>
#include <random>

#include "doctest.h"
#include "ember/io.hpp"
#include "support/expect.hpp"
#include "support/nifti_bytes.hpp"
#include "support/tempdir.hpp"

using namespace ember;
using testing::to_big_endian;

namespace {

using Bytes = std::vector<unsigned char>;

template <class T>
T get(const Bytes& b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof v);
  return v;
}

template <class T>
void put(Bytes& b, std::size_t off, T v) {
  std::memcpy(b.data() + off, &v, sizeof v);
}

Tensor cube() { return Tensor({2, 2, 2}, {1, -2, 3.5f, 0, 7, 8, -0.25f, 1e6f}); }

}  // namespace

TEST_CASE("nifti read of raw values") {
  testing::TempDir dir;
  Bytes b = encode_nifti(cube());
  put<float>(b, 112, 0.0f);
  put<float>(b, 116, 5.0f);
  write_binary_file(dir / "raw.nii", b);
  const auto [t, meta] = read_nifti(dir / "raw.nii");
  CHECK(t.shape() == Shape{2, 2, 2});
  CHECK(bitwise_equal(t, cube()));
  CHECK(meta.spacing == std::vector<double>{1, 1, 1});
  CHECK(meta.original_dtype == nifti::kFloat32);
  CHECK(meta.source_path == dir / "raw.nii");
}

TEST_CASE("nifti intensity scaling") {
  Bytes b = encode_nifti(cube());
  put<float>(b, 112, 2.0f);
  put<float>(b, 116, 1.0f);
  const Tensor t = decode_nifti(b).first;
  for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 2 * cube()[i] + 1);
}

TEST_CASE("nifti header defaults") {
  const Bytes b = encode_nifti(Tensor({3, 4, 5}));
  CHECK(get<std::int32_t>(b, 0) == 348);
  CHECK(get<std::int16_t>(b, 40) == 3);
  CHECK(get<std::int16_t>(b, 42) == 5);
  CHECK(get<std::int16_t>(b, 44) == 4);
  CHECK(get<std::int16_t>(b, 46) == 3);
  CHECK(get<std::int16_t>(b, 70) == 16);
  CHECK(get<std::int16_t>(b, 72) == 32);
  for (int i = 1; i <= 3; ++i) CHECK(get<float>(b, 76 + 4 * i) == 1.0f);
  CHECK(get<float>(b, 108) == 352.0f);
  CHECK(get<float>(b, 112) == 1.0f);
  CHECK(get<float>(b, 116) == 0.0f);
  CHECK(std::memcmp(b.data() + 344, "n+1\0", 4) == 0);
  CHECK(b.size() == 352 + 4 * 60);
}

TEST_CASE("nifti rejects bad input") {
  const Bytes good = encode_nifti(cube());
  Bytes magic = good;
  std::memcpy(magic.data() + 344, "abc\0", 4);
  CHECK_ERRC(decode_nifti(magic), Errc::BadMagic);
  std::memcpy(magic.data() + 344, "ni1\0", 4);
  CHECK_ERRC(decode_nifti(magic), Errc::BadMagic);

  Bytes size = good;
  put<std::int32_t>(size, 0, 540);
  CHECK_ERRC(decode_nifti(size), Errc::BadMagic);

  Bytes dtype = good;
  put<std::int16_t>(dtype, 70, 128);
  CHECK_ERRC(decode_nifti(dtype), Errc::UnsupportedDatatype);
  Bytes bitpix = good;
  put<std::int16_t>(bitpix, 72, 16);
  CHECK_ERRC(decode_nifti(bitpix), Errc::UnsupportedDatatype);

  CHECK_ERRC(decode_nifti(Bytes(good.begin(), good.end() - 1)), Errc::TruncatedData);
  CHECK_ERRC(decode_nifti(Bytes(good.begin(), good.begin() + 100)), Errc::TruncatedData);

  Bytes dims = good;
  put<std::int16_t>(dims, 42, 0);
  CHECK_ERRC(decode_nifti(dims), Errc::BadMagic);
  Bytes offset = good;
  put<float>(offset, 108, 100.0f);
  CHECK_ERRC(decode_nifti(offset), Errc::BadMagic);

  testing::TempDir dir;
  CHECK_ERRC(read_nifti(dir / "missing.nii"), Errc::FileError);
  CHECK_ERRC(write_nifti(dir / "no" / "such" / "dir.nii", cube()), Errc::FileError);
}

TEST_CASE("nifti write rank limits") {
  CHECK_ERRC(encode_nifti(Tensor({1, 2, 2, 2})), Errc::RankError);
  CHECK_ERRC(encode_nifti(Tensor::vector({1, 2})), Errc::RankError);
  CHECK_NOTHROW(encode_nifti(Tensor({2, 3})));
}

TEST_CASE("nifti integer datatypes are promoted") {
  Bytes b = encode_nifti(Tensor({2, 2}));
  b.resize(352 + 4 * 2);
  put<std::int16_t>(b, 70, nifti::kInt16);
  put<std::int16_t>(b, 72, 16);
  const std::int16_t v[4] = {-3, 0, 12, 32767};
  std::memcpy(b.data() + 352, v, sizeof v);
  const auto [t, meta] = decode_nifti(b);
  CHECK(t == Tensor({2, 2}, {-3, 0, 12, 32767}));
  CHECK(meta.original_dtype == nifti::kInt16);

  Bytes u8 = encode_nifti(Tensor({1, 3}));
  u8.resize(352 + 3);
  put<std::int16_t>(u8, 70, nifti::kUint8);
  put<std::int16_t>(u8, 72, 8);
  u8[352] = 0;
  u8[353] = 128;
  u8[354] = 255;
  CHECK(decode_nifti(u8).first == Tensor({1, 3}, {0, 128, 255}));

  Bytes f64 = encode_nifti(Tensor({1, 2}));
  f64.resize(352 + 16);
  put<std::int16_t>(f64, 70, nifti::kFloat64);
  put<std::int16_t>(f64, 72, 64);
  put<double>(f64, 352, 0.5);
  put<double>(f64, 360, -4.0);
  CHECK(decode_nifti(f64).first == Tensor({1, 2}, {0.5f, -4.0f}));
}

TEST_CASE("nifti round trip over random tensors") {
  testing::TempDir dir;
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> dim(1, 9), rank(2, 3);
  std::uniform_real_distribution<float> val(-1e4f, 1e4f), sp(0.1f, 5.0f);
  for (int k = 0; k < 50; ++k) {
    Shape shape;
    const int r = rank(gen);
    for (int i = 0; i < r; ++i) shape.push_back(dim(gen));
    std::vector<float> data(static_cast<std::size_t>(numel(shape)));
    for (auto& v : data) v = val(gen);
    const Tensor t(shape, data);
    VolumeMeta meta;
    for (int i = 0; i < r; ++i) meta.spacing.push_back(static_cast<float>(sp(gen)));
    const auto path = dir / ("v" + std::to_string(k) + ".nii");
    write_nifti(path, t, meta);
    const auto [back, back_meta] = read_nifti(path);
    CHECK(bitwise_equal(back, t));
    CHECK(back_meta.spacing == meta.spacing);

    const auto [big, big_meta] = decode_nifti(to_big_endian(encode_nifti(t, meta)));
    CHECK(bitwise_equal(big, t));
    CHECK(big_meta.spacing == meta.spacing);
  }
}

TEST_CASE("big-endian header is detected") {
  const Bytes be = to_big_endian(encode_nifti(cube()));
  CHECK(nifti::parse_header(be).endianness == Endian::big);
  CHECK(nifti::parse_header(encode_nifti(cube())).endianness == Endian::little);
}

TEST_CASE("rtf round trip") {
  testing::TempDir dir;
  const Tensor v = Tensor::vector({1, 2, 3});
  write_rtf(dir / "v.rtf", v);
  CHECK(bitwise_equal(read_rtf(dir / "v.rtf"), v));

  const Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor back = decode_rtf(encode_rtf(m));
  CHECK(back.shape() == Shape{2, 3});
  CHECK(bitwise_equal(back, m));
  CHECK(bitwise_equal(decode_rtf(encode_rtf(Tensor::scalar(-0.0f))), Tensor::scalar(-0.0f)));

  const Bytes b = encode_rtf(m);
  CHECK(std::memcmp(b.data(), "RTF1", 4) == 0);
  CHECK(get<std::uint32_t>(b, 4) == 2);
  CHECK(get<std::uint32_t>(b, 8) == 2);
  CHECK(get<std::uint32_t>(b, 12) == 3);
  CHECK(b.size() == 16 + 24);

  write_binary_file(dir / "empty.rtf", {});
  CHECK_ERRC(read_rtf(dir / "empty.rtf"), Errc::BadMagic);
  Bytes bad = b;
  bad[0] = 'X';
  CHECK_ERRC(decode_rtf(bad), Errc::BadMagic);
  CHECK_ERRC(decode_rtf(Bytes(b.begin(), b.end() - 4)), Errc::TruncatedData);
  CHECK_ERRC(decode_rtf(Bytes(b.begin(), b.begin() + 10)), Errc::TruncatedData);
}
