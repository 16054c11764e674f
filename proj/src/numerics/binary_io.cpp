#include "sbl/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sbl/error.hpp"

namespace sbl {

static_assert(std::endian::native == std::endian::little,
              "binary file I/O assumes a little-endian host");

void ByteWriter::bytes(const void* src, std::size_t n) {
  out_.append(static_cast<const char*>(src), n);
}
void ByteWriter::u32(std::uint32_t v) { bytes(&v, 4); }
void ByteWriter::f32(float v) { bytes(&v, 4); }
void ByteWriter::f64(double v) { bytes(&v, 8); }

ByteReader::ByteReader(std::string bytes, std::string what)
    : bytes_(std::move(bytes)), what_(std::move(what)) {}

void ByteReader::take(void* dst, std::size_t n) {
  if (bytes_.size() - pos_ < n) fail(ErrorKind::format, "truncated file " + what_);
  std::memcpy(dst, bytes_.data() + pos_, n);
  pos_ += n;
}

void ByteReader::expect_magic(std::string_view m) {
  std::string got(m.size(), '\0');
  take(got.data(), got.size());
  if (got != m) fail(ErrorKind::format, what_ + " lacks the " + std::string(m) + " header");
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v;
  take(&v, 4);
  return v;
}

float ByteReader::f32() {
  float v;
  take(&v, 4);
  return v;
}

double ByteReader::f64() {
  double v;
  take(&v, 8);
  return v;
}

void ByteReader::expect_end() const {
  if (!done()) fail(ErrorKind::format, "trailing bytes in " + what_);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::path, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::path, "cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::path, "short write to " + path.string());
}

}  // namespace sbl
