#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace sbl {

// Little-endian byte buffers for the repo's binary file formats.
class ByteWriter {
 public:
  void magic(std::string_view m) { out_.append(m); }
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* src, std::size_t n);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string what);

  bool done() const { return pos_ == bytes_.size(); }
  void expect_magic(std::string_view m);
  void take(void* dst, std::size_t n);
  std::uint32_t u32();
  float f32();
  double f64();
  // Format error unless every byte was consumed.
  void expect_end() const;

 private:
  std::string bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

// Path errors name the offending file. write_file creates parent directories.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sbl
