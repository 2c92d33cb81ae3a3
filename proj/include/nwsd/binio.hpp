#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "nwsd/errors.hpp"

namespace nwsd {

// Little-endian binary writer/reader shared by the NWSD feature files,
// NWSM checkpoints and NWSS score dumps. The reader tracks its byte
// offset so format errors can name where the file went wrong.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  void magic(const char tag[5]);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  void f64_array(const double* data, std::size_t n);
  void str(const std::string& s);  // u32 length + UTF-8 bytes
  void close();

 private:
  void bytes(const void* p, std::size_t n);
  std::ofstream out_;
  std::string path_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  void magic(const char tag[5]);
  std::uint8_t u8();
  std::uint32_t u32();
  double f64();
  void f64_array(double* data, std::size_t n);
  std::string str(std::uint32_t max_len = 1u << 20);
  std::size_t offset() const { return offset_; }
  bool at_eof();
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void bytes(void* p, std::size_t n);
  std::ifstream in_;
  std::string path_;
  std::size_t offset_ = 0;
};

}  // namespace nwsd
