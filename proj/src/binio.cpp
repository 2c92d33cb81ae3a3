#include "nwsd/binio.hpp"

#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping not implemented");

namespace nwsd {

BinWriter::BinWriter(const std::string& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw IoError("cannot open for writing: " + path);
}

void BinWriter::bytes(const void* p, std::size_t n) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed: " + path_);
}

void BinWriter::magic(const char tag[5]) { bytes(tag, 4); }
void BinWriter::u8(std::uint8_t v) { bytes(&v, 1); }
void BinWriter::u32(std::uint32_t v) { bytes(&v, 4); }
void BinWriter::f64(double v) { bytes(&v, 8); }
void BinWriter::f64_array(const double* data, std::size_t n) { bytes(data, n * 8); }

void BinWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  if (!s.empty()) bytes(s.data(), s.size());
}

void BinWriter::close() {
  out_.close();
  if (!out_) throw IoError("close failed: " + path_);
}

BinReader::BinReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw IoError("cannot open for reading: " + path);
}

void BinReader::fail(const std::string& what) const {
  throw FormatError(path_ + ": " + what + " at byte " + std::to_string(offset_));
}

void BinReader::bytes(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
  offset_ += n;
}

void BinReader::magic(const char tag[5]) {
  char got[4];
  bytes(got, 4);
  if (std::memcmp(got, tag, 4) != 0) {
    offset_ -= 4;
    fail(std::string("bad magic, expected '") + tag + "'");
  }
}

std::uint8_t BinReader::u8() {
  std::uint8_t v;
  bytes(&v, 1);
  return v;
}

std::uint32_t BinReader::u32() {
  std::uint32_t v;
  bytes(&v, 4);
  return v;
}

double BinReader::f64() {
  double v;
  bytes(&v, 8);
  return v;
}

void BinReader::f64_array(double* data, std::size_t n) { bytes(data, n * 8); }

std::string BinReader::str(std::uint32_t max_len) {
  const std::uint32_t n = u32();
  if (n > max_len) fail("string length " + std::to_string(n) + " too large");
  std::string s(n, '\0');
  if (n) bytes(s.data(), n);
  return s;
}

bool BinReader::at_eof() {
  return in_.peek() == std::ifstream::traits_type::eof();
}

}  // namespace nwsd
