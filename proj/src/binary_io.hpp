#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qpar/errors.hpp"

namespace qpar {

static_assert(std::endian::native == std::endian::little,
              "binary dumps assume a little-endian host");

class BinaryWriter {
 public:
  void magic(const char* m) { raw(m, 4); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void c128(std::complex<double> v) {
    f64(v.real());
    f64(v.imag());
  }
  void f64s(const std::vector<double>& v) { raw(v.data(), v.size() * sizeof(double)); }
  void u8s(const std::vector<std::uint8_t>& v) { raw(v.data(), v.size()); }
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(buf_.data(), std::streamsize(buf_.size()));
  }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + name_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  void expect_magic(const char* m) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, m, 4) != 0) throw Error(name_ + ": bad magic bytes");
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  double f64() { return pod<double>(); }
  std::complex<double> c128() {
    const double re = f64();
    return {re, f64()};
  }
  std::vector<double> f64s(std::size_t n) {
    std::vector<double> v(n);
    raw(v.data(), n * sizeof(double));
    return v;
  }
  std::vector<std::uint8_t> u8s(std::size_t n) {
    std::vector<std::uint8_t> v(n);
    raw(v.data(), n);
    return v;
  }
  void expect_end() const {
    if (pos_ != buf_.size()) throw Error(name_ + ": trailing bytes");
  }

 private:
  template <class T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw Error(name_ + ": truncated file");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string name_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace qpar
