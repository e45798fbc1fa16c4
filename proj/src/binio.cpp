#include "opuq/binio.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace opuq {

static_assert(std::endian::native == std::endian::little,
              "on-disk format is little-endian; big-endian hosts unsupported");

BinWriter::BinWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot open for write: " + path);
}

BinWriter::~BinWriter() = default;

void BinWriter::raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw std::runtime_error("write failed: " + path_);
}

void BinWriter::magic(const char (&tag)[9]) { raw(tag, 8); }
void BinWriter::u32(std::uint32_t v) { raw(&v, 4); }
void BinWriter::u64(std::uint64_t v) { raw(&v, 8); }
void BinWriter::f64(double v) { raw(&v, 8); }

void BinWriter::f64_array(std::span<const double> v) {
    u64(v.size());
    raw(v.data(), v.size() * 8);
}

void BinWriter::u64_array(std::span<const std::uint64_t> v) {
    u64(v.size());
    raw(v.data(), v.size() * 8);
}

void BinWriter::text(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
}

void BinWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("close failed: " + path_);
}

BinReader::BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open for read: " + path);
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);
}

void BinReader::fail_truncated() const {
    throw std::runtime_error("unexpected end of stream in " + path_ + " at offset " +
                             std::to_string(offset_));
}

void BinReader::raw(void* p, std::size_t n) {
    if (offset_ + n > size_) fail_truncated();
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) fail_truncated();
    offset_ += n;
}

void BinReader::expect_magic(const char (&tag)[9]) {
    char got[9] = {};
    raw(got, 8);
    if (std::memcmp(got, tag, 8) != 0)
        throw std::runtime_error("bad magic in " + path_ + " at offset " +
                                 std::to_string(offset_ - 8) + " (expected " +
                                 std::string(tag, 8) + ")");
}

std::uint32_t BinReader::u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
}

std::uint64_t BinReader::u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
}

double BinReader::f64() {
    double v;
    raw(&v, 8);
    return v;
}

std::vector<double> BinReader::f64_array() {
    const std::uint64_t n = u64();
    if (n > (size_ - offset_) / 8) fail_truncated();
    std::vector<double> v(n);
    raw(v.data(), n * 8);
    return v;
}

std::vector<std::uint64_t> BinReader::u64_array() {
    const std::uint64_t n = u64();
    if (n > (size_ - offset_) / 8) fail_truncated();
    std::vector<std::uint64_t> v(n);
    raw(v.data(), n * 8);
    return v;
}

std::string BinReader::text() {
    const std::uint64_t n = u64();
    if (n > size_ - offset_) fail_truncated();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
}

}  // namespace opuq
