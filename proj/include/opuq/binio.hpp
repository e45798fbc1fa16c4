#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace opuq {

/// Little-endian binary writer for the on-disk envelopes. All multi-byte
/// fields are written in little-endian order regardless of host.
class BinWriter {
public:
    explicit BinWriter(const std::string& path);
    ~BinWriter();

    void magic(const char (&tag)[9]);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(std::span<const double> v);   // count + payload
    void u64_array(std::span<const std::uint64_t> v);
    void text(const std::string& s);             // u64 length + UTF-8 bytes

    void close();

private:
    std::ofstream out_;
    std::string path_;
    void raw(const void* p, std::size_t n);
};

class BinReader {
public:
    explicit BinReader(const std::string& path);

    void expect_magic(const char (&tag)[9]);
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<double> f64_array();
    std::vector<std::uint64_t> u64_array();
    std::string text();

private:
    std::ifstream in_;
    std::string path_;
    std::uint64_t offset_ = 0;
    std::uint64_t size_ = 0;
    void raw(void* p, std::size_t n);
    [[noreturn]] void fail_truncated() const;
};

}  // namespace opuq
