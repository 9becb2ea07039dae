#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "skillforge/common.hpp"

namespace skillforge {

/// Binary checkpoint blobs. Every file starts with an 8-byte magic tag and a
/// u32 format version; readers reject anything else. Numbers are little-endian.
class BlobWriter {
public:
    BlobWriter(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);
    ~BlobWriter();

    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i64(std::int64_t v);
    void put_f64(double v);
    void put_string(const std::string& s);
    void put_doubles(const double* data, std::size_t n);
    void put_vector(const Vector& v);
    void put_matrix(const Matrix& m);

    /// Flushes and closes; throws IoError if the stream went bad.
    void finish();

private:
    std::ofstream os_;
    std::filesystem::path path_;
    bool finished_ = false;
};

class BlobReader {
public:
    BlobReader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);

    std::uint32_t get_u32();
    std::uint64_t get_u64();
    std::int64_t get_i64();
    double get_f64();
    std::string get_string();
    void get_doubles(double* data, std::size_t n);
    Vector get_vector();
    Matrix get_matrix();

private:
    std::ifstream is_;
    std::filesystem::path path_;
    void fail(const std::string& what) const;
};

}  // namespace skillforge
