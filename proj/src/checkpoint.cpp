#include "skillforge/checkpoint.hpp"

#include <cstring>

namespace skillforge {

namespace {

constexpr std::size_t kMagicLen = 8;

std::string pad_magic(std::string_view magic) {
    std::string m(magic);
    if (m.size() > kMagicLen) throw std::logic_error("blob magic too long");
    m.resize(kMagicLen, ' ');
    return m;
}

}  // namespace

BlobWriter::BlobWriter(const std::filesystem::path& path, std::string_view magic, std::uint32_t version)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!os_) throw IoError("cannot open for writing: " + path.string());
    std::string m = pad_magic(magic);
    os_.write(m.data(), kMagicLen);
    put_u32(version);
}

BlobWriter::~BlobWriter() {
    if (!finished_ && os_.is_open()) os_.close();
}

void BlobWriter::put_u32(std::uint32_t v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BlobWriter::put_u64(std::uint64_t v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BlobWriter::put_i64(std::int64_t v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BlobWriter::put_f64(double v) { os_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BlobWriter::put_string(const std::string& s) {
    put_u64(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BlobWriter::put_doubles(const double* data, std::size_t n) {
    os_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void BlobWriter::put_vector(const Vector& v) {
    put_u64(static_cast<std::uint64_t>(v.size()));
    put_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

void BlobWriter::put_matrix(const Matrix& m) {
    put_u64(static_cast<std::uint64_t>(m.rows()));
    put_u64(static_cast<std::uint64_t>(m.cols()));
    put_doubles(m.data(), static_cast<std::size_t>(m.size()));
}

void BlobWriter::finish() {
    os_.flush();
    if (!os_) throw IoError("write failure: " + path_.string());
    os_.close();
    finished_ = true;
}

BlobReader::BlobReader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version)
    : is_(path, std::ios::binary), path_(path) {
    if (!is_) throw IoError("cannot open for reading: " + path.string());
    char buf[kMagicLen];
    is_.read(buf, kMagicLen);
    if (!is_ || std::memcmp(buf, pad_magic(magic).data(), kMagicLen) != 0)
        fail("bad magic (expected '" + std::string(magic) + "')");
    std::uint32_t v = get_u32();
    if (v != version)
        fail("unsupported format version " + std::to_string(v) + ", expected " + std::to_string(version));
}

void BlobReader::fail(const std::string& what) const {
    throw IoError(path_.string() + ": " + what);
}

std::uint32_t BlobReader::get_u32() {
    std::uint32_t v;
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) fail("truncated blob");
    return v;
}

std::uint64_t BlobReader::get_u64() {
    std::uint64_t v;
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) fail("truncated blob");
    return v;
}

std::int64_t BlobReader::get_i64() {
    std::int64_t v;
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) fail("truncated blob");
    return v;
}

double BlobReader::get_f64() {
    double v;
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) fail("truncated blob");
    return v;
}

std::string BlobReader::get_string() {
    std::uint64_t n = get_u64();
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    if (!is_) fail("truncated blob");
    return s;
}

void BlobReader::get_doubles(double* data, std::size_t n) {
    is_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is_) fail("truncated blob");
}

Vector BlobReader::get_vector() {
    auto n = get_u64();
    Vector v(static_cast<Eigen::Index>(n));
    get_doubles(v.data(), n);
    return v;
}

Matrix BlobReader::get_matrix() {
    auto r = get_u64();
    auto c = get_u64();
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    get_doubles(m.data(), static_cast<std::size_t>(m.size()));
    return m;
}

}  // namespace skillforge
