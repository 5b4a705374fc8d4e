#ifndef MIDISTEGA_BINIO_HPP
#define MIDISTEGA_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "midistega/errors.hpp"

namespace midistega {

// Little-endian fixed-width primitives for the model and weight files.

class BinWriter {
public:
    std::vector<std::uint8_t> bytes;

    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }

    template <typename T>
    void le(T value) {
        static_assert(std::is_integral_v<T>);
        auto u = static_cast<std::make_unsigned_t<T>>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bytes.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }

    void f64(double value) {
        std::uint64_t u;
        std::memcpy(&u, &value, sizeof(u));
        le<std::uint64_t>(u);
    }
};

class BinReader {
public:
    explicit BinReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }

    void raw(void* out, std::size_t n) {
        if (remaining() < n) throw TruncatedFile("file ends mid-record");
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }

    template <typename T>
    T le() {
        static_assert(std::is_integral_v<T>);
        if (remaining() < sizeof(T)) throw TruncatedFile("file ends mid-record");
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }

    double f64() {
        auto u = le<std::uint64_t>();
        double d;
        std::memcpy(&d, &u, sizeof(d));
        return d;
    }

    void expect_end() const {
        if (pos_ != data_.size()) throw TruncatedFile("trailing bytes after last record");
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TruncatedFile("cannot open file: " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TruncatedFile("cannot write file: " + path.string());
}

}  // namespace midistega

#endif
