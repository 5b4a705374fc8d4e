#ifndef MIDISTEGA_BITS_HPP
#define MIDISTEGA_BITS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace midistega {

// Bit sequences are kept unpacked (one byte per bit, value 0 or 1); payload
// sizes here are small and the codec walks them bit by bit anyway.
using BitString = std::vector<std::uint8_t>;

// MSB-first within each byte.
inline BitString bits_from_bytes(std::span<const std::uint8_t> bytes) {
    BitString bits;
    bits.reserve(bytes.size() * 8);
    for (std::uint8_t b : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
    return bits;
}

inline std::vector<std::uint8_t> bytes_from_bits(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
    for (std::size_t i = 0; i < bytes.size() * 8; ++i)
        bytes[i / 8] = static_cast<std::uint8_t>((bytes[i / 8] << 1) | (bits[i] & 1));
    return bytes;
}

// Sequential reader over a bit string. Once the real bits run out, reads
// return zero padding; consumption of real bits is tracked separately.
class BitReader {
public:
    explicit BitReader(const BitString& bits) : bits_(bits) {}

    bool exhausted() const { return pos_ >= bits_.size(); }
    std::size_t consumed() const { return pos_; }

    // Next bit, or 0 once the stream is exhausted. `real` reports whether the
    // bit came from the stream.
    int next_or_pad(bool& real) {
        if (pos_ < bits_.size()) {
            real = true;
            return bits_[pos_++];
        }
        real = false;
        return 0;
    }

private:
    const BitString& bits_;
    std::size_t pos_ = 0;
};

}  // namespace midistega

#endif
