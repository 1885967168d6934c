#ifndef FQZKIT_BYTES_HPP
#define FQZKIT_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fqzkit/errors.hpp"

namespace fqzkit {

using Bytes = std::vector<uint8_t>;

// ---- little-endian scalar put/get --------------------------------------

inline void put_u16(Bytes& out, uint16_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
}

inline void put_u32(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

inline void put_u64(Bytes& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

inline uint16_t get_u16(const uint8_t* p) {
    return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

inline uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
}

// ---- LEB128 varints -----------------------------------------------------

inline void put_varint(Bytes& out, uint64_t v) {
    while (v >= 0x80) {
        out.push_back(uint8_t(v) | 0x80);
        v >>= 7;
    }
    out.push_back(uint8_t(v));
}

inline size_t varint_size(uint64_t v) {
    size_t n = 1;
    while (v >= 0x80) { v >>= 7; ++n; }
    return n;
}

// Bounds-checked sequential reader over a byte span. Throws corruption_error
// on underrun, which callers surface with the field/chunk context.
class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

    size_t remaining() const { return size_ - pos_; }
    size_t pos() const { return pos_; }
    bool at_end() const { return pos_ == size_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint8_t peek_u8() const {
        need(1);
        return data_[pos_];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = get_u16(data_ + pos_);
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = get_u32(data_ + pos_);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = get_u64(data_ + pos_);
        pos_ += 8;
        return v;
    }
    uint64_t varint() {
        uint64_t v = 0;
        int shift = 0;
        for (;;) {
            uint8_t b = u8();
            if (shift >= 63 && (b & 0x7F) > 1)
                throw corruption_error("varint overflows 64 bits");
            v |= uint64_t(b & 0x7F) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
        }
    }
    const uint8_t* raw(size_t n) {
        need(n);
        const uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    Bytes bytes(size_t n) {
        const uint8_t* p = raw(n);
        return Bytes(p, p + n);
    }

private:
    void need(size_t n) const {
        if (size_ - pos_ < n) throw corruption_error("stream truncated");
    }
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

// ---- packed bit vector ---------------------------------------------------
//
// Bits are packed LSB-first: bit i lives in byte i/8 at position i%8.

class BitVec {
public:
    BitVec() = default;

    void push_back(bool bit) {
        if (nbits_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= uint8_t(1u << (nbits_ % 8));
        ++nbits_;
    }

    bool operator[](size_t i) const {
        return (bytes_[i / 8] >> (i % 8)) & 1u;
    }

    void set(size_t i, bool bit) {
        uint8_t mask = uint8_t(1u << (i % 8));
        if (bit)
            bytes_[i / 8] |= mask;
        else
            bytes_[i / 8] &= uint8_t(~mask);
    }

    size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }
    const Bytes& bytes() const { return bytes_; }

    static BitVec from_bytes(const Bytes& bytes, size_t nbits) {
        if (bytes.size() != (nbits + 7) / 8)
            throw corruption_error("bit stream size does not match bit count");
        BitVec v;
        v.bytes_ = bytes;
        v.nbits_ = nbits;
        return v;
    }

    bool operator==(const BitVec& o) const = default;

private:
    Bytes bytes_;
    size_t nbits_ = 0;
};

// ---- FNV-1a 64 ------------------------------------------------------------

inline uint64_t fnv1a64(const void* data, size_t size, uint64_t h = 14695981039346656037ull) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }
inline uint64_t fnv1a64(const Bytes& b) { return fnv1a64(b.data(), b.size()); }

} // namespace fqzkit

#endif
