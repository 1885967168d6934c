#pragma once

#include <cstdint>
#include <vector>

#include "fqzkit/bytes.hpp"

namespace fqzkit {

// MSB-first bit packing, shared by the quality coder and the block-sorting
// codec chain. Distinct from BitVec, which is an LSB-first bit container for
// per-read flags.

class BitWriter {
public:
    explicit BitWriter(Bytes& out) : out_(out) {}

    void put(uint32_t code, uint32_t count) {
        acc_ = (acc_ << count) | code;
        nacc_ += count;
        while (nacc_ >= 8) {
            out_.push_back(uint8_t(acc_ >> (nacc_ - 8)));
            nacc_ -= 8;
        }
    }

    // Pad the final partial byte with zero bits.
    void flush() {
        if (nacc_ > 0) {
            out_.push_back(uint8_t(acc_ << (8 - nacc_)));
            nacc_ = 0;
        }
        acc_ = 0;
    }

private:
    Bytes& out_;
    uint64_t acc_ = 0;
    uint32_t nacc_ = 0;
};

class MsbBitReader {
public:
    MsbBitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint32_t bit() {
        if (pos_ >= size_ * 8) throw corruption_error("bit stream truncated");
        uint32_t b = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
        ++pos_;
        return b;
    }

    size_t bits_read() const { return pos_; }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

// Optimal prefix-code lengths for the given frequencies (zero frequency means
// the symbol is absent and gets length 0). Lengths are capped at max_len by
// halving frequencies and rebuilding, which keeps the result deterministic.
std::vector<uint8_t> huffman_code_lengths(const std::vector<uint64_t>& freqs, uint32_t max_len);

// Canonical code values, assigned in (length, symbol) order. Entries with
// length 0 are left as 0 and must not be emitted.
std::vector<uint32_t> canonical_codes(const std::vector<uint8_t>& lengths);

// Canonical decoder over a code-length table. Rejects tables that violate
// Kraft equality (a lone symbol with a 1-bit code is the allowed exception).
class HuffmanDecoder {
public:
    explicit HuffmanDecoder(const std::vector<uint8_t>& lengths);

    uint32_t decode(MsbBitReader& in) const;

private:
    uint32_t max_len_ = 0;
    std::vector<uint32_t> count_;       // symbols per length
    std::vector<uint32_t> first_code_;  // smallest canonical code per length
    std::vector<uint32_t> first_sym_;   // offset into sorted_ per length
    std::vector<uint32_t> sorted_;      // symbols in (length, symbol) order
};

} // namespace fqzkit
